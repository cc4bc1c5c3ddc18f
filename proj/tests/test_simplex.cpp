#include "relucert/lp.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace relucert;

TEST_SUITE("simplex") {

TEST_CASE("single variable max at its constraint") {
    LinearProgram lp;
    int x = lp.add_var(0.0, kInf);
    lp.add_row({{x, 1.0}}, Rel::Le, 3.0);
    lp.set_objective({{x, 1.0}}, Sense::Max);
    LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective_value == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(s.primal[0] == doctest::Approx(3.0));
}

TEST_CASE("relaxed big-M triangle at x = 0 peaks at the chord midpoint") {
    // LB=-1, UB=1, x fixed to 0, maximize zhat: expect UB(x-LB)/(UB-LB) = 0.5 at a = 0.5.
    LinearProgram lp;
    int x = lp.add_var(-1.0, 1.0);
    int zh = lp.add_var(0.0, 1.0);
    int a = lp.add_var(0.0, 1.0);
    lp.add_row({{zh, 1.0}, {x, -1.0}}, Rel::Ge, 0.0);
    lp.add_row({{zh, 1.0}, {a, -1.0}}, Rel::Le, 0.0);                // zhat <= UB a
    lp.add_row({{zh, 1.0}, {x, -1.0}, {a, 1.0}}, Rel::Le, 1.0);     // zhat <= x - LB(1-a)
    lp.add_row({{x, 1.0}}, Rel::Eq, 0.0);
    lp.set_objective({{zh, 1.0}}, Sense::Max);
    LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective_value == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(s.primal[static_cast<std::size_t>(a)] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("contradictory rows are infeasible") {
    LinearProgram lp;
    int x = lp.add_var(-kInf, kInf);
    lp.add_row({{x, 1.0}}, Rel::Le, 0.0);
    lp.add_row({{x, 1.0}}, Rel::Ge, 1.0);
    lp.set_objective({{x, 1.0}}, Sense::Max);
    CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded ray is reported") {
    LinearProgram lp;
    int x = lp.add_var(0.0, kInf);
    int y = lp.add_var(0.0, kInf);
    lp.add_row({{x, 1.0}, {y, -1.0}}, Rel::Le, 1.0);
    lp.set_objective({{x, 1.0}}, Sense::Max);
    CHECK(solve_lp(lp).status == LpStatus::Unbounded);
}

TEST_CASE("minimization works through negation") {
    LinearProgram lp;
    int x = lp.add_var(-2.0, 5.0);
    int y = lp.add_var(0.0, 4.0);
    lp.add_row({{x, 1.0}, {y, 1.0}}, Rel::Ge, 1.0);
    lp.set_objective({{x, 3.0}, {y, 1.0}}, Sense::Min);
    LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    // x = -2 forces y >= 3 -> objective -6 + 3 = -3
    CHECK(s.objective_value == doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("random LPs match the vertex-enumeration oracle") {
    std::mt19937_64 rng(20240817);
    int solved = 0;
    for (int trial = 0; trial < 140 && solved < 60; ++trial) {
        std::uniform_int_distribution<int> nd(2, 6), md(2, 6);
        std::uniform_real_distribution<double> coef(-2.0, 2.0), rhs(0.5, 3.0);
        int n = nd(rng), m = md(rng);
        LinearProgram lp;
        for (int j = 0; j < n; ++j)
            lp.add_var(-1.5, 1.5);
        for (int i = 0; i < m; ++i) {
            SparseRow row;
            for (int j = 0; j < n; ++j)
                row.emplace_back(j, coef(rng));
            // x = 0 stays feasible for every relation used here
            if (i % 3 == 2)
                lp.add_row(std::move(row), Rel::Ge, -rhs(rng));
            else
                lp.add_row(std::move(row), Rel::Le, rhs(rng));
        }
        SparseRow obj;
        for (int j = 0; j < n; ++j)
            obj.emplace_back(j, coef(rng));
        lp.set_objective(std::move(obj), rng() % 2 == 0 ? Sense::Max : Sense::Min);

        LpSolution s = solve_lp(lp);
        REQUIRE(s.status == LpStatus::Optimal);
        double oracle = 0.0;
        bool feasible = testutil::vertex_enum_lp(lp, oracle);
        REQUIRE(feasible);
        CHECK(s.objective_value == doctest::Approx(oracle).epsilon(1e-6));
        ++solved;
    }
    CHECK(solved >= 60);
}

TEST_CASE("optimal solutions satisfy all rows within feas_tol") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<int> nd(3, 8), md(3, 10);
        std::uniform_real_distribution<double> coef(-1.0, 1.0);
        int n = nd(rng), m = md(rng);
        LinearProgram lp;
        for (int j = 0; j < n; ++j)
            lp.add_var(j % 2 == 0 ? -3.0 : 0.0, 2.0 + j);
        for (int i = 0; i < m; ++i) {
            SparseRow row;
            for (int j = 0; j < n; ++j)
                row.emplace_back(j, coef(rng));
            Rel rel = i % 3 == 0 ? Rel::Ge : Rel::Le;
            lp.add_row(std::move(row), rel, coef(rng) * (rel == Rel::Ge ? -2.0 : 2.0));
        }
        SparseRow obj;
        for (int j = 0; j < n; ++j)
            obj.emplace_back(j, coef(rng));
        lp.set_objective(std::move(obj), Sense::Max);

        LpSolution s = solve_lp(lp);
        if (s.status != LpStatus::Optimal)
            continue;
        double recomputed = 0.0;
        for (auto [j, c] : lp.objective)
            recomputed += c * s.primal[static_cast<std::size_t>(j)];
        CHECK(std::abs(recomputed - s.objective_value) <= 1e-7);
        for (const auto& row : lp.rows) {
            double act = 0.0;
            for (auto [j, c] : row.coeffs)
                act += c * s.primal[static_cast<std::size_t>(j)];
            if (row.rel == Rel::Le)
                CHECK(act <= row.rhs + 1e-7);
            else if (row.rel == Rel::Ge)
                CHECK(act >= row.rhs - 1e-7);
            else
                CHECK(std::abs(act - row.rhs) <= 1e-7);
        }
        for (int j = 0; j < n; ++j) {
            CHECK(s.primal[static_cast<std::size_t>(j)] >= lp.vars[static_cast<std::size_t>(j)].lb - 1e-7);
            CHECK(s.primal[static_cast<std::size_t>(j)] <= lp.vars[static_cast<std::size_t>(j)].ub + 1e-7);
        }
    }
}

TEST_CASE("identical inputs give identical solutions") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    LinearProgram lp;
    for (int j = 0; j < 6; ++j)
        lp.add_var(-2.0, 2.0);
    for (int i = 0; i < 8; ++i) {
        SparseRow row;
        for (int j = 0; j < 6; ++j)
            row.emplace_back(j, coef(rng));
        lp.add_row(std::move(row), Rel::Le, 1.0);
    }
    SparseRow obj;
    for (int j = 0; j < 6; ++j)
        obj.emplace_back(j, coef(rng));
    lp.set_objective(std::move(obj), Sense::Max);

    LpSolution a = solve_lp(lp);
    LpSolution b = solve_lp(lp);
    REQUIRE(a.status == b.status);
    CHECK(a.objective_value == b.objective_value);
    for (std::size_t j = 0; j < a.primal.size(); ++j)
        CHECK(a.primal[j] == b.primal[j]);
}

TEST_CASE("iteration limit is reported, not thrown") {
    LinearProgram lp;
    for (int j = 0; j < 6; ++j)
        lp.add_var(0.0, 10.0);
    for (int i = 0; i < 6; ++i) {
        SparseRow row;
        for (int j = 0; j < 6; ++j)
            row.emplace_back(j, (i + 1) * (j + 2) % 5 + 0.5);
        lp.add_row(std::move(row), Rel::Le, 7.0);
    }
    SparseRow obj;
    for (int j = 0; j < 6; ++j)
        obj.emplace_back(j, 1.0);
    lp.set_objective(std::move(obj), Sense::Max);
    SimplexConfig cfg;
    cfg.max_iters = 1;
    CHECK(solve_lp(lp, cfg).status == LpStatus::IterationLimit);
}

TEST_CASE("free variables reach negative optima") {
    LinearProgram lp;
    int x = lp.add_var(-kInf, kInf);
    int y = lp.add_var(-kInf, kInf);
    lp.add_row({{x, 1.0}, {y, 1.0}}, Rel::Eq, -4.0);
    lp.add_row({{x, 1.0}, {y, -1.0}}, Rel::Le, 2.0);
    lp.set_objective({{x, 1.0}}, Sense::Max);
    LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective_value == doctest::Approx(-1.0).epsilon(1e-9));
}

} // TEST_SUITE
