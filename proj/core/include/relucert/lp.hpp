#pragma once

#include "relucert/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace relucert {

enum class Rel { Le, Eq, Ge };
enum class Sense { Max, Min };

using SparseRow = std::vector<std::pair<int, double>>;

/// Dense LP with box-bounded variables (-inf/+inf allowed on either side).
struct LinearProgram {
    struct Var {
        double lb = -kInf;
        double ub = kInf;
    };
    struct Row {
        SparseRow coeffs;
        Rel rel = Rel::Le;
        double rhs = 0.0;
    };

    std::vector<Var> vars;
    std::vector<Row> rows;
    SparseRow objective;
    Sense sense = Sense::Max;

    int add_var(double lb, double ub);
    void add_row(SparseRow coeffs, Rel rel, double rhs);
    void set_objective(SparseRow coeffs, Sense s);

    int num_vars() const { return static_cast<int>(vars.size()); }
    int num_rows() const { return static_cast<int>(rows.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double objective_value = 0.0;
    Vec primal; // one value per declared variable
};

struct SimplexConfig {
    double feas_tol = 1e-7;
    double opt_tol = 1e-9;
    int degen_streak_before_bland = 20;
    long max_iters = 0; // 0 -> 50 * (vars + rows)
};

/// Two-phase bounded-variable primal simplex. Dantzig pricing, Bland fallback
/// after a degenerate streak; ratio-test ties broken by lowest variable index.
LpSolution solve_lp(const LinearProgram& lp, const SimplexConfig& cfg = {});

const char* to_string(LpStatus s);

} // namespace relucert
