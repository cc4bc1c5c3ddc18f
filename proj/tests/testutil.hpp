#pragma once

#include "relucert/bounds.hpp"
#include "relucert/lp.hpp"
#include "relucert/network.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testutil {

using namespace relucert;

// 2-2-2 network: n3 = n1 + n2, n4 = n1 - n2; n5 = zhat3 + 2 zhat4, n6 = zhat4.
inline Network fig1_net() {
    Mat w1(2, 2);
    w1(0, 0) = 1;
    w1(0, 1) = 1;
    w1(1, 0) = 1;
    w1(1, 1) = -1;
    Mat w2(2, 2);
    w2(0, 0) = 1;
    w2(0, 1) = 2;
    w2(1, 0) = 0;
    w2(1, 1) = 1;
    return Network({{w1, {0, 0}}, {w2, {0, 0}}});
}

inline InputRegion fig1_region() {
    return {{0.0, 0.0}, 1.0, {}, {}};
}

// Chain x -> a -> (ReLU) -> b (weight c) -> (ReLU) -> z (weight d), no bias.
inline Network fig2_net(double c, double d) {
    Mat w1(1, 1);
    w1(0, 0) = 1;
    Mat w2(1, 1);
    w2(0, 0) = c;
    Mat w3(1, 1);
    w3(0, 0) = d;
    return Network({{w1, {0}}, {w2, {0}}, {w3, {0}}});
}

// The worked example postulates [-1, 1] for both hidden neurons.
inline BoundsMap fig2_bounds() {
    BoundsMap bm;
    bm.push_layer({{-1.0, 1.0}});
    bm.push_layer({{-1.0, 1.0}});
    return bm;
}

inline InputRegion fig2_region() {
    return {{0.0}, 1.0, {}, {}};
}

struct NetGen {
    std::mt19937_64 rng;

    explicit NetGen(std::uint64_t seed) : rng(seed) {}

    double uni(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    int uint_in(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

    Network random_net(const std::vector<int>& dims, double wscale = 1.0, double bscale = 0.3) {
        std::vector<AffineLayer> layers;
        for (std::size_t i = 1; i < dims.size(); ++i) {
            std::size_t rows = static_cast<std::size_t>(dims[i]);
            std::size_t cols = static_cast<std::size_t>(dims[i - 1]);
            Mat w(rows, cols);
            double s = wscale / std::sqrt(static_cast<double>(cols));
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    w(r, c) = uni(-s, s) * 2.0;
            Vec b(rows);
            for (double& x : b)
                x = uni(-bscale, bscale);
            layers.push_back({std::move(w), std::move(b)});
        }
        return Network(std::move(layers));
    }

    InputRegion random_region(int dim, double eps) {
        Vec center(static_cast<std::size_t>(dim));
        for (double& x : center)
            x = uni(-0.5, 0.5);
        return {center, eps, {}, {}};
    }

    Vec random_point(const InputRegion& region) {
        Vec lo = region.effective_lo(), hi = region.effective_hi();
        Vec x(lo.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = uni(lo[i], hi[i]);
        return x;
    }
};

inline int count_unstable(const Network& net, const BoundsMap& bm) {
    int n = 0;
    for (int k = 1; k < net.num_layers(); ++k)
        for (int j = 0; j < net.layer_dim(k); ++j)
            if (bm.unstable({k, j}))
                ++n;
    return n;
}

inline Vec finite_diff_gradient(const Network& net, const Vec& x, const Vec& coeffs,
                                double h = 1e-5) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        double fp = 0.0, fm = 0.0;
        Vec op = forward(net, xp).output();
        Vec om = forward(net, xm).output();
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            fp += coeffs[j] * op[j];
            fm += coeffs[j] * om[j];
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Exhaustive grid maximum of an objective over a 2-D input box.
inline double grid_max(const Network& net, const InputRegion& region, const Vec& coeffs,
                       int steps = 200) {
    Vec lo = region.effective_lo(), hi = region.effective_hi();
    double best = -kInf;
    Vec x(2);
    for (int i = 0; i <= steps; ++i) {
        x[0] = lo[0] + (hi[0] - lo[0]) * i / steps;
        for (int j = 0; j <= steps; ++j) {
            x[1] = lo[1] + (hi[1] - lo[1]) * j / steps;
            Vec out = forward(net, x).output();
            double v = 0.0;
            for (std::size_t k = 0; k < coeffs.size(); ++k)
                v += coeffs[k] * out[k];
            best = std::max(best, v);
        }
    }
    return best;
}

// Brute-force LP oracle: enumerate candidate basic points (intersections of
// n active constraints drawn from rows-at-equality and variable bounds), keep
// the feasible ones, and return the best objective. Exact up to the linear solve.
inline bool vertex_enum_lp(const LinearProgram& lp, double& best_value) {
    const int n = lp.num_vars();
    std::vector<std::pair<Vec, double>> planes; // a.x = b candidates
    for (const auto& row : lp.rows) {
        Vec a(static_cast<std::size_t>(n), 0.0);
        for (auto [j, c] : row.coeffs)
            a[static_cast<std::size_t>(j)] += c;
        planes.emplace_back(a, row.rhs);
    }
    for (int j = 0; j < n; ++j) {
        const auto& v = lp.vars[static_cast<std::size_t>(j)];
        if (std::isfinite(v.lb)) {
            Vec a(static_cast<std::size_t>(n), 0.0);
            a[static_cast<std::size_t>(j)] = 1.0;
            planes.emplace_back(a, v.lb);
        }
        if (std::isfinite(v.ub) && v.ub != v.lb) {
            Vec a(static_cast<std::size_t>(n), 0.0);
            a[static_cast<std::size_t>(j)] = 1.0;
            planes.emplace_back(a, v.ub);
        }
    }

    const int p = static_cast<int>(planes.size());
    std::vector<int> pick(static_cast<std::size_t>(n));
    bool found = false;
    best_value = -kInf;
    const bool maximize = lp.sense == Sense::Max;
    if (!maximize)
        best_value = kInf;

    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n) {
            // Solve the n x n system by Gaussian elimination.
            std::vector<Vec> A(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(n + 1)));
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j)
                    A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                        planes[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])]
                            .first[static_cast<std::size_t>(j)];
                A[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] =
                    planes[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])].second;
            }
            for (int col = 0; col < n; ++col) {
                int piv = -1;
                double bestp = 1e-9;
                for (int i = col; i < n; ++i)
                    if (std::abs(A[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)]) > bestp) {
                        bestp = std::abs(A[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)]);
                        piv = i;
                    }
                if (piv < 0)
                    return; // singular; not a vertex
                std::swap(A[static_cast<std::size_t>(col)], A[static_cast<std::size_t>(piv)]);
                for (int i = 0; i < n; ++i) {
                    if (i == col)
                        continue;
                    double f = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] /
                               A[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
                    if (f == 0.0)
                        continue;
                    for (int j = col; j <= n; ++j)
                        A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -=
                            f * A[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)];
                }
            }
            Vec x(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                x[static_cast<std::size_t>(i)] = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] /
                                                 A[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
            // feasibility
            for (int j = 0; j < n; ++j) {
                const auto& v = lp.vars[static_cast<std::size_t>(j)];
                if (x[static_cast<std::size_t>(j)] < v.lb - 1e-7 || x[static_cast<std::size_t>(j)] > v.ub + 1e-7)
                    return;
            }
            for (const auto& row : lp.rows) {
                double act = 0.0;
                for (auto [j, c] : row.coeffs)
                    act += c * x[static_cast<std::size_t>(j)];
                if (row.rel == Rel::Le && act > row.rhs + 1e-7)
                    return;
                if (row.rel == Rel::Ge && act < row.rhs - 1e-7)
                    return;
                if (row.rel == Rel::Eq && std::abs(act - row.rhs) > 1e-7)
                    return;
            }
            double val = 0.0;
            for (auto [j, c] : lp.objective)
                val += c * x[static_cast<std::size_t>(j)];
            found = true;
            if (maximize)
                best_value = std::max(best_value, val);
            else
                best_value = std::min(best_value, val);
            return;
        }
        for (int i = start; i <= p - (n - depth); ++i) {
            pick[static_cast<std::size_t>(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return found;
}

} // namespace testutil
