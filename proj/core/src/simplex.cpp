#include "relucert/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace relucert {

int LinearProgram::add_var(double lb, double ub) {
    if (lb > ub)
        throw Error("variable with lb > ub");
    vars.push_back({lb, ub});
    return static_cast<int>(vars.size()) - 1;
}

void LinearProgram::add_row(SparseRow coeffs, Rel rel, double rhs) {
    if (!std::isfinite(rhs))
        throw Error("constraint rhs must be finite");
    for (const auto& [j, c] : coeffs) {
        if (j < 0 || j >= num_vars())
            throw Error("constraint references undeclared variable " + std::to_string(j));
        (void)c;
    }
    rows.push_back({std::move(coeffs), rel, rhs});
}

void LinearProgram::set_objective(SparseRow coeffs, Sense s) {
    for (const auto& [j, c] : coeffs) {
        if (j < 0 || j >= num_vars())
            throw Error("objective references undeclared variable " + std::to_string(j));
        (void)c;
    }
    objective = std::move(coeffs);
    sense = s;
}

const char* to_string(LpStatus s) {
    switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
    }
    return "?";
}

namespace {

constexpr double kPivTol = 1e-9;
constexpr double kDegenStep = 1e-11;

enum class VStat : unsigned char { Basic, AtLower, AtUpper, FreeZero };

class Tableau {
public:
    Tableau(const LinearProgram& lp, const SimplexConfig& cfg) : lp_(lp), cfg_(cfg) {
        m_ = lp.num_rows();
        ns_ = lp.num_vars();
        n_ = ns_ + m_; // structural + one slack per row; artificials appended on demand
        lb_.resize(static_cast<std::size_t>(n_));
        ub_.resize(static_cast<std::size_t>(n_));
        for (int j = 0; j < ns_; ++j) {
            lb_[static_cast<std::size_t>(j)] = lp.vars[static_cast<std::size_t>(j)].lb;
            ub_[static_cast<std::size_t>(j)] = lp.vars[static_cast<std::size_t>(j)].ub;
        }
        for (int i = 0; i < m_; ++i) {
            switch (lp.rows[static_cast<std::size_t>(i)].rel) {
            case Rel::Le: lb_[slack(i)] = 0.0; ub_[slack(i)] = kInf; break;
            case Rel::Ge: lb_[slack(i)] = -kInf; ub_[slack(i)] = 0.0; break;
            case Rel::Eq: lb_[slack(i)] = 0.0; ub_[slack(i)] = 0.0; break;
            }
        }
    }

    LpSolution run() {
        place_nonbasics();
        init_basis_and_artificials();

        long iter_budget = cfg_.max_iters > 0
                               ? cfg_.max_iters
                               : 50L * static_cast<long>(lp_.num_vars() + lp_.num_rows());

        if (num_artificials_ > 0) {
            set_phase1_costs();
            LpStatus st = iterate(iter_budget);
            if (st == LpStatus::IterationLimit)
                return finish(LpStatus::IterationLimit);
            double infeas = 0.0;
            for (int j = n_art_begin_; j < total(); ++j)
                infeas += std::abs(value(j));
            if (infeas > cfg_.feas_tol)
                return finish(LpStatus::Infeasible);
            for (int j = n_art_begin_; j < total(); ++j) {
                lb_[static_cast<std::size_t>(j)] = 0.0;
                ub_[static_cast<std::size_t>(j)] = 0.0;
                if (stat_[static_cast<std::size_t>(j)] != VStat::Basic)
                    stat_[static_cast<std::size_t>(j)] = VStat::AtLower;
            }
        }

        set_phase2_costs();
        LpStatus st = iterate(iter_budget);
        return finish(st);
    }

private:
    std::size_t slack(int i) const { return static_cast<std::size_t>(ns_ + i); }
    int total() const { return n_art_begin_ < 0 ? n_ : n_ + num_artificials_; }

    double& T(int i, int j) { return tab_[static_cast<std::size_t>(i) * stride_ + static_cast<std::size_t>(j)]; }
    double Tc(int i, int j) const { return tab_[static_cast<std::size_t>(i) * stride_ + static_cast<std::size_t>(j)]; }

    double value(int j) const {
        switch (stat_[static_cast<std::size_t>(j)]) {
        case VStat::Basic: return xb_[static_cast<std::size_t>(where_[static_cast<std::size_t>(j)])];
        case VStat::AtLower: return lb_[static_cast<std::size_t>(j)];
        case VStat::AtUpper: return ub_[static_cast<std::size_t>(j)];
        case VStat::FreeZero: return 0.0;
        }
        return 0.0;
    }

    void place_nonbasics() {
        stat_.assign(static_cast<std::size_t>(n_), VStat::AtLower);
        for (int j = 0; j < n_; ++j) {
            double l = lb_[static_cast<std::size_t>(j)], u = ub_[static_cast<std::size_t>(j)];
            if (std::isfinite(l))
                stat_[static_cast<std::size_t>(j)] = VStat::AtLower;
            else if (std::isfinite(u))
                stat_[static_cast<std::size_t>(j)] = VStat::AtUpper;
            else
                stat_[static_cast<std::size_t>(j)] = VStat::FreeZero;
        }
    }

    void init_basis_and_artificials() {
        // Residuals with every slack basic (B = identity).
        std::vector<double> resid(static_cast<std::size_t>(m_));
        std::vector<bool> needs_art(static_cast<std::size_t>(m_), false);
        num_artificials_ = 0;
        for (int i = 0; i < m_; ++i) {
            const auto& row = lp_.rows[static_cast<std::size_t>(i)];
            double r = row.rhs;
            for (const auto& [j, c] : row.coeffs)
                r -= c * value(j);
            resid[static_cast<std::size_t>(i)] = r;
            double sl = lb_[slack(i)], su = ub_[slack(i)];
            if (r < sl - cfg_.feas_tol || r > su + cfg_.feas_tol) {
                needs_art[static_cast<std::size_t>(i)] = true;
                ++num_artificials_;
            }
        }

        n_art_begin_ = n_;
        int cols = n_ + num_artificials_;
        stride_ = static_cast<std::size_t>(cols);
        tab_.assign(static_cast<std::size_t>(m_) * stride_, 0.0);
        for (int i = 0; i < m_; ++i) {
            for (const auto& [j, c] : lp_.rows[static_cast<std::size_t>(i)].coeffs)
                T(i, j) += c;
            T(i, static_cast<int>(slack(i))) = 1.0;
        }

        basis_.resize(static_cast<std::size_t>(m_));
        where_.assign(static_cast<std::size_t>(cols), -1);
        xb_.resize(static_cast<std::size_t>(m_));
        stat_.resize(static_cast<std::size_t>(cols), VStat::AtLower);
        lb_.resize(static_cast<std::size_t>(cols));
        ub_.resize(static_cast<std::size_t>(cols));

        art_rows_.clear();
        int art = n_;
        for (int i = 0; i < m_; ++i) {
            double r = resid[static_cast<std::size_t>(i)];
            if (!needs_art[static_cast<std::size_t>(i)]) {
                basis_[static_cast<std::size_t>(i)] = static_cast<int>(slack(i));
                stat_[slack(i)] = VStat::Basic;
                where_[slack(i)] = i;
                xb_[static_cast<std::size_t>(i)] = r;
                continue;
            }
            // Slack pinned at its nearest bound; an artificial absorbs the rest.
            double sl = lb_[slack(i)], su = ub_[slack(i)];
            double sval;
            if (r > su) {
                stat_[slack(i)] = VStat::AtUpper;
                sval = su;
            } else {
                stat_[slack(i)] = VStat::AtLower;
                sval = sl;
            }
            double av = r - sval;
            T(i, art) = 1.0;
            if (av >= 0.0) {
                lb_[static_cast<std::size_t>(art)] = 0.0;
                ub_[static_cast<std::size_t>(art)] = kInf;
            } else {
                lb_[static_cast<std::size_t>(art)] = -kInf;
                ub_[static_cast<std::size_t>(art)] = 0.0;
            }
            basis_[static_cast<std::size_t>(i)] = art;
            stat_[static_cast<std::size_t>(art)] = VStat::Basic;
            where_[static_cast<std::size_t>(art)] = i;
            xb_[static_cast<std::size_t>(i)] = av;
            art_rows_.push_back(i);
            ++art;
        }
    }

    void set_phase1_costs() {
        cost_.assign(static_cast<std::size_t>(total()), 0.0);
        for (int j = n_art_begin_; j < total(); ++j)
            cost_[static_cast<std::size_t>(j)] = std::isfinite(lb_[static_cast<std::size_t>(j)]) ? -1.0 : 1.0;
        recompute_reduced_costs();
    }

    void set_phase2_costs() {
        cost_.assign(static_cast<std::size_t>(total()), 0.0);
        double sgn = lp_.sense == Sense::Max ? 1.0 : -1.0;
        for (const auto& [j, c] : lp_.objective)
            cost_[static_cast<std::size_t>(j)] += sgn * c;
        recompute_reduced_costs();
    }

    void recompute_reduced_costs() {
        d_ = cost_;
        for (int i = 0; i < m_; ++i) {
            double cb = cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
            if (cb == 0.0)
                continue;
            for (int j = 0; j < total(); ++j)
                d_[static_cast<std::size_t>(j)] -= cb * Tc(i, j);
        }
        for (int i = 0; i < m_; ++i)
            d_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = 0.0;
    }

    // +1 if the variable may increase profitably, -1 if decrease, 0 if not eligible.
    int eligible_direction(int j) const {
        std::size_t sj = static_cast<std::size_t>(j);
        if (stat_[sj] == VStat::Basic)
            return 0;
        if (ub_[sj] - lb_[sj] <= 0.0)
            return 0; // fixed
        double dj = d_[sj];
        switch (stat_[sj]) {
        case VStat::AtLower: return dj > cfg_.opt_tol ? 1 : 0;
        case VStat::AtUpper: return dj < -cfg_.opt_tol ? -1 : 0;
        case VStat::FreeZero:
            if (dj > cfg_.opt_tol)
                return 1;
            if (dj < -cfg_.opt_tol)
                return -1;
            return 0;
        default: return 0;
        }
    }

    LpStatus iterate(long& iter_budget) {
        int degen_streak = 0;
        bool bland = false;
        while (true) {
            if (iter_budget-- <= 0)
                return LpStatus::IterationLimit;

            int q = -1, dir = 0;
            if (bland) {
                for (int j = 0; j < total(); ++j) {
                    int s = eligible_direction(j);
                    if (s != 0) {
                        q = j;
                        dir = s;
                        break;
                    }
                }
            } else {
                double best = 0.0;
                for (int j = 0; j < total(); ++j) {
                    int s = eligible_direction(j);
                    if (s == 0)
                        continue;
                    double mag = std::abs(d_[static_cast<std::size_t>(j)]);
                    if (mag > best + 1e-15) {
                        best = mag;
                        q = j;
                        dir = s;
                    }
                }
            }
            if (q < 0)
                return LpStatus::Optimal;

            // Ratio test: the entering variable moves by t >= 0 in direction dir.
            double vq = value(q);
            double own_cap = dir > 0 ? ub_[static_cast<std::size_t>(q)] - vq
                                     : vq - lb_[static_cast<std::size_t>(q)];
            double best_t = own_cap;
            int leave_row = -1;
            bool leave_to_upper = false;
            for (int i = 0; i < m_; ++i) {
                double coef = Tc(i, q);
                if (std::abs(coef) <= kPivTol)
                    continue;
                double delta = -static_cast<double>(dir) * coef; // d xb[i] / d t
                int p = basis_[static_cast<std::size_t>(i)];
                double t_i, room;
                bool to_upper;
                if (delta > 0.0) {
                    room = ub_[static_cast<std::size_t>(p)] - xb_[static_cast<std::size_t>(i)];
                    if (!std::isfinite(room))
                        continue;
                    t_i = std::max(0.0, room) / delta;
                    to_upper = true;
                } else {
                    room = xb_[static_cast<std::size_t>(i)] - lb_[static_cast<std::size_t>(p)];
                    if (!std::isfinite(room))
                        continue;
                    t_i = std::max(0.0, room) / (-delta);
                    to_upper = false;
                }
                if (t_i < best_t - 1e-12) {
                    best_t = t_i;
                    leave_row = i;
                    leave_to_upper = to_upper;
                } else if (leave_row >= 0 && std::abs(t_i - best_t) <= 1e-12 &&
                           p < basis_[static_cast<std::size_t>(leave_row)]) {
                    leave_row = i;
                    leave_to_upper = to_upper;
                }
            }

            if (!std::isfinite(best_t))
                return LpStatus::Unbounded;

            if (best_t <= kDegenStep) {
                if (++degen_streak >= cfg_.degen_streak_before_bland)
                    bland = true;
            } else {
                degen_streak = 0;
                bland = false;
            }

            // Move: update basic values.
            if (best_t > 0.0) {
                for (int i = 0; i < m_; ++i) {
                    double coef = Tc(i, q);
                    if (coef != 0.0)
                        xb_[static_cast<std::size_t>(i)] -= static_cast<double>(dir) * best_t * coef;
                }
            }

            if (leave_row < 0) {
                // Bound-to-bound flip.
                stat_[static_cast<std::size_t>(q)] =
                    dir > 0 ? VStat::AtUpper : VStat::AtLower;
                continue;
            }

            int p = basis_[static_cast<std::size_t>(leave_row)];
            stat_[static_cast<std::size_t>(p)] = leave_to_upper ? VStat::AtUpper : VStat::AtLower;
            if (lb_[static_cast<std::size_t>(p)] == ub_[static_cast<std::size_t>(p)])
                stat_[static_cast<std::size_t>(p)] = VStat::AtLower;
            where_[static_cast<std::size_t>(p)] = -1;
            basis_[static_cast<std::size_t>(leave_row)] = q;
            stat_[static_cast<std::size_t>(q)] = VStat::Basic;
            where_[static_cast<std::size_t>(q)] = leave_row;
            xb_[static_cast<std::size_t>(leave_row)] = vq + static_cast<double>(dir) * best_t;

            pivot(leave_row, q);
        }
    }

    void pivot(int r, int q) {
        double piv = T(r, q);
        double* rowr = &tab_[static_cast<std::size_t>(r) * stride_];
        double inv = 1.0 / piv;
        for (int j = 0; j < total(); ++j)
            rowr[j] *= inv;
        rowr[q] = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == r)
                continue;
            double f = T(i, q);
            if (std::abs(f) <= 1e-13)
                continue;
            double* rowi = &tab_[static_cast<std::size_t>(i) * stride_];
            for (int j = 0; j < total(); ++j)
                rowi[j] -= f * rowr[j];
            rowi[q] = 0.0;
        }
        double dq = d_[static_cast<std::size_t>(q)];
        if (dq != 0.0) {
            for (int j = 0; j < total(); ++j)
                d_[static_cast<std::size_t>(j)] -= dq * rowr[j];
        }
        d_[static_cast<std::size_t>(q)] = 0.0;
    }

    // Re-solve B xb = b - N vN against the original data to shed pivot drift.
    void refine_basics() {
        std::vector<double> rhs(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i)
            rhs[static_cast<std::size_t>(i)] = lp_.rows[static_cast<std::size_t>(i)].rhs;
        // Nonbasic structural contributions (slacks/artificials sit at 0-anchored bounds).
        for (int i = 0; i < m_; ++i) {
            for (const auto& [j, c] : lp_.rows[static_cast<std::size_t>(i)].coeffs) {
                if (stat_[static_cast<std::size_t>(j)] != VStat::Basic) {
                    double v = value(j);
                    if (v != 0.0)
                        rhs[static_cast<std::size_t>(i)] -= c * v;
                }
            }
        }

        // Dense basis matrix from original columns.
        std::vector<double> B(static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_), 0.0);
        auto bat = [&](int i, int k) -> double& {
            return B[static_cast<std::size_t>(i) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(k)];
        };
        for (int k = 0; k < m_; ++k) {
            int v = basis_[static_cast<std::size_t>(k)];
            if (v < ns_) {
                for (int i = 0; i < m_; ++i) {
                    const auto& row = lp_.rows[static_cast<std::size_t>(i)];
                    for (const auto& [j, c] : row.coeffs)
                        if (j == v)
                            bat(i, k) += c;
                }
            } else if (v < n_) {
                bat(v - ns_, k) = 1.0; // slack
            } else {
                bat(art_rows_[static_cast<std::size_t>(v - n_)], k) = 1.0; // artificial
            }
        }

        // LU with partial pivoting.
        std::vector<int> perm(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i)
            perm[static_cast<std::size_t>(i)] = i;
        for (int col = 0; col < m_; ++col) {
            int piv = col;
            double best = std::abs(bat(col, col));
            for (int i = col + 1; i < m_; ++i) {
                double v = std::abs(bat(i, col));
                if (v > best) {
                    best = v;
                    piv = i;
                }
            }
            if (best < 1e-12)
                return; // keep tableau values
            if (piv != col) {
                for (int j = 0; j < m_; ++j)
                    std::swap(bat(piv, j), bat(col, j));
                std::swap(rhs[static_cast<std::size_t>(piv)], rhs[static_cast<std::size_t>(col)]);
            }
            double inv = 1.0 / bat(col, col);
            for (int i = col + 1; i < m_; ++i) {
                double f = bat(i, col) * inv;
                if (f == 0.0)
                    continue;
                bat(i, col) = 0.0;
                for (int j = col + 1; j < m_; ++j)
                    bat(i, j) -= f * bat(col, j);
                rhs[static_cast<std::size_t>(i)] -= f * rhs[static_cast<std::size_t>(col)];
            }
        }
        for (int i = m_ - 1; i >= 0; --i) {
            double s = rhs[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < m_; ++j)
                s -= bat(i, j) * rhs[static_cast<std::size_t>(j)];
            rhs[static_cast<std::size_t>(i)] = s / bat(i, i);
        }
        for (int k = 0; k < m_; ++k)
            xb_[static_cast<std::size_t>(k)] = rhs[static_cast<std::size_t>(k)];
    }

    LpSolution finish(LpStatus st) {
        if (st == LpStatus::Optimal)
            refine_basics();
        LpSolution sol;
        sol.status = st;
        sol.primal.resize(static_cast<std::size_t>(ns_));
        for (int j = 0; j < ns_; ++j)
            sol.primal[static_cast<std::size_t>(j)] = value(j);
        double v = 0.0;
        for (const auto& [j, c] : lp_.objective)
            v += c * sol.primal[static_cast<std::size_t>(j)];
        sol.objective_value = v;
        return sol;
    }

    std::vector<int> art_rows_; // artificial k -> its row

    const LinearProgram& lp_;
    const SimplexConfig& cfg_;
    int m_ = 0, ns_ = 0, n_ = 0;
    int num_artificials_ = 0;
    int n_art_begin_ = -1;
    std::size_t stride_ = 0;
    std::vector<double> tab_;
    std::vector<double> lb_, ub_;
    std::vector<double> xb_;
    std::vector<double> cost_, d_;
    std::vector<int> basis_, where_;
    std::vector<VStat> stat_;
};

} // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexConfig& cfg) {
    if (lp.num_rows() == 0) {
        // Pure box problem: each variable sits at its favorable bound.
        LpSolution sol;
        sol.primal.resize(static_cast<std::size_t>(lp.num_vars()));
        for (int j = 0; j < lp.num_vars(); ++j) {
            const auto& v = lp.vars[static_cast<std::size_t>(j)];
            sol.primal[static_cast<std::size_t>(j)] = std::isfinite(v.lb) ? v.lb : (std::isfinite(v.ub) ? v.ub : 0.0);
        }
        double sgn = lp.sense == Sense::Max ? 1.0 : -1.0;
        for (const auto& [j, c] : lp.objective) {
            const auto& v = lp.vars[static_cast<std::size_t>(j)];
            double want_up = sgn * c;
            double& x = sol.primal[static_cast<std::size_t>(j)];
            if (want_up > 0.0)
                x = v.ub;
            else if (want_up < 0.0)
                x = v.lb;
            if (!std::isfinite(x)) {
                sol.status = LpStatus::Unbounded;
                return sol;
            }
        }
        for (double& x : sol.primal)
            if (!std::isfinite(x))
                x = 0.0;
        sol.status = LpStatus::Optimal;
        for (const auto& [j, c] : lp.objective)
            sol.objective_value += c * sol.primal[static_cast<std::size_t>(j)];
        return sol;
    }

    Tableau t(lp, cfg);
    return t.run();
}

} // namespace relucert
