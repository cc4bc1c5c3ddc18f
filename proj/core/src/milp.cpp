#include "relucert/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <set>

namespace relucert {

const char* to_string(MilpStatus s) {
    switch (s) {
    case MilpStatus::Proven: return "proven";
    case MilpStatus::GapReached: return "gap_reached";
    case MilpStatus::TimedOut: return "timed_out";
    }
    return "?";
}

MilpModel build_model(const Network& net, const InputRegion& region, const BoundsMap& bounds,
                      const OpenSet& X, int up_to) {
    if (up_to < 1 || up_to > net.num_layers())
        throw Error("build_model: up_to layer out of range");
    for (int k = 1; k < up_to; ++k)
        if (!bounds.has_layer(k))
            throw Error("build_model: missing bounds for layer " + std::to_string(k));

    std::set<NeuronId> open;
    for (const NeuronId& n : X) {
        if (n.layer >= up_to)
            throw Error("build_model: open neuron " + to_string(n) + " is not before layer " +
                        std::to_string(up_to));
        if (bounds.unstable(n))
            open.insert(n);
    }

    MilpModel model;
    model.net = &net;
    model.region = region;
    model.up_to = up_to;
    LinearProgram& lp = model.lp;

    Vec lo = region.effective_lo(), hi = region.effective_hi();
    model.input_vars.resize(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i)
        model.input_vars[i] = lp.add_var(lo[i], hi[i]);

    model.pre_vars.resize(static_cast<std::size_t>(up_to));
    model.post_vars.resize(static_cast<std::size_t>(up_to));

    for (int k = 1; k <= up_to; ++k) {
        const AffineLayer& layer = net.layer(k);
        int width = static_cast<int>(layer.weights.rows());
        auto& pre = model.pre_vars[static_cast<std::size_t>(k - 1)];
        auto& post = model.post_vars[static_cast<std::size_t>(k - 1)];
        pre.assign(static_cast<std::size_t>(width), -1);
        post.assign(static_cast<std::size_t>(width), -1);

        for (int j = 0; j < width; ++j) {
            NeuronId n{k, j};
            double zl = -kInf, zu = kInf;
            if (k < up_to) {
                const Interval& iv = bounds.at(n);
                zl = iv.lb;
                zu = iv.ub;
            }
            int zv = lp.add_var(zl, zu);
            pre[static_cast<std::size_t>(j)] = zv;

            // z = W zhat_prev + b
            SparseRow row{{zv, 1.0}};
            for (std::size_t c = 0; c < layer.weights.cols(); ++c) {
                double w = layer.weights(static_cast<std::size_t>(j), c);
                if (w == 0.0)
                    continue;
                if (k == 1) {
                    row.emplace_back(model.input_vars[c], -w);
                } else {
                    NeuronId p{k - 1, static_cast<int>(c)};
                    switch (bounds.status(p)) {
                    case NeuronStatus::StablePositive:
                        row.emplace_back(model.pre_var(p), -w);
                        break;
                    case NeuronStatus::StableNegative:
                        break; // contributes 0
                    case NeuronStatus::Unstable:
                        row.emplace_back(model.post_var(p), -w);
                        break;
                    }
                }
            }
            lp.add_row(std::move(row), Rel::Eq, layer.bias[static_cast<std::size_t>(j)]);
        }

        // ReLU encoding for this layer's unstable neurons (needed once the
        // next layer consumes the post values).
        if (k < up_to && net.has_relu(k)) {
            for (int j = 0; j < width; ++j) {
                NeuronId n{k, j};
                if (!bounds.unstable(n))
                    continue;
                const Interval& iv = bounds.at(n);
                int zv = pre[static_cast<std::size_t>(j)];
                int hv = lp.add_var(0.0, std::max(0.0, iv.ub));
                post[static_cast<std::size_t>(j)] = hv;
                lp.add_row({{hv, 1.0}, {zv, -1.0}}, Rel::Ge, 0.0); // zhat >= z
                if (open.count(n)) {
                    int av = lp.add_var(0.0, 1.0);
                    model.indicators.emplace_back(n, av);
                    lp.add_row({{hv, 1.0}, {av, -iv.ub}}, Rel::Le, 0.0);          // zhat <= UB a
                    lp.add_row({{hv, 1.0}, {zv, -1.0}, {av, -iv.lb}}, Rel::Le, -iv.lb); // zhat <= z - LB(1-a)
                } else {
                    // chord: (UB-LB) zhat <= UB (z - LB)
                    lp.add_row({{hv, iv.ub - iv.lb}, {zv, -iv.ub}}, Rel::Le, -iv.ub * iv.lb);
                }
            }
        }
    }

    // Keep indicator registry in the selection order of X (first occurrence wins).
    std::vector<std::pair<NeuronId, int>> ordered;
    for (const NeuronId& n : X) {
        for (const auto& e : model.indicators)
            if (e.first == n) {
                bool seen = false;
                for (const auto& o : ordered)
                    seen = seen || o.first == n;
                if (!seen)
                    ordered.push_back(e);
            }
    }
    model.indicators = std::move(ordered);
    return model;
}

namespace {

struct Node {
    double bound; // valid objective bound inherited from the parent LP
    long seq;
    std::vector<signed char> phase; // per indicator: -1 free, 0, 1
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound)
            return a.bound < b.bound; // max-heap on bound
        return a.seq > b.seq;         // FIFO among ties
    }
};

SparseRow scaled(const SparseRow& row, double sgn) {
    SparseRow out = row;
    for (auto& [j, c] : out)
        c *= sgn;
    return out;
}

// Objective value of the concrete forward run at the box midpoint; always a
// feasible MILP_X point, used when rounding fails to produce an incumbent.
std::pair<double, Vec> center_incumbent(const MilpModel& model, const SparseRow& obj) {
    const Network& net = *model.net;
    Vec lo = model.region.effective_lo(), hi = model.region.effective_hi();
    Vec x(lo.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = 0.5 * (lo[i] + hi[i]);
    Activations acts = forward(net, x);

    Vec primal(static_cast<std::size_t>(model.lp.num_vars()), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        primal[static_cast<std::size_t>(model.input_vars[i])] = x[i];
    for (int k = 1; k <= model.up_to; ++k) {
        const auto& pre = model.pre_vars[static_cast<std::size_t>(k - 1)];
        const auto& post = model.post_vars[static_cast<std::size_t>(k - 1)];
        for (std::size_t j = 0; j < pre.size(); ++j) {
            double z = acts.pre[static_cast<std::size_t>(k - 1)][j];
            primal[static_cast<std::size_t>(pre[j])] = z;
            if (post[j] >= 0)
                primal[static_cast<std::size_t>(post[j])] = std::max(0.0, z);
        }
    }
    for (const auto& [n, av] : model.indicators) {
        double z = acts.pre[static_cast<std::size_t>(n.layer - 1)][static_cast<std::size_t>(n.index)];
        primal[static_cast<std::size_t>(av)] = z > 0.0 ? 1.0 : 0.0;
    }
    double v = 0.0;
    for (const auto& [j, c] : obj)
        v += c * primal[static_cast<std::size_t>(j)];
    return {v, std::move(primal)};
}

} // namespace

MilpResult solve_milp(const MilpModel& model, const LayerObjective& objective, Sense sense,
                      const MilpConfig& cfg) {
    if (objective.layer < 1 || objective.layer > model.up_to)
        throw Error("objective layer is not encoded in the model");
    SparseRow row;
    for (const auto& [idx, c] : objective.coeffs)
        row.emplace_back(model.pre_var({objective.layer, idx}), c);
    return solve_milp(model, row, sense, cfg);
}

MilpResult solve_milp(const MilpModel& model, const SparseRow& objective, Sense sense,
                      const MilpConfig& cfg) {
    for (const auto& [j, c] : objective) {
        if (j < 0 || j >= model.lp.num_vars())
            throw Error("objective references a variable outside the model");
        (void)c;
    }

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto elapsed_s = [&] {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    const double sgn = sense == Sense::Max ? 1.0 : -1.0;
    SparseRow obj = scaled(objective, sgn);

    LinearProgram lp = model.lp; // node LPs differ only in indicator bounds
    lp.set_objective(obj, Sense::Max);

    const int ni = static_cast<int>(model.indicators.size());

    auto apply_phase = [&](const std::vector<signed char>& phase) {
        for (int i = 0; i < ni; ++i) {
            auto& v = lp.vars[static_cast<std::size_t>(model.indicators[static_cast<std::size_t>(i)].second)];
            if (phase[static_cast<std::size_t>(i)] < 0) {
                v.lb = 0.0;
                v.ub = 1.0;
            } else {
                v.lb = v.ub = static_cast<double>(phase[static_cast<std::size_t>(i)]);
            }
        }
    };

    // Static branch order -> indicator positions; empty -> most fractional.
    std::vector<int> static_order;
    for (const NeuronId& n : cfg.branch_order)
        for (int i = 0; i < ni; ++i)
            if (model.indicators[static_cast<std::size_t>(i)].first == n)
                static_order.push_back(i);

    MilpResult res;
    auto finalize = [&](double safe, MilpStatus status) {
        res.safe_bound = sgn * safe;
        if (res.incumbent_value)
            res.incumbent_value = sgn * *res.incumbent_value;
        res.status = status;
        return res;
    };

    // Root relaxation.
    std::vector<signed char> root_phase(static_cast<std::size_t>(ni), -1);
    apply_phase(root_phase);
    LpSolution root = solve_lp(lp, cfg.lp);
    ++res.nodes;
    if (root.status == LpStatus::Infeasible)
        throw Error("MILP root relaxation is infeasible (inconsistent bounds)");
    if (root.status == LpStatus::Unbounded)
        throw Error("MILP root relaxation is unbounded (objective layer should be bounded through the box)");
    if (root.status == LpStatus::IterationLimit)
        throw Error("LP iteration limit hit in the root relaxation");

    double incumbent = -kInf;
    auto consider_incumbent = [&](double v, const Vec& primal) {
        if (v > incumbent) {
            incumbent = v;
            res.incumbent_value = v;
            res.incumbent_primal = primal;
        }
    };

    auto integral = [&](const Vec& primal, const std::vector<signed char>& phase) {
        for (int i = 0; i < ni; ++i) {
            if (phase[static_cast<std::size_t>(i)] >= 0)
                continue;
            double a = primal[static_cast<std::size_t>(model.indicators[static_cast<std::size_t>(i)].second)];
            if (std::min(a, 1.0 - a) > 1e-6)
                return false;
        }
        return true;
    };

    if (ni == 0 || integral(root.primal, root_phase)) {
        consider_incumbent(root.objective_value, root.primal);
        res.gap = 0.0;
        return finalize(root.objective_value, MilpStatus::Proven);
    }

    // Incumbent seeding: fix every indicator to the ReLU phase of the root
    // primal and re-solve; fall back to the concrete midpoint evaluation.
    {
        std::vector<signed char> seeded(static_cast<std::size_t>(ni));
        for (int i = 0; i < ni; ++i) {
            const NeuronId n = model.indicators[static_cast<std::size_t>(i)].first;
            double z = root.primal[static_cast<std::size_t>(model.pre_var(n))];
            seeded[static_cast<std::size_t>(i)] = z > 0.0 ? 1 : 0;
        }
        apply_phase(seeded);
        LpSolution rounded = solve_lp(lp, cfg.lp);
        ++res.nodes;
        if (rounded.status == LpStatus::Optimal)
            consider_incumbent(rounded.objective_value, rounded.primal);
        auto [cv, cp] = center_incumbent(model, obj);
        consider_incumbent(cv, cp);
    }

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long seq = 0;
    open.push({root.objective_value, seq++, std::move(root_phase)});

    // Bounds of subtrees pruned near the incumbent still cap the optimum.
    double pruned_cap = -kInf;
    auto open_best = [&] { return open.empty() ? -kInf : open.top().bound; };
    auto safe_level = [&] { return std::max({incumbent, open_best(), pruned_cap}); };
    auto rel_gap = [&](double safe) {
        if (!std::isfinite(safe) || !std::isfinite(incumbent))
            return kInf;
        return std::abs(safe - incumbent) / std::max(1.0, std::abs(incumbent));
    };

    const double prune_tol = 1e-9;

    while (!open.empty()) {
        double safe_now = safe_level();
        if (rel_gap(safe_now) <= cfg.mip_gap) {
            res.gap = rel_gap(safe_now);
            return finalize(safe_now, res.gap <= 1e-9 ? MilpStatus::Proven : MilpStatus::GapReached);
        }
        if (elapsed_s() > cfg.timeout_s) {
            res.gap = rel_gap(safe_now);
            return finalize(safe_now, MilpStatus::TimedOut);
        }

        Node node = open.top();
        open.pop();
        if (node.bound <= incumbent + prune_tol) {
            pruned_cap = std::max(pruned_cap, node.bound);
            continue;
        }

        // Depth-first dive from the selected node.
        while (true) {
            if (elapsed_s() > cfg.timeout_s) {
                double safe = std::max(safe_level(), node.bound);
                res.gap = rel_gap(safe);
                return finalize(safe, MilpStatus::TimedOut);
            }
            apply_phase(node.phase);
            LpSolution sol = solve_lp(lp, cfg.lp);
            ++res.nodes;
            if (sol.status == LpStatus::Infeasible)
                break; // pruned
            if (sol.status != LpStatus::Optimal)
                throw Error(std::string("node LP ended with status ") + to_string(sol.status));
            double bound = std::min(sol.objective_value, node.bound);
            if (bound <= incumbent + prune_tol) {
                pruned_cap = std::max(pruned_cap, bound);
                break;
            }
            if (integral(sol.primal, node.phase)) {
                consider_incumbent(sol.objective_value, sol.primal);
                break;
            }

            // Branch.
            int pos = -1;
            for (int i : static_order)
                if (node.phase[static_cast<std::size_t>(i)] < 0) {
                    pos = i;
                    break;
                }
            if (pos < 0) {
                double most = -1.0;
                for (int i = 0; i < ni; ++i) {
                    if (node.phase[static_cast<std::size_t>(i)] >= 0)
                        continue;
                    double a = sol.primal[static_cast<std::size_t>(
                        model.indicators[static_cast<std::size_t>(i)].second)];
                    double frac = std::min(a, 1.0 - a);
                    if (frac > most + 1e-15) {
                        most = frac;
                        pos = i;
                    }
                }
            }
            if (pos < 0)
                break; // fully fixed yet fractional cannot happen; defensive

            double a_val = sol.primal[static_cast<std::size_t>(
                model.indicators[static_cast<std::size_t>(pos)].second)];
            signed char preferred = a_val >= 0.5 ? 1 : 0;

            Node away = node;
            away.bound = bound;
            away.seq = seq++;
            away.phase[static_cast<std::size_t>(pos)] = static_cast<signed char>(1 - preferred);
            open.push(std::move(away));

            node.bound = bound;
            node.seq = seq++;
            node.phase[static_cast<std::size_t>(pos)] = preferred;
        }
    }

    double safe = std::max(incumbent, pruned_cap);
    res.gap = rel_gap(safe);
    return finalize(safe, MilpStatus::Proven);
}

} // namespace relucert
