#include "relucert/oracle.hpp"

#include "relucert/bounds.hpp"
#include "relucert/lp.hpp"
#include "relucert/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace relucert {
namespace oracle {

namespace {

// Affine form g.x + h of every neuron up to some layer under a fixed
// activation pattern: substituting each ReLU by identity or zero keeps the
// whole network affine in the input.
struct AffineForms {
    std::vector<std::vector<Vec>> g; // [layer-1][neuron] -> coefficients over x
    std::vector<Vec> h;              // [layer-1][neuron]
};

struct Enumeration {
    std::vector<NeuronId> unstable; // fixed order: (layer, index) ascending
    BoundsMap box;
};

Enumeration prepare(const Network& net, const InputRegion& region, int below_layer) {
    Enumeration e;
    e.box = box_propagate(net, region);
    for (int k = 1; k < below_layer; ++k) {
        if (!net.has_relu(k))
            continue;
        for (int j = 0; j < net.layer_dim(k); ++j) {
            NeuronId n{k, j};
            if (e.box.unstable(n))
                e.unstable.push_back(n);
        }
    }
    if (static_cast<int>(e.unstable.size()) > kMaxUnstable)
        throw Error("oracle guard: " + std::to_string(e.unstable.size()) +
                    " unstable neurons exceed the limit of " + std::to_string(kMaxUnstable));
    return e;
}

// Build the affine forms for the pattern; phase[j] gives the mode of
// e.unstable[j] (1 keeps the identity, 0 zeroes the output).
AffineForms affine_forms(const Network& net, const Enumeration& e, unsigned long pattern,
                         int up_to) {
    int d0 = net.input_dim();
    AffineForms f;
    f.g.resize(static_cast<std::size_t>(up_to));
    f.h.resize(static_cast<std::size_t>(up_to));

    auto phase_of = [&](NeuronId n) -> int {
        auto it = std::lower_bound(e.unstable.begin(), e.unstable.end(), n);
        if (it != e.unstable.end() && *it == n)
            return (pattern >> (it - e.unstable.begin())) & 1UL;
        return -1;
    };

    std::vector<Vec> prev_g;
    Vec prev_h;
    for (int i = 0; i < d0; ++i) {
        Vec gi(static_cast<std::size_t>(d0), 0.0);
        gi[static_cast<std::size_t>(i)] = 1.0;
        prev_g.push_back(std::move(gi));
    }
    prev_h.assign(static_cast<std::size_t>(d0), 0.0);

    for (int k = 1; k <= up_to; ++k) {
        const AffineLayer& l = net.layer(k);
        std::size_t width = l.weights.rows();
        auto& gk = f.g[static_cast<std::size_t>(k - 1)];
        auto& hk = f.h[static_cast<std::size_t>(k - 1)];
        gk.assign(width, Vec(static_cast<std::size_t>(d0), 0.0));
        hk.assign(width, 0.0);
        for (std::size_t r = 0; r < width; ++r) {
            double h = l.bias[r];
            Vec& g = gk[r];
            for (std::size_t c = 0; c < l.weights.cols(); ++c) {
                double w = l.weights(r, c);
                if (w == 0.0)
                    continue;
                for (int i = 0; i < d0; ++i)
                    g[static_cast<std::size_t>(i)] += w * prev_g[c][static_cast<std::size_t>(i)];
                h += w * prev_h[c];
            }
            hk[r] = h;
        }
        if (k == up_to)
            break;
        if (net.has_relu(k)) {
            prev_g = gk;
            prev_h = hk;
            for (std::size_t r = 0; r < width; ++r) {
                NeuronId n{k, static_cast<int>(r)};
                int p = phase_of(n);
                bool keep;
                if (p < 0)
                    keep = e.box.status(n) == NeuronStatus::StablePositive;
                else
                    keep = p == 1;
                if (!keep) {
                    std::fill(prev_g[r].begin(), prev_g[r].end(), 0.0);
                    prev_h[r] = 0.0;
                }
            }
        }
    }
    return f;
}

// Input-space polytope of the pattern: x in the box plus one half-space per
// unstable neuron (z >= 0 or z <= 0 under its own affine form).
LinearProgram pattern_polytope(const Network& net, const InputRegion& region,
                               const Enumeration& e, const AffineForms& f, unsigned long pattern) {
    LinearProgram lp;
    Vec lo = region.effective_lo(), hi = region.effective_hi();
    for (std::size_t i = 0; i < lo.size(); ++i)
        lp.add_var(lo[i], hi[i]);
    (void)net;
    for (std::size_t u = 0; u < e.unstable.size(); ++u) {
        NeuronId n = e.unstable[u];
        const Vec& g = f.g[static_cast<std::size_t>(n.layer - 1)][static_cast<std::size_t>(n.index)];
        double h = f.h[static_cast<std::size_t>(n.layer - 1)][static_cast<std::size_t>(n.index)];
        SparseRow row;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g[i] != 0.0)
                row.emplace_back(static_cast<int>(i), g[i]);
        bool active = (pattern >> u) & 1UL;
        lp.add_row(std::move(row), active ? Rel::Ge : Rel::Le, -h);
    }
    return lp;
}

} // namespace

std::vector<std::pair<double, double>> exact_ranges(const Network& net, const InputRegion& region,
                                                    int layer,
                                                    const std::vector<SparseRow>& objectives,
                                                    int workers) {
    if (layer < 1 || layer > net.num_layers())
        throw Error("oracle: target layer out of range");
    region.validate();
    Enumeration e = prepare(net, region, layer);
    const std::size_t u = e.unstable.size();
    const unsigned long npat = 1UL << u;

    struct Acc {
        Vec lo, hi;
        bool any = false;
    };
    std::vector<Acc> per_pattern(npat);

    parallel_for(static_cast<int>(npat), workers, [&](int pi) {
        unsigned long pattern = static_cast<unsigned long>(pi);
        AffineForms f = affine_forms(net, e, pattern, layer);
        LinearProgram lp = pattern_polytope(net, region, e, f, pattern);

        Acc acc;
        acc.lo.assign(objectives.size(), kInf);
        acc.hi.assign(objectives.size(), -kInf);
        for (std::size_t oi = 0; oi < objectives.size(); ++oi) {
            // objective as affine form over x
            Vec g(static_cast<std::size_t>(net.input_dim()), 0.0);
            double h = 0.0;
            for (const auto& [idx, c] : objectives[oi]) {
                const Vec& gn = f.g[static_cast<std::size_t>(layer - 1)][static_cast<std::size_t>(idx)];
                for (std::size_t i = 0; i < g.size(); ++i)
                    g[i] += c * gn[i];
                h += c * f.h[static_cast<std::size_t>(layer - 1)][static_cast<std::size_t>(idx)];
            }
            SparseRow obj;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (g[i] != 0.0)
                    obj.emplace_back(static_cast<int>(i), g[i]);

            lp.set_objective(obj, Sense::Max);
            LpSolution smax = solve_lp(lp);
            if (smax.status == LpStatus::Infeasible)
                break; // the polytope is empty for every objective
            lp.set_objective(obj, Sense::Min);
            LpSolution smin = solve_lp(lp);
            if (smax.status != LpStatus::Optimal || smin.status != LpStatus::Optimal)
                throw Error("oracle pattern LP did not solve to optimality");
            acc.any = true;
            acc.hi[oi] = smax.objective_value + h;
            acc.lo[oi] = smin.objective_value + h;
        }
        per_pattern[static_cast<std::size_t>(pi)] = std::move(acc);
    });

    std::vector<std::pair<double, double>> out(objectives.size(), {kInf, -kInf});
    bool any = false;
    for (const Acc& acc : per_pattern) {
        if (!acc.any)
            continue;
        any = true;
        for (std::size_t oi = 0; oi < objectives.size(); ++oi) {
            out[oi].first = std::min(out[oi].first, acc.lo[oi]);
            out[oi].second = std::max(out[oi].second, acc.hi[oi]);
        }
    }
    if (!any)
        throw Error("oracle: no feasible activation pattern (inconsistent region)");
    return out;
}

std::pair<double, double> exact_range(const Network& net, const InputRegion& region,
                                      const LayerObjective& objective, int workers) {
    return exact_ranges(net, region, objective.layer, {objective.coeffs}, workers)[0];
}

ExactVerdict exact_verify(const Network& net, const InputRegion& region,
                          const RobustnessProperty& property, int workers) {
    const int t = property.true_label;
    if (t < 0 || t >= net.output_dim())
        throw Error("true_label out of range");
    const int L = net.num_layers();

    Enumeration e = prepare(net, region, L);
    const std::size_t u = e.unstable.size();
    const unsigned long npat = 1UL << u;

    struct Best {
        double margin = -kInf;
        unsigned long pattern = 0;
        int adversary = -1;
        Vec x;
    };
    std::vector<Best> per_pattern(npat);

    parallel_for(static_cast<int>(npat), workers, [&](int pi) {
        unsigned long pattern = static_cast<unsigned long>(pi);
        AffineForms f = affine_forms(net, e, pattern, L);
        LinearProgram lp = pattern_polytope(net, region, e, f, pattern);
        Best best;
        for (int j = 0; j < net.output_dim(); ++j) {
            if (j == t)
                continue;
            Vec g(static_cast<std::size_t>(net.input_dim()), 0.0);
            const Vec& gj = f.g[static_cast<std::size_t>(L - 1)][static_cast<std::size_t>(j)];
            const Vec& gt = f.g[static_cast<std::size_t>(L - 1)][static_cast<std::size_t>(t)];
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] = gj[i] - gt[i];
            double h = f.h[static_cast<std::size_t>(L - 1)][static_cast<std::size_t>(j)] -
                       f.h[static_cast<std::size_t>(L - 1)][static_cast<std::size_t>(t)];
            SparseRow obj;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (g[i] != 0.0)
                    obj.emplace_back(static_cast<int>(i), g[i]);
            lp.set_objective(obj, Sense::Max);
            LpSolution s = solve_lp(lp);
            if (s.status == LpStatus::Infeasible)
                return;
            if (s.status != LpStatus::Optimal)
                throw Error("oracle pattern LP did not solve to optimality");
            double margin = s.objective_value + h;
            if (margin > best.margin) {
                best.margin = margin;
                best.pattern = pattern;
                best.adversary = j;
                best.x = s.primal;
            }
        }
        per_pattern[static_cast<std::size_t>(pi)] = std::move(best);
    });

    Best overall;
    for (const Best& b : per_pattern)
        if (b.adversary >= 0 &&
            (b.margin > overall.margin ||
             (b.margin == overall.margin && b.pattern < overall.pattern)))
            overall = b;

    ExactVerdict v;
    v.worst_margin = overall.margin;
    if (overall.adversary < 0)
        throw Error("oracle: no feasible activation pattern (inconsistent region)");
    if (overall.margin > 0.0) {
        v.robust = false;
        Activations acts = forward(net, overall.x);
        if (argmax(acts.output()) != t)
            v.witness = overall.x;
    }
    return v;
}

} // namespace oracle
} // namespace relucert
