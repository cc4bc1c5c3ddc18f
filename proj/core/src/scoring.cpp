#include "relucert/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace relucert {

const char* to_string(ScoreMethod m) {
    switch (m) {
    case ScoreMethod::Sas: return "sas";
    case ScoreMethod::GsSr: return "gs_sr";
    case ScoreMethod::GsFsb: return "gs_fsb";
    case ScoreMethod::Huang: return "huang";
    case ScoreMethod::Random: return "random";
    }
    return "?";
}

double ScoreTable::at_or_zero(NeuronId n) const {
    auto it = scores.find(n);
    return it == scores.end() ? 0.0 : it->second;
}

std::vector<NeuronId> ScoreTable::ranked() const {
    std::vector<std::pair<NeuronId, double>> items(scores.begin(), scores.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<NeuronId> out;
    out.reserve(items.size());
    for (const auto& [n, s] : items)
        out.push_back(n);
    return out;
}

double rate(double lb, double ub) {
    if (lb > ub)
        throw Error("rate: lb > ub");
    if (ub <= 0.0)
        return 0.0;
    if (lb >= 0.0)
        return 1.0;
    return ub / (ub - lb);
}

namespace {

std::string describe(const LayerObjective& t) {
    std::ostringstream os;
    os << "layer" << t.layer << ':';
    for (std::size_t i = 0; i < t.coeffs.size(); ++i) {
        if (i)
            os << '+';
        os << t.coeffs[i].second << "*n" << t.coeffs[i].first;
    }
    return os.str();
}

// Effective weight from each neuron of layer L-1 into the objective row.
Vec fold_objective(const Network& net, const LayerObjective& target, double sgn) {
    const AffineLayer& last = net.layer(target.layer);
    Vec w(last.weights.cols(), 0.0);
    for (const auto& [idx, c] : target.coeffs)
        for (std::size_t b = 0; b < last.weights.cols(); ++b)
            w[b] += sgn * c * last.weights(static_cast<std::size_t>(idx), b);
    return w;
}

} // namespace

ScoreTable score_gs(const Network& net, const BoundsMap& bounds, const LayerObjective& target,
                    ScoreMethod variant) {
    if (variant != ScoreMethod::GsSr && variant != ScoreMethod::GsFsb)
        throw Error("score_gs expects the GsSr or GsFsb variant");
    ScoreTable table;
    table.method = variant;
    table.target = describe(target);
    const int L = target.layer;
    if (L <= 1)
        return table;

    // lambda over layer L-1, then backpropagated through the rates.
    Vec lambda = fold_objective(net, target, 1.0);
    for (int k = L - 1; k >= 1; --k) {
        const AffineLayer& lay = net.layer(k);
        for (int j = 0; j < static_cast<int>(lay.weights.rows()); ++j) {
            NeuronId n{k, j};
            if (!bounds.unstable(n))
                continue;
            const Interval& iv = bounds.at(n);
            double r = rate(iv.lb, iv.ub);
            double lam = lambda[static_cast<std::size_t>(j)];
            double bias = lay.bias[static_cast<std::size_t>(j)];
            double bias_term = variant == ScoreMethod::GsSr ? std::max(0.0, lam * bias)
                                                            : std::min(0.0, lam * bias);
            double s = std::abs(r * iv.lb * std::max(lam, 0.0) + bias_term - r * lam * bias);
            table.scores[n] = s;
        }
        if (k == 1)
            break;
        // lambda_{k-1} = (W^k)^T (r(u_k) . lambda_k)
        Vec masked(lay.weights.rows());
        for (std::size_t j = 0; j < masked.size(); ++j) {
            const Interval& iv = bounds.at({k, static_cast<int>(j)});
            masked[j] = rate(iv.lb, iv.ub) * lambda[j];
        }
        Vec prev(lay.weights.cols(), 0.0);
        for (std::size_t j = 0; j < lay.weights.rows(); ++j)
            for (std::size_t i = 0; i < lay.weights.cols(); ++i)
                prev[i] += lay.weights(j, i) * masked[j];
        lambda = std::move(prev);
    }
    return table;
}

SasResult score_sas(const Network& net, const BoundsMap& bounds, const LayerObjective& target,
                    Sense sense, const MilpModel& base_model) {
    if (base_model.up_to != target.layer)
        throw Error("score_sas: base model must be built up to the target layer");
    if (!base_model.indicators.empty())
        throw Error("score_sas: base model must use X = {}");

    const double sgn = sense == Sense::Max ? 1.0 : -1.0;
    LinearProgram lp = base_model.lp;
    SparseRow obj;
    for (const auto& [idx, c] : target.coeffs)
        obj.emplace_back(base_model.pre_var({target.layer, idx}), sgn * c);
    lp.set_objective(obj, Sense::Max);
    LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::Infeasible)
        throw Error("score_sas: LP relaxation infeasible (inconsistent bounds)");
    if (sol.status != LpStatus::Optimal)
        throw Error(std::string("score_sas: LP ended with status ") + to_string(sol.status));

    SasResult out;
    out.sol = sol;
    out.table.method = ScoreMethod::Sas;
    out.table.sense = sense;
    out.table.target = describe(target);

    const int L = target.layer;
    if (L <= 1)
        return out;
    const Vec wz = fold_objective(net, target, sgn);
    const int bl = L - 1;

    auto pre_val = [&](NeuronId n) { return sol.primal[static_cast<std::size_t>(base_model.pre_var(n))]; };
    auto post_val = [&](NeuronId n) -> double {
        switch (bounds.status(n)) {
        case NeuronStatus::StablePositive: return pre_val(n);
        case NeuronStatus::StableNegative: return 0.0;
        case NeuronStatus::Unstable:
            return sol.primal[static_cast<std::size_t>(base_model.post_var(n))];
        }
        return 0.0;
    };

    // One layer back: Utility = W_bz (sol(bhat) - ReLU(sol(b))).
    for (int j = 0; j < net.layer_dim(bl); ++j) {
        NeuronId b{bl, j};
        if (!bounds.unstable(b))
            continue;
        double sb = pre_val(b);
        double util = wz[static_cast<std::size_t>(j)] * (post_val(b) - std::max(0.0, sb));
        out.table.scores[b] = std::abs(util);
    }

    // Two layers back: propagate the post-activation correction of `a` through
    // layer bl with the per-neuron case analysis on W_bz and sol(b).
    if (bl >= 2) {
        const int al = bl - 1;
        const AffineLayer& mid = net.layer(bl);
        for (int ja = 0; ja < net.layer_dim(al); ++ja) {
            NeuronId a{al, ja};
            if (!bounds.unstable(a))
                continue;
            double delta_ahat = std::max(0.0, pre_val(a)) - post_val(a);
            double util = 0.0;
            for (int jb = 0; jb < net.layer_dim(bl); ++jb) {
                double w_ab = mid.weights(static_cast<std::size_t>(jb), static_cast<std::size_t>(ja));
                double delta_b = w_ab * delta_ahat;
                double w_bz = wz[static_cast<std::size_t>(jb)];
                if (w_bz == 0.0)
                    continue;
                NeuronId b{bl, jb};
                const Interval& iv = bounds.at(b);
                double delta_bhat;
                if (w_bz > 0.0) {
                    delta_bhat = rate(iv.lb, iv.ub) * delta_b;
                } else if (pre_val(b) >= 0.0) {
                    delta_bhat = std::max(delta_b, -pre_val(b));
                } else {
                    delta_bhat = std::max(0.0, delta_b + pre_val(b));
                }
                util -= w_bz * delta_bhat;
            }
            out.table.scores[a] = std::abs(util);
        }
    }
    return out;
}

ScoreTable score_huang(const Network& net, const BoundsMap& bounds, NeuronId target) {
    ScoreTable table;
    table.method = ScoreMethod::Huang;
    table.target = describe(LayerObjective::single(target));
    if (target.layer <= 1)
        return table;
    const AffineLayer& lay = net.layer(target.layer);
    const int prev = target.layer - 1;
    for (int j = 0; j < net.layer_dim(prev); ++j) {
        NeuronId a{prev, j};
        if (!bounds.unstable(a))
            continue;
        const Interval& iv = bounds.at(a);
        double w = lay.weights(static_cast<std::size_t>(target.index), static_cast<std::size_t>(j));
        table.scores[a] = std::abs(w) * iv.width();
    }
    return table;
}

ScoreTable score_random(const Network& net, const BoundsMap& bounds, const LayerObjective& target,
                        std::uint64_t seed) {
    ScoreTable table;
    table.method = ScoreMethod::Random;
    table.target = describe(target);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int k = 1; k < target.layer; ++k) {
        if (!net.has_relu(k))
            continue;
        for (int j = 0; j < net.layer_dim(k); ++j) {
            NeuronId n{k, j};
            double s = uni(rng); // drawn in neuron order so the ranking is seed-stable
            if (bounds.unstable(n))
                table.scores[n] = s;
        }
    }
    return table;
}

double improve_oracle(const Network& net, const InputRegion& region, const BoundsMap& bounds,
                      const LayerObjective& target, NeuronId n, Sense sense) {
    MilpConfig cfg;
    cfg.mip_gap = 0.0;
    cfg.timeout_s = 1e9;

    MilpModel relaxed = build_model(net, region, bounds, {}, target.layer);
    MilpResult lp = solve_milp(relaxed, target, sense, cfg);

    MilpModel opened = build_model(net, region, bounds, {n}, target.layer);
    MilpResult exact = solve_milp(opened, target, sense, cfg);

    double sgn = sense == Sense::Max ? 1.0 : -1.0;
    return sgn * (lp.safe_bound - exact.safe_bound);
}

OpenSet select_open_set(const ScoreTable& scores, int k_min, int extra, double threshold) {
    if (k_min < 0)
        throw Error("select_open_set: k_min must be nonnegative");
    std::vector<NeuronId> ranked = scores.ranked();
    OpenSet out;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (static_cast<int>(i) < k_min) {
            out.push_back(ranked[i]);
        } else if (static_cast<int>(i) < k_min + extra &&
                   scores.at_or_zero(ranked[i]) > threshold) {
            out.push_back(ranked[i]);
        } else {
            break;
        }
    }
    return out;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string score_table_to_csv(const ScoreTable& table) {
    std::ostringstream os;
    os << "method,layer,index,score,rank\n";
    std::vector<NeuronId> ranked = table.ranked();
    for (std::size_t i = 0; i < ranked.size(); ++i)
        os << to_string(table.method) << ',' << ranked[i].layer << ',' << ranked[i].index << ','
           << fmt_double(table.at_or_zero(ranked[i])) << ',' << (i + 1) << '\n';
    return os.str();
}

} // namespace relucert
