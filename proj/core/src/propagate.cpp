#include "relucert/propagate.hpp"

#include "relucert/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

namespace relucert {

const char* to_string(Method m) {
    switch (m) {
    case Method::Box: return "box";
    case Method::Lp: return "lp";
    case Method::Pmilp: return "pmilp";
    case Method::FullMilp: return "fullmilp";
    }
    return "?";
}

int PropagationConfig::k_min_for_layer(int layer, int num_layers) const {
    if (layer <= 1)
        return 0;
    if (!schedule.empty()) {
        std::size_t idx = static_cast<std::size_t>(layer - 2);
        return schedule[std::min(idx, schedule.size() - 1)];
    }
    if (layer == num_layers)
        return 14;
    static const int halving[] = {48, 21, 11, 6, 3, 2, 1};
    std::size_t idx = static_cast<std::size_t>(layer - 2);
    return halving[std::min<std::size_t>(idx, 6)];
}

namespace {

// Deterministic per-neuron stream so results do not depend on thread scheduling.
std::uint64_t mix_seed(std::uint64_t seed, int layer, int index, Sense sense) {
    std::uint64_t h = seed;
    h ^= 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(layer) +
         (static_cast<std::uint64_t>(index) << 17) + (sense == Sense::Max ? 0u : 1u);
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

OpenSet all_unstable_below(const Network& net, const BoundsMap& bounds, int layer) {
    OpenSet x;
    for (int k = 1; k < layer; ++k) {
        if (!net.has_relu(k))
            continue;
        for (int j = 0; j < net.layer_dim(k); ++j)
            if (bounds.unstable({k, j}))
                x.push_back({k, j});
    }
    return x;
}

SparseRow negated(const SparseRow& row) {
    SparseRow out = row;
    for (auto& [j, c] : out)
        c = -c;
    return out;
}

struct SenseBound {
    double value;
    bool degraded = false;
};

SenseBound solve_one_sense(const Network& net, const InputRegion& region, const BoundsMap& bounds,
                           const PropagationConfig& cfg, const MilpModel& base_model,
                           const LayerObjective& target, Sense sense, double box_fallback) {
    try {
        LayerObjective gs_target = target;
        if (sense == Sense::Min)
            gs_target.coeffs = negated(gs_target.coeffs);
        ScoreTable gs_fsb; // filled lazily: selection for GsFsb, ordering for everyone
        bool have_gs = false;
        auto gs_table = [&]() -> const ScoreTable& {
            if (!have_gs) {
                gs_fsb = score_gs(net, bounds, gs_target, ScoreMethod::GsFsb);
                have_gs = true;
            }
            return gs_fsb;
        };

        OpenSet x;
        if (cfg.method == Method::Lp) {
            // X = {} is the LP relaxation
        } else if (cfg.method == Method::FullMilp) {
            x = all_unstable_below(net, bounds, target.layer);
        } else {
            int k_min = cfg.k_min_for_layer(target.layer, net.num_layers());
            ScoreTable table;
            switch (cfg.scorer) {
            case ScoreMethod::Sas:
                table = score_sas(net, bounds, target, sense, base_model).table;
                break;
            case ScoreMethod::GsSr:
                table = score_gs(net, bounds, gs_target, ScoreMethod::GsSr);
                break;
            case ScoreMethod::GsFsb:
                table = gs_table();
                break;
            case ScoreMethod::Huang:
                if (target.coeffs.size() != 1)
                    throw Error("the Huang scorer needs a single-neuron target");
                table = score_huang(net, bounds, {target.layer, target.coeffs[0].first});
                break;
            case ScoreMethod::Random:
                table = score_random(net, bounds, target,
                                     mix_seed(cfg.seed, target.layer,
                                              target.coeffs.empty() ? 0 : target.coeffs[0].first,
                                              sense));
                break;
            }
            x = select_open_set(table, k_min, cfg.extra, cfg.threshold);
        }

        MilpConfig mcfg;
        mcfg.mip_gap = cfg.mip_gap;
        mcfg.timeout_s = cfg.timeout_s;
        if (!x.empty()) {
            // Static branch order: GS(FSB) descending on the same target.
            const ScoreTable& order = gs_table();
            OpenSet sorted = x;
            std::stable_sort(sorted.begin(), sorted.end(), [&](NeuronId a, NeuronId b) {
                double sa = order.at_or_zero(a), sb = order.at_or_zero(b);
                if (sa != sb)
                    return sa > sb;
                return a < b;
            });
            mcfg.branch_order = sorted;
        }

        MilpModel model = build_model(net, region, bounds, x, target.layer);
        MilpResult res = solve_milp(model, target, sense, mcfg);
        return {res.safe_bound, false};
    } catch (const std::exception& e) {
        std::cerr << "warning: bound solve degraded to box for layer " << target.layer
                  << " neuron " << (target.coeffs.empty() ? -1 : target.coeffs[0].first) << " ("
                  << e.what() << ")\n";
        return {box_fallback, true};
    }
}

} // namespace

void tighten_layer(const Network& net, const InputRegion& region, const PropagationConfig& cfg,
                   BoundsMap& bounds, int layer) {
    std::vector<Interval> box = interval_layer(net, region, bounds, layer);
    if (layer == 1 || cfg.method == Method::Box) {
        bounds.set_layer(layer, std::move(box));
        return;
    }

    // The X = {} relaxation is shared by every neuron of the layer.
    MilpModel base_model = build_model(net, region, bounds, {}, layer);

    std::vector<Interval> out = box;
    parallel_for(static_cast<int>(box.size()), cfg.workers, [&](int j) {
        const Interval& biv = box[static_cast<std::size_t>(j)];
        LayerObjective target{layer, {{j, 1.0}}};
        SenseBound up = solve_one_sense(net, region, bounds, cfg, base_model, target, Sense::Max, biv.ub);
        SenseBound dn = solve_one_sense(net, region, bounds, cfg, base_model, target, Sense::Min, biv.lb);
        double lb = std::max(biv.lb, dn.value);
        double ub = std::min(biv.ub, up.value);
        if (lb > ub) {
            // numerical crossing; the box is always sound
            lb = biv.lb;
            ub = biv.ub;
        }
        out[static_cast<std::size_t>(j)] = {lb, ub};
    });

    bounds.set_layer(layer, std::move(out));
}

BoundsMap pmilp_bounds(const Network& net, const InputRegion& region, const PropagationConfig& cfg,
                       int up_to_layer) {
    region.validate();
    if (up_to_layer < 0 || up_to_layer > net.num_layers())
        throw Error("pmilp_bounds: layer out of range");
    BoundsMap bm;
    for (int k = 1; k <= up_to_layer; ++k)
        tighten_layer(net, region, cfg, bm, k);
    return bm;
}

BoundsMap pmilp_bounds(const Network& net, const InputRegion& region, const PropagationConfig& cfg) {
    return pmilp_bounds(net, region, cfg, net.num_layers());
}

AblationReport ablation_previous_layer_lp(const Network& net, const InputRegion& region,
                                          const PropagationConfig& cfg) {
    if (net.num_layers() < 4)
        throw Error("the ablation needs at least 3 hidden layers");

    PropagationConfig lp_cfg = cfg;
    lp_cfg.method = Method::Lp;
    PropagationConfig acc_cfg = cfg;
    if (acc_cfg.method == Method::Box || acc_cfg.method == Method::Lp)
        acc_cfg.method = Method::Pmilp;

    BoundsMap base = pmilp_bounds(net, region, acc_cfg, 1);

    BoundsMap lp_fed = base;
    tighten_layer(net, region, lp_cfg, lp_fed, 2);
    BoundsMap pmilp_fed = base;
    tighten_layer(net, region, acc_cfg, pmilp_fed, 2);

    AblationReport rep;
    rep.layer2_uncertainty_lp = average_uncertainty(lp_fed, 2);
    rep.layer2_uncertainty_pmilp = average_uncertainty(pmilp_fed, 2);

    tighten_layer(net, region, acc_cfg, lp_fed, 3);
    tighten_layer(net, region, acc_cfg, pmilp_fed, 3);
    rep.layer3_uncertainty_lp_fed = average_uncertainty(lp_fed, 3);
    rep.layer3_uncertainty_pmilp_fed = average_uncertainty(pmilp_fed, 3);
    return rep;
}

std::vector<CurveRow> uncertainty_curve(const Network& net, const InputRegion& region,
                                        int target_layer, const std::vector<ScoreMethod>& scorers,
                                        const std::vector<int>& ks, const PropagationConfig& cfg) {
    if (target_layer < 2 || target_layer > net.num_layers())
        throw Error("uncertainty_curve: target layer out of range");
    BoundsMap below = pmilp_bounds(net, region, cfg, target_layer - 1);

    std::vector<CurveRow> rows;
    for (ScoreMethod scorer : scorers) {
        for (int k : ks) {
            PropagationConfig run = cfg;
            run.method = Method::Pmilp;
            run.scorer = scorer;
            run.schedule = {k};
            run.extra = 0;
            BoundsMap bm = below;
            auto t0 = std::chrono::steady_clock::now();
            tighten_layer(net, region, run, bm, target_layer);
            double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
            rows.push_back({scorer, k, average_uncertainty(bm, target_layer), ms});
        }
    }
    return rows;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string curve_to_csv(const std::vector<CurveRow>& rows) {
    std::ostringstream os;
    os << "scorer,k,mean_uncertainty\n";
    for (const auto& r : rows)
        os << to_string(r.scorer) << ',' << r.k << ',' << fmt_double(r.mean_uncertainty) << '\n';
    return os.str();
}

std::string curve_timing_to_csv(const std::vector<CurveRow>& rows) {
    std::ostringstream os;
    os << "scorer,k,wall_ms\n";
    for (const auto& r : rows)
        os << to_string(r.scorer) << ',' << r.k << ',' << fmt_double(r.wall_ms) << '\n';
    return os.str();
}

} // namespace relucert
