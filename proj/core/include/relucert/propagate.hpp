#pragma once

#include "relucert/bounds.hpp"
#include "relucert/milp.hpp"
#include "relucert/scoring.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace relucert {

enum class Method { Box, Lp, Pmilp, FullMilp };

struct PropagationConfig {
    Method method = Method::Pmilp;
    ScoreMethod scorer = ScoreMethod::Sas;

    /// k_min per layer, first entry for layer 2 (layer 1 is exact); the last
    /// entry is reused when the list is short. Empty -> per-net default:
    /// halving pattern 48,21,11,6,3,2,1 for hidden layers, 14 for the last.
    std::vector<int> schedule;
    int extra = 3;
    double threshold = 0.01;

    double mip_gap = 0.001;
    double timeout_s = 60.0;
    int workers = 0; // 0 -> hardware concurrency
    std::uint64_t seed = 1;

    int k_min_for_layer(int layer, int num_layers) const;
};

/// Layer-by-layer bound tightening: layer 1 exact, then per neuron score ->
/// select X -> MILP_X max/min, intersected with the box bounds. Solver
/// failures degrade that neuron to its box bounds.
BoundsMap pmilp_bounds(const Network& net, const InputRegion& region, const PropagationConfig& cfg);
BoundsMap pmilp_bounds(const Network& net, const InputRegion& region, const PropagationConfig& cfg,
                       int up_to_layer);

/// Recompute the bounds of one layer from the (already final) layers below it.
/// `bounds` must hold layers 1..layer-1; the layer entry is replaced.
void tighten_layer(const Network& net, const InputRegion& region, const PropagationConfig& cfg,
                   BoundsMap& bounds, int layer);

struct AblationReport {
    double layer2_uncertainty_lp = 0.0;
    double layer2_uncertainty_pmilp = 0.0;
    double layer3_uncertainty_lp_fed = 0.0;
    double layer3_uncertainty_pmilp_fed = 0.0;
};

/// Layer-3 bounds computed twice: once from LP layer-2 bounds, once from
/// pMILP layer-2 bounds. Requires >= 3 hidden layers.
AblationReport ablation_previous_layer_lp(const Network& net, const InputRegion& region,
                                          const PropagationConfig& cfg);

struct CurveRow {
    ScoreMethod scorer = ScoreMethod::Sas;
    int k = 0;
    double mean_uncertainty = 0.0;
    double wall_ms = 0.0;
};

/// For each (scorer, K): retighten the target layer with k_min = K (no extras)
/// over bounds below computed once from cfg. Rows in scorer-major, K-ascending order.
std::vector<CurveRow> uncertainty_curve(const Network& net, const InputRegion& region,
                                        int target_layer, const std::vector<ScoreMethod>& scorers,
                                        const std::vector<int>& ks, const PropagationConfig& cfg);

/// Deterministic body (scorer, k, mean_uncertainty); timings go elsewhere.
std::string curve_to_csv(const std::vector<CurveRow>& rows);
std::string curve_timing_to_csv(const std::vector<CurveRow>& rows);

const char* to_string(Method m);

} // namespace relucert
