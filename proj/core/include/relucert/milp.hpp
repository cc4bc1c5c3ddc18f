#pragma once

#include "relucert/bounds.hpp"
#include "relucert/lp.hpp"
#include "relucert/network.hpp"
#include "relucert/types.hpp"

#include <optional>
#include <vector>

namespace relucert {

/// Unstable ReLUs encoded exactly (binary indicator); kept in selection order
/// so prefixes of a ranking are meaningful.
using OpenSet = std::vector<NeuronId>;

/// MILP_X model: big-M encoding with binary indicator for neurons in X,
/// triangle relaxation for the other unstable neurons.
struct MilpModel {
    LinearProgram lp;
    const Network* net = nullptr;
    InputRegion region;
    int up_to = 0; // last encoded layer; its pre-activation vars are unbounded

    std::vector<int> input_vars;
    std::vector<std::vector<int>> pre_vars;  // [layer-1][index]
    std::vector<std::vector<int>> post_vars; // [layer-1][index], -1 where absent
    std::vector<std::pair<NeuronId, int>> indicators;

    int pre_var(NeuronId n) const { return pre_vars[static_cast<std::size_t>(n.layer - 1)][static_cast<std::size_t>(n.index)]; }
    int post_var(NeuronId n) const { return post_vars[static_cast<std::size_t>(n.layer - 1)][static_cast<std::size_t>(n.index)]; }
};

/// Objective over pre-activation variables of one layer.
struct LayerObjective {
    int layer = 0;
    SparseRow coeffs; // sparse over neuron indices within the layer

    static LayerObjective single(NeuronId n) { return {n.layer, {{n.index, 1.0}}}; }
};

enum class MilpStatus { Proven, GapReached, TimedOut };

struct MilpResult {
    /// Valid over-approximation of the optimum in the objective sense even on early stop.
    double safe_bound = 0.0;
    std::optional<double> incumbent_value;
    Vec incumbent_primal;
    double gap = 0.0;
    MilpStatus status = MilpStatus::Proven;
    long nodes = 0;
};

struct MilpConfig {
    double mip_gap = 0.001;
    double timeout_s = 60.0;
    /// Static branch order (intersected with X); empty -> most-fractional.
    std::vector<NeuronId> branch_order;
    SimplexConfig lp;
};

/// Encode layers 1..up_to over the input box. Requires bounds for all layers
/// < up_to; layer up_to gets unbounded pre-activation variables and no ReLU rows.
/// Stable members of X are dropped (no indicator is ever created for them).
MilpModel build_model(const Network& net, const InputRegion& region, const BoundsMap& bounds,
                      const OpenSet& X, int up_to);

/// Branch-and-bound on the ReLU indicators. Branching fixes an indicator to 0 or 1
/// (the big-M rows then pin the ReLU phase); exploration is best-bound-first with a
/// depth-first dive from each selected node; the incumbent is seeded by rounding the
/// root LP primal. Interruption (gap/timeout) is reported in status and never
/// invalidates safe_bound. The objective is a row over the model's variables.
MilpResult solve_milp(const MilpModel& model, const SparseRow& objective, Sense sense,
                      const MilpConfig& cfg = {});
MilpResult solve_milp(const MilpModel& model, const LayerObjective& objective, Sense sense,
                      const MilpConfig& cfg = {});

const char* to_string(MilpStatus s);

} // namespace relucert
