#pragma once

#include "relucert/bounds.hpp"
#include "relucert/milp.hpp"
#include "relucert/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace relucert {

enum class ScoreMethod { Sas, GsSr, GsFsb, Huang, Random };

struct ScoreTable {
    std::map<NeuronId, double> scores; // unstable neurons only, finite and >= 0
    ScoreMethod method = ScoreMethod::Sas;
    std::string target;
    Sense sense = Sense::Max;

    double at_or_zero(NeuronId n) const;
    /// Neurons sorted by score descending, ties by (layer, index) ascending.
    std::vector<NeuronId> ranked() const;
};

/// Slope of the triangle's upper chord: max(0,ub) / (max(0,ub) - min(0,lb)).
/// Returns 0 when ub <= 0 and 1 when lb >= 0 (covers point intervals).
double rate(double lb, double ub);

/// Lambda-backpropagation scores (BaB-SR / FSB adapted); covers all unstable
/// neurons in layers 1..target.layer-1.
ScoreTable score_gs(const Network& net, const BoundsMap& bounds, const LayerObjective& target,
                    ScoreMethod variant /* GsSr or GsFsb */);

struct SasResult {
    ScoreTable table;
    LpSolution sol; // primal of the X = {} relaxation, indexed by base model vars
};

/// Solution-aware scoring from one LP solve on the X = {} model. Scores the two
/// layers preceding the target layer; deeper neurons are not scored. For
/// Sense::Min the objective row is negated and the same machinery applies.
SasResult score_sas(const Network& net, const BoundsMap& bounds, const LayerObjective& target,
                    Sense sense, const MilpModel& base_model);

/// strength(a) = |W_{a,target}| * (UB(a) - LB(a)) over the previous layer.
ScoreTable score_huang(const Network& net, const BoundsMap& bounds, NeuronId target);

/// Seeded uniform scores over all unstable neurons below the target layer.
ScoreTable score_random(const Network& net, const BoundsMap& bounds, const LayerObjective& target,
                        std::uint64_t seed);

/// Exact bound improvement of opening one neuron: LP optimum minus the exact
/// MILP_{n} optimum (test support; two solver calls).
double improve_oracle(const Network& net, const InputRegion& region, const BoundsMap& bounds,
                      const LayerObjective& target, NeuronId n, Sense sense);

/// Top k_min by rank, then up to `extra` more while their score exceeds `threshold`.
OpenSet select_open_set(const ScoreTable& scores, int k_min, int extra = 3, double threshold = 0.01);

/// CSV rows: method, layer, index, score, rank.
std::string score_table_to_csv(const ScoreTable& table);

const char* to_string(ScoreMethod m);

} // namespace relucert
