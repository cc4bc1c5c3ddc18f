#pragma once

#include "relucert/network.hpp"
#include "relucert/types.hpp"

#include <string>
#include <vector>

namespace relucert {

struct Interval {
    double lb = -kInf;
    double ub = kInf;

    double width() const { return ub - lb; }
};

enum class NeuronStatus { StablePositive, StableNegative, Unstable };

/// Certified pre-activation intervals, filled layer by layer (layer 1 first).
class BoundsMap {
public:
    BoundsMap() = default;

    int num_layers() const { return static_cast<int>(layers_.size()); }
    bool has_layer(int layer) const { return layer >= 1 && layer <= num_layers(); }

    void push_layer(std::vector<Interval> bounds);
    void set_layer(int layer, std::vector<Interval> bounds);

    const std::vector<Interval>& layer(int layer) const;
    const Interval& at(NeuronId n) const { return layer(n.layer)[static_cast<std::size_t>(n.index)]; }
    Interval& at(NeuronId n);

    NeuronStatus status(NeuronId n) const;
    bool unstable(NeuronId n) const { return status(n) == NeuronStatus::Unstable; }

    /// Post-activation interval [max(0,LB), max(0,UB)].
    Interval post(NeuronId n) const;

    /// Truncate to the first `layers` layers (keeps a computed prefix).
    BoundsMap prefix(int layers) const;

private:
    std::vector<std::vector<Interval>> layers_;
};

/// Interval arithmetic through the network; layer-1 bounds are exact.
BoundsMap box_propagate(const Network& net, const InputRegion& region);

/// Pre-activation intervals of one layer from the post intervals of the layer
/// below it (the input box for layer 1). `below` must hold layers < layer.
std::vector<Interval> interval_layer(const Network& net, const InputRegion& region,
                                     const BoundsMap& below, int layer);

/// Mean of UB - LB over the layer's neurons.
double average_uncertainty(const BoundsMap& bounds, int layer);

/// CSV rows: layer, index, LB, UB, status.
std::string bounds_to_csv(const BoundsMap& bounds);

const char* to_string(NeuronStatus s);

} // namespace relucert
