#pragma once

#include "relucert/milp.hpp"
#include "relucert/network.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace relucert {
namespace oracle {

inline constexpr int kMaxUnstable = 20;

/// Exact range of an objective row by enumerating every ReLU activation
/// pattern: under a fixed pattern the network is affine in the input, so each
/// pattern contributes one small input-space LP. Independent of the MILP
/// encoding path. Guard: at most kMaxUnstable unstable neurons below the target.
std::pair<double, double> exact_range(const Network& net, const InputRegion& region,
                                      const LayerObjective& objective, int workers = 0);

/// Ranges of several objectives over the same layer in one enumeration sweep.
std::vector<std::pair<double, double>> exact_ranges(const Network& net, const InputRegion& region,
                                                    int layer,
                                                    const std::vector<SparseRow>& objectives,
                                                    int workers = 0);

struct ExactVerdict {
    bool robust = true;
    std::optional<Vec> witness; // confirmed by a forward pass when present
    double worst_margin = -kInf;
};

/// Ground-truth robustness for tiny networks via exact_range on every margin row.
ExactVerdict exact_verify(const Network& net, const InputRegion& region,
                          const RobustnessProperty& property, int workers = 0);

} // namespace oracle
} // namespace relucert
