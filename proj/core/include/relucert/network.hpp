#pragma once

#include "relucert/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace relucert {

struct AffineLayer {
    Mat weights; // d_i x d_{i-1}
    Vec bias;    // d_i
};

/// Feed-forward dense ReLU network: ReLU after every layer except the last.
/// Immutable after construction; forward/gradient are pure.
class Network {
public:
    explicit Network(std::vector<AffineLayer> layers);

    int num_layers() const { return static_cast<int>(layers_.size()); }
    int input_dim() const { return static_cast<int>(layers_.front().weights.cols()); }
    int output_dim() const { return static_cast<int>(layers_.back().weights.rows()); }
    /// Width of layer i (1-based); layer 0 is the input.
    int layer_dim(int layer) const;
    /// True for layers followed by a ReLU (all but the last).
    bool has_relu(int layer) const { return layer >= 1 && layer < num_layers(); }

    const AffineLayer& layer(int i) const { return layers_[static_cast<std::size_t>(i - 1)]; }

private:
    std::vector<AffineLayer> layers_;
};

/// L-inf ball of radius epsilon around center, clamped to [clip_lo, clip_hi].
struct InputRegion {
    Vec center;
    double epsilon = 0.0;
    Vec clip_lo; // may be empty -> unclamped
    Vec clip_hi;

    Vec effective_lo() const;
    Vec effective_hi() const;
    bool contains(const Vec& x, double tol = 0.0) const;
    void validate() const;
};

struct RobustnessProperty {
    int true_label = 0;
};

/// Per-layer pre-activation (z) and post-activation (zhat) values.
struct Activations {
    std::vector<Vec> pre;
    std::vector<Vec> post; // post[i] = max(0, pre[i]) for hidden layers; last layer has no post

    const Vec& output() const { return pre.back(); }
};

Network load_network(const std::string& path);
Network parse_network(const std::string& json_text);

std::pair<InputRegion, RobustnessProperty> load_property(const std::string& path);
std::pair<InputRegion, RobustnessProperty> parse_property(const std::string& json_text);

Activations forward(const Network& net, const Vec& x);

/// Gradient of out_coeffs . f(x) with respect to x (reverse mode, subgradient 0 at z = 0).
Vec gradient(const Network& net, const Vec& x, const Vec& out_coeffs);

int argmax(const Vec& v);

} // namespace relucert
