#include "relucert/network.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace relucert {

using nlohmann::json;

Network::Network(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty())
        throw Error("network has no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.weights.rows() == 0 || l.weights.cols() == 0)
            throw Error("layer " + std::to_string(i + 1) + " has an empty weight matrix");
        if (l.bias.size() != l.weights.rows())
            throw Error("layer " + std::to_string(i + 1) + " bias length " +
                        std::to_string(l.bias.size()) + " does not match " +
                        std::to_string(l.weights.rows()) + " rows");
        if (i > 0 && l.weights.cols() != layers_[i - 1].weights.rows())
            throw Error("layer " + std::to_string(i + 1) + " expects " +
                        std::to_string(l.weights.cols()) + " inputs but layer " +
                        std::to_string(i) + " outputs " +
                        std::to_string(layers_[i - 1].weights.rows()));
        for (double w : l.weights.data())
            if (!std::isfinite(w))
                throw Error("layer " + std::to_string(i + 1) + " has a non-finite weight");
        for (double b : l.bias)
            if (!std::isfinite(b))
                throw Error("layer " + std::to_string(i + 1) + " has a non-finite bias");
    }
}

int Network::layer_dim(int layer) const {
    if (layer == 0)
        return input_dim();
    return static_cast<int>(layers_[static_cast<std::size_t>(layer - 1)].weights.rows());
}

Vec InputRegion::effective_lo() const {
    Vec lo(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) {
        lo[i] = center[i] - epsilon;
        if (!clip_lo.empty())
            lo[i] = std::max(lo[i], clip_lo[i]);
    }
    return lo;
}

Vec InputRegion::effective_hi() const {
    Vec hi(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) {
        hi[i] = center[i] + epsilon;
        if (!clip_hi.empty())
            hi[i] = std::min(hi[i], clip_hi[i]);
    }
    return hi;
}

bool InputRegion::contains(const Vec& x, double tol) const {
    if (x.size() != center.size())
        return false;
    Vec lo = effective_lo(), hi = effective_hi();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] - tol || x[i] > hi[i] + tol)
            return false;
    return true;
}

void InputRegion::validate() const {
    if (center.empty())
        throw Error("input region has an empty center");
    if (!(epsilon >= 0.0))
        throw Error("epsilon must be nonnegative");
    if (!clip_lo.empty() && clip_lo.size() != center.size())
        throw Error("clip_lo length does not match center");
    if (!clip_hi.empty() && clip_hi.size() != center.size())
        throw Error("clip_hi length does not match center");
    Vec lo = effective_lo(), hi = effective_hi();
    for (std::size_t i = 0; i < center.size(); ++i)
        if (lo[i] > hi[i])
            throw Error("effective input box is empty at coordinate " + std::to_string(i));
}

namespace {

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("parse error in " + path + ": " + e.what());
    }
    return j;
}

Vec to_vec(const json& j, const char* what) {
    if (!j.is_array())
        throw Error(std::string(what) + " must be an array");
    Vec v;
    v.reserve(j.size());
    for (const auto& e : j)
        v.push_back(e.get<double>());
    return v;
}

Network network_from_json(const json& j) {
    if (!j.contains("layers") || !j["layers"].is_array())
        throw Error("network JSON must contain a \"layers\" array");
    std::vector<AffineLayer> layers;
    for (const auto& jl : j["layers"]) {
        const auto& jw = jl.at("weights");
        if (!jw.is_array() || jw.empty())
            throw Error("layer weights must be a non-empty 2-D array");
        std::size_t rows = jw.size();
        std::size_t cols = jw[0].size();
        Mat w(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            if (jw[r].size() != cols)
                throw Error("ragged weight matrix in layer " + std::to_string(layers.size() + 1));
            for (std::size_t c = 0; c < cols; ++c)
                w(r, c) = jw[r][c].get<double>();
        }
        layers.push_back({std::move(w), to_vec(jl.at("bias"), "bias")});
    }
    return Network(std::move(layers));
}

} // namespace

Network load_network(const std::string& path) {
    return network_from_json(parse_file(path));
}

Network parse_network(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(std::string("network parse error: ") + e.what());
    }
    return network_from_json(j);
}

namespace {

std::pair<InputRegion, RobustnessProperty> property_from_json(const json& j) {
    InputRegion region;
    region.center = to_vec(j.at("center"), "center");
    region.epsilon = j.at("epsilon").get<double>();
    if (j.contains("clip")) {
        const auto& jc = j["clip"];
        if (!jc.is_array() || jc.size() != 2)
            throw Error("clip must be [lo, hi]");
        if (jc[0].is_number()) {
            region.clip_lo.assign(region.center.size(), jc[0].get<double>());
            region.clip_hi.assign(region.center.size(), jc[1].get<double>());
        } else {
            region.clip_lo = to_vec(jc[0], "clip lo");
            region.clip_hi = to_vec(jc[1], "clip hi");
        }
    }
    region.validate();
    RobustnessProperty prop;
    prop.true_label = j.at("true_label").get<int>();
    if (prop.true_label < 0)
        throw Error("true_label must be nonnegative");
    return {region, prop};
}

} // namespace

std::pair<InputRegion, RobustnessProperty> load_property(const std::string& path) {
    return property_from_json(parse_file(path));
}

std::pair<InputRegion, RobustnessProperty> parse_property(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(std::string("property parse error: ") + e.what());
    }
    return property_from_json(j);
}

Activations forward(const Network& net, const Vec& x) {
    if (static_cast<int>(x.size()) != net.input_dim())
        throw Error("input has dimension " + std::to_string(x.size()) + ", network expects " +
                    std::to_string(net.input_dim()));
    Activations acts;
    Vec cur = x;
    for (int i = 1; i <= net.num_layers(); ++i) {
        const auto& l = net.layer(i);
        Vec z(l.weights.rows());
        for (std::size_t r = 0; r < l.weights.rows(); ++r) {
            double s = l.bias[r];
            for (std::size_t c = 0; c < l.weights.cols(); ++c)
                s += l.weights(r, c) * cur[c];
            z[r] = s;
        }
        acts.pre.push_back(z);
        if (net.has_relu(i)) {
            for (double& v : z)
                v = std::max(0.0, v);
            acts.post.push_back(z);
            cur = std::move(z);
        }
    }
    return acts;
}

Vec gradient(const Network& net, const Vec& x, const Vec& out_coeffs) {
    if (static_cast<int>(out_coeffs.size()) != net.output_dim())
        throw Error("objective coefficients do not match the output dimension");
    Activations acts = forward(net, x);
    Vec g = out_coeffs;
    for (int i = net.num_layers(); i >= 1; --i) {
        const auto& l = net.layer(i);
        if (net.has_relu(i)) {
            const Vec& z = acts.pre[static_cast<std::size_t>(i - 1)];
            for (std::size_t r = 0; r < g.size(); ++r)
                if (z[r] <= 0.0)
                    g[r] = 0.0;
        }
        Vec prev(l.weights.cols(), 0.0);
        for (std::size_t r = 0; r < l.weights.rows(); ++r)
            for (std::size_t c = 0; c < l.weights.cols(); ++c)
                prev[c] += l.weights(r, c) * g[r];
        g = std::move(prev);
    }
    return g;
}

int argmax(const Vec& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace relucert
