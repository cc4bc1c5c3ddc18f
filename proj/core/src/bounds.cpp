#include "relucert/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace relucert {

void BoundsMap::push_layer(std::vector<Interval> bounds) {
    for (const auto& iv : bounds)
        if (!(iv.lb <= iv.ub))
            throw Error("interval with LB > UB in layer " + std::to_string(num_layers() + 1));
    layers_.push_back(std::move(bounds));
}

void BoundsMap::set_layer(int layer, std::vector<Interval> bounds) {
    if (layer == num_layers() + 1) {
        push_layer(std::move(bounds));
        return;
    }
    if (!has_layer(layer))
        throw Error("cannot set bounds for layer " + std::to_string(layer) +
                    " before earlier layers exist");
    for (const auto& iv : bounds)
        if (!(iv.lb <= iv.ub))
            throw Error("interval with LB > UB in layer " + std::to_string(layer));
    layers_[static_cast<std::size_t>(layer - 1)] = std::move(bounds);
}

const std::vector<Interval>& BoundsMap::layer(int layer) const {
    if (!has_layer(layer))
        throw Error("bounds for layer " + std::to_string(layer) + " have not been computed");
    return layers_[static_cast<std::size_t>(layer - 1)];
}

Interval& BoundsMap::at(NeuronId n) {
    if (!has_layer(n.layer))
        throw Error("bounds for layer " + std::to_string(n.layer) + " have not been computed");
    return layers_[static_cast<std::size_t>(n.layer - 1)][static_cast<std::size_t>(n.index)];
}

NeuronStatus BoundsMap::status(NeuronId n) const {
    const Interval& iv = at(n);
    if (iv.lb >= 0.0)
        return NeuronStatus::StablePositive;
    if (iv.ub <= 0.0)
        return NeuronStatus::StableNegative;
    return NeuronStatus::Unstable;
}

Interval BoundsMap::post(NeuronId n) const {
    const Interval& iv = at(n);
    return {std::max(0.0, iv.lb), std::max(0.0, iv.ub)};
}

BoundsMap BoundsMap::prefix(int layers) const {
    BoundsMap out;
    for (int i = 1; i <= layers && i <= num_layers(); ++i)
        out.push_layer(layers_[static_cast<std::size_t>(i - 1)]);
    return out;
}

namespace {

std::vector<Interval> affine_image(const AffineLayer& l, const std::vector<Interval>& in) {
    std::vector<Interval> out(l.weights.rows());
    for (std::size_t r = 0; r < l.weights.rows(); ++r) {
        double lo = l.bias[r], hi = l.bias[r];
        for (std::size_t c = 0; c < l.weights.cols(); ++c) {
            double w = l.weights(r, c);
            if (w >= 0.0) {
                lo += w * in[c].lb;
                hi += w * in[c].ub;
            } else {
                lo += w * in[c].ub;
                hi += w * in[c].lb;
            }
        }
        out[r] = {lo, hi};
    }
    return out;
}

} // namespace

std::vector<Interval> interval_layer(const Network& net, const InputRegion& region,
                                     const BoundsMap& below, int layer) {
    if (layer < 1 || layer > net.num_layers())
        throw Error("interval_layer: layer out of range");
    std::vector<Interval> in;
    if (layer == 1) {
        Vec lo = region.effective_lo(), hi = region.effective_hi();
        in.resize(lo.size());
        for (std::size_t i = 0; i < lo.size(); ++i)
            in[i] = {lo[i], hi[i]};
    } else {
        const auto& prev = below.layer(layer - 1);
        in.resize(prev.size());
        for (std::size_t i = 0; i < prev.size(); ++i)
            in[i] = {std::max(0.0, prev[i].lb), std::max(0.0, prev[i].ub)};
    }
    return affine_image(net.layer(layer), in);
}

BoundsMap box_propagate(const Network& net, const InputRegion& region) {
    region.validate();
    if (static_cast<int>(region.center.size()) != net.input_dim())
        throw Error("region dimension does not match the network input");
    BoundsMap bm;
    for (int i = 1; i <= net.num_layers(); ++i)
        bm.push_layer(interval_layer(net, region, bm, i));
    return bm;
}

double average_uncertainty(const BoundsMap& bounds, int layer) {
    const auto& l = bounds.layer(layer);
    if (l.empty())
        return 0.0;
    double s = 0.0;
    for (const auto& iv : l)
        s += iv.width();
    return s / static_cast<double>(l.size());
}

const char* to_string(NeuronStatus s) {
    switch (s) {
    case NeuronStatus::StablePositive: return "stable_pos";
    case NeuronStatus::StableNegative: return "stable_neg";
    case NeuronStatus::Unstable: return "unstable";
    }
    return "?";
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string bounds_to_csv(const BoundsMap& bounds) {
    std::ostringstream os;
    os << "layer,index,lb,ub,status\n";
    for (int i = 1; i <= bounds.num_layers(); ++i) {
        const auto& l = bounds.layer(i);
        for (std::size_t j = 0; j < l.size(); ++j) {
            NeuronId n{i, static_cast<int>(j)};
            os << i << ',' << j << ',' << fmt_double(l[j].lb) << ',' << fmt_double(l[j].ub) << ','
               << to_string(bounds.status(n)) << '\n';
        }
    }
    return os.str();
}

} // namespace relucert
