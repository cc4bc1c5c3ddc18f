#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace relucert {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense row-major matrix; row r holds the incoming weights of output r.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const Vec& data() const { return data_; }
    Vec& data() { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

/// Address of a neuron: layer is 1-based (layer 0 is the input), index 0-based.
struct NeuronId {
    int layer = 0;
    int index = 0;

    auto operator<=>(const NeuronId&) const = default;
};

inline std::string to_string(const NeuronId& n) {
    return "(" + std::to_string(n.layer) + "," + std::to_string(n.index) + ")";
}

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace relucert
