#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tactsim/dataset.hpp"

namespace tactsim {

/// Dense row-major float tensor. Activations use NHWC layout.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(count(shape)), 0.0f);
    }

    static std::int64_t count(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor: non-positive extent");
            n *= d;
        }
        return n;
    }

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    bool same_shape(const std::vector<int>& s) const { return shape == s; }

    std::string shape_str() const {
        std::string out = "(";
        for (std::size_t i = 0; i < shape.size(); ++i)
            out += (i ? "," : "") + std::to_string(shape[i]);
        return out + ")";
    }
};

/// Pixel bytes to floats in [0, 1] (divide by 255), channel-last (H, W, C).
Tensor rescale(const Sample& sample);

/// Stacks samples[indices] into an (N, H, W, C) batch of rescaled floats.
Tensor make_batch(const std::vector<Sample>& samples, const std::vector<int>& indices);

/// Normalized regression targets for the same indices: x/16, y/16, z/1.5 by
/// default; shape (N, 3).
Tensor make_targets(const std::vector<Sample>& samples, const std::vector<int>& indices,
                    double scale_xy_mm = 16.0, double scale_z_mm = 1.5);

}  // namespace tactsim
