#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace iatfp::nn {

// Row-major double tensor. No broadcasting anywhere; shape agreement is
// always checked by the operation that consumes the tensor.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    static Tensor zeros(std::vector<size_t> shape);

    size_t numel() const {
        size_t n = 1;
        for (size_t d : shape) {
            n *= d;
        }
        return n;
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    std::string shape_string() const;

    // rank-3 accessors (C,H,W); callers guarantee the rank
    double& at3(size_t c, size_t i, size_t j) {
        return data[(c * shape[1] + i) * shape[2] + j];
    }
    double at3(size_t c, size_t i, size_t j) const {
        return data[(c * shape[1] + i) * shape[2] + j];
    }

    bool operator==(const Tensor&) const = default;
};

// Raises ShapeMismatch naming `what` when the shapes differ.
void check_shape(const Tensor& t, const std::vector<size_t>& expected,
                 const std::string& what);

} // namespace iatfp::nn
