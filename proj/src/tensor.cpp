#include "iatfp/tensor.hpp"

#include "iatfp/errors.hpp"

namespace iatfp::nn {

Tensor Tensor::zeros(std::vector<size_t> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(t.numel(), 0.0);
    return t;
}

std::string Tensor::shape_string() const {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) {
            s += ",";
        }
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

void check_shape(const Tensor& t, const std::vector<size_t>& expected,
                 const std::string& what) {
    if (t.shape != expected) {
        Tensor want;
        want.shape = expected;
        raise(Errc::shape_mismatch,
              what + " has shape " + t.shape_string() + ", expected " +
                  want.shape_string());
    }
}

} // namespace iatfp::nn
