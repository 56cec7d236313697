#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iatfp/rng.hpp"
#include "iatfp/tensor.hpp"

namespace iatfp::nn {

struct ConvLayer {
    Tensor weights; // (K, C, 3, 3)
    Tensor bias;    // (K)
};

struct DenseLayer {
    Tensor weights; // (out, in)
    Tensor bias;    // (out)
};

enum class LossKind : uint8_t { bce = 0, mse = 1 };
enum class Mode { train, eval };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

// Where pooling fits in the three-stage trunk for a given input size. The
// full-size input takes a pool after every conv; small inputs keep only the
// pools that leave enough rows and columns for the remaining convolutions
// (pooling is preferred whenever the remainder of the chain still fits).
struct ShapePlan {
    size_t input_h = 0;
    size_t input_w = 0;
    std::array<bool, 3> pool_after{};
    std::array<size_t, 3> stage_h{}; // spatial size after each stage
    std::array<size_t, 3> stage_w{};
    size_t flat_size = 0; // 64 * stage_h[2] * stage_w[2]

    bool operator==(const ShapePlan&) const = default;
};

// Smallest input the trunk accepts.
inline constexpr size_t kMinInputSide = 8;

ShapePlan plan_shape(size_t input_h, size_t input_w);

struct ModelParams {
    ConvLayer conv1; // 3 -> 32
    ConvLayer conv2; // 32 -> 32
    ConvLayer conv3; // 32 -> 64
    DenseLayer fc1;  // flat -> 64
    DenseLayer fc2;  // 64 -> 1
    double dropout_p = 0.5;

    // Seeded He-uniform conv weights, Xavier-uniform dense weights, zero
    // biases. Each tensor draws from its own stream so layer sizes never
    // perturb one another.
    static ModelParams create(size_t input_h, size_t input_w, uint64_t seed);

    // The ten tensors in canonical order (conv1..fc2, weights before bias).
    std::vector<std::pair<std::string, Tensor*>> tensors();
    std::vector<std::pair<std::string, const Tensor*>> tensors() const;

    ModelParams zeros_like() const;

    // Raises on any deviation from the 3->32->32->64 chain.
    void validate() const;
};

struct ForwardCache {
    Tensor input;
    std::array<Tensor, 3> conv_out; // pre-activation
    std::array<Tensor, 3> relu_out;
    std::array<bool, 3> pooled{};
    std::array<Tensor, 3> pool_out; // only meaningful where pooled
    std::array<std::vector<uint32_t>, 3> pool_argmax;
    Tensor flat;
    Tensor fc1_pre;
    Tensor fc1_act;
    std::vector<uint8_t> dropout_mask; // 1 = kept
    Tensor dropped;
    double fc2_pre = 0.0;
    double prob = 0.0;
};

// y[k,i,j] = bias[k] + sum over c (outer), u, v (inner) of
// w[k,c,u,v] * x[c,i+u,j+v]; valid cross-correlation, stride 1.
Tensor conv2d_forward(const Tensor& x, const ConvLayer& layer);

struct PoolResult {
    Tensor y;
    // flat index into the input tensor of each output element's max;
    // ties go to the smallest flat index
    std::vector<uint32_t> argmax;
};

// Non-overlapping 2x2 windows, stride 2; odd trailing row/column dropped.
PoolResult maxpool2x2_forward(const Tensor& x);

Tensor relu(const Tensor& x);

double sigmoid(double x);

// y = W x + b for rank-1 x of length `in`.
Tensor dense_forward(const Tensor& x, const DenseLayer& layer);

Tensor flatten(const Tensor& x);

struct DropoutResult {
    Tensor y;
    std::vector<uint8_t> mask; // empty in eval mode
};

// Inverted dropout: each unit zeroed with probability p, survivors scaled
// by 1/(1-p). Identity in eval mode (no rng draws).
DropoutResult dropout_forward(const Tensor& x, double p, Rng& rng, Mode mode);

struct LossResult {
    double value = 0.0;
    double grad = 0.0; // d value / d p
};

// p clamped to [1e-12, 1-1e-12] first. bce: -(y ln p + (1-y) ln(1-p));
// mse: (p-y)^2.
LossResult loss(double p, double y, LossKind kind);

// conv1 -> relu -> [pool] -> conv2 -> relu -> [pool] -> conv3 -> relu ->
// [pool] -> flatten -> fc1 -> relu -> dropout -> fc2 -> sigmoid, with the
// pooling plan implied by the input size. Training mode requires both
// dropout_rng and cache.
double model_forward(const Tensor& image, const ModelParams& params, Mode mode,
                     Rng* dropout_rng = nullptr, ForwardCache* cache = nullptr);

// Exact reverse-mode gradients for every parameter, shaped like `params`.
// d_prob is dLoss/dProbability from `loss`. conv1's input gradient is not
// materialized (nothing upstream consumes it).
ModelParams model_backward(const ForwardCache& cache, const ModelParams& params,
                           double d_prob);

struct AdamState {
    ModelParams m;
    ModelParams v;
    uint64_t t = 0; // completed steps

    static AdamState like(const ModelParams& params);
};

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct SgdState {
    ModelParams velocity;

    static SgdState like(const ModelParams& params);
};

void sgd_step(ModelParams& params, const ModelParams& grads, SgdState& state, double lr,
              double momentum = 0.9);

// "IATM" u16 version u8 loss u8 tensor-count, then per tensor: u8 name
// length, name, u8 rank, u32 dims, f64 data; all integers and doubles
// little-endian. Loading validates the full shape chain.
inline constexpr uint16_t kModelFormatVersion = 1;

struct SavedModel {
    ModelParams params;
    LossKind loss_kind = LossKind::bce;
};

std::vector<unsigned char> serialize_model(const ModelParams& params, LossKind kind);
SavedModel deserialize_model(std::span<const unsigned char> bytes);

void save_model(const std::string& path, const ModelParams& params, LossKind kind);
SavedModel load_model(const std::string& path);

} // namespace iatfp::nn
