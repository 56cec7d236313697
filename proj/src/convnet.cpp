#include "iatfp/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "iatfp/errors.hpp"
#include "iatfp/util.hpp"

namespace iatfp::nn {

std::string to_string(LossKind kind) { return kind == LossKind::bce ? "bce" : "mse"; }

LossKind loss_kind_from_string(const std::string& name) {
    if (name == "bce") return LossKind::bce;
    if (name == "mse") return LossKind::mse;
    raise(Errc::config_invalid, "unknown loss kind '" + name + "'");
}

namespace {

// Whether some pool/no-pool assignment lets `convs_left` more 3x3 valid
// convolutions run starting from an (h, w) feature map.
bool chain_fits(size_t h, size_t w, int convs_left) {
    if (convs_left == 0) {
        return h >= 1 && w >= 1;
    }
    if (h < 3 || w < 3) {
        return false;
    }
    const size_t h2 = h - 2;
    const size_t w2 = w - 2;
    if (h2 >= 2 && w2 >= 2 && chain_fits(h2 / 2, w2 / 2, convs_left - 1)) {
        return true;
    }
    return chain_fits(h2, w2, convs_left - 1);
}

} // namespace

ShapePlan plan_shape(size_t input_h, size_t input_w) {
    if (input_h < kMinInputSide || input_w < kMinInputSide) {
        raise(Errc::shape_mismatch,
              "input " + std::to_string(input_h) + "x" + std::to_string(input_w) +
                  " is below the minimum " + std::to_string(kMinInputSide) + "x" +
                  std::to_string(kMinInputSide));
    }
    ShapePlan plan;
    plan.input_h = input_h;
    plan.input_w = input_w;
    size_t h = input_h;
    size_t w = input_w;
    for (int s = 0; s < 3; ++s) {
        h -= 2;
        w -= 2;
        const int convs_left = 2 - s;
        if (h >= 2 && w >= 2 && chain_fits(h / 2, w / 2, convs_left)) {
            plan.pool_after[static_cast<size_t>(s)] = true;
            h /= 2;
            w /= 2;
        }
        plan.stage_h[static_cast<size_t>(s)] = h;
        plan.stage_w[static_cast<size_t>(s)] = w;
    }
    plan.flat_size = 64 * h * w;
    return plan;
}

ModelParams ModelParams::create(size_t input_h, size_t input_w, uint64_t seed) {
    const ShapePlan plan = plan_shape(input_h, input_w);
    ModelParams p;
    p.conv1.weights = Tensor::zeros({32, 3, 3, 3});
    p.conv1.bias = Tensor::zeros({32});
    p.conv2.weights = Tensor::zeros({32, 32, 3, 3});
    p.conv2.bias = Tensor::zeros({32});
    p.conv3.weights = Tensor::zeros({64, 32, 3, 3});
    p.conv3.bias = Tensor::zeros({64});
    p.fc1.weights = Tensor::zeros({64, plan.flat_size});
    p.fc1.bias = Tensor::zeros({64});
    p.fc2.weights = Tensor::zeros({1, 64});
    p.fc2.bias = Tensor::zeros({1});

    auto named = p.tensors();
    for (size_t idx = 0; idx < named.size(); ++idx) {
        Tensor& t = *named[idx].second;
        if (named[idx].first.ends_with(".bias")) {
            continue; // biases stay zero
        }
        double limit = 0.0;
        if (t.shape.size() == 4) {
            // He-uniform for the relu conv stack
            const double fan_in =
                static_cast<double>(t.shape[1] * t.shape[2] * t.shape[3]);
            limit = std::sqrt(6.0 / fan_in);
        } else {
            // Xavier-uniform for the dense head
            const double fans = static_cast<double>(t.shape[0] + t.shape[1]);
            limit = std::sqrt(6.0 / fans);
        }
        Rng rng(hash_combine(hash_combine(seed, stream::init), idx));
        for (double& v : t.data) {
            v = rng.uniform(-limit, limit);
        }
    }
    return p;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::tensors() {
    return {
        {"conv1.weights", &conv1.weights}, {"conv1.bias", &conv1.bias},
        {"conv2.weights", &conv2.weights}, {"conv2.bias", &conv2.bias},
        {"conv3.weights", &conv3.weights}, {"conv3.bias", &conv3.bias},
        {"fc1.weights", &fc1.weights},     {"fc1.bias", &fc1.bias},
        {"fc2.weights", &fc2.weights},     {"fc2.bias", &fc2.bias},
    };
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::tensors() const {
    return {
        {"conv1.weights", &conv1.weights}, {"conv1.bias", &conv1.bias},
        {"conv2.weights", &conv2.weights}, {"conv2.bias", &conv2.bias},
        {"conv3.weights", &conv3.weights}, {"conv3.bias", &conv3.bias},
        {"fc1.weights", &fc1.weights},     {"fc1.bias", &fc1.bias},
        {"fc2.weights", &fc2.weights},     {"fc2.bias", &fc2.bias},
    };
}

ModelParams ModelParams::zeros_like() const {
    ModelParams z;
    z.dropout_p = dropout_p;
    auto src = tensors();
    auto dst = z.tensors();
    for (size_t i = 0; i < src.size(); ++i) {
        *dst[i].second = Tensor::zeros(src[i].second->shape);
    }
    return z;
}

void ModelParams::validate() const {
    auto expect = [](const Tensor& t, std::initializer_list<size_t> want,
                     const char* what) {
        if (!std::equal(t.shape.begin(), t.shape.end(), want.begin(), want.end())) {
            raise(Errc::shape_chain_mismatch,
                  std::string(what) + " has shape " + t.shape_string());
        }
    };
    expect(conv1.weights, {32, 3, 3, 3}, "conv1.weights");
    expect(conv1.bias, {32}, "conv1.bias");
    expect(conv2.weights, {32, 32, 3, 3}, "conv2.weights");
    expect(conv2.bias, {32}, "conv2.bias");
    expect(conv3.weights, {64, 32, 3, 3}, "conv3.weights");
    expect(conv3.bias, {64}, "conv3.bias");
    if (fc1.weights.shape.size() != 2 || fc1.weights.shape[0] != 64 ||
        fc1.weights.shape[1] == 0 || fc1.weights.shape[1] % 64 != 0) {
        raise(Errc::shape_chain_mismatch,
              "fc1.weights has shape " + fc1.weights.shape_string() +
                  ", expected (64, multiple of 64)");
    }
    expect(fc1.bias, {64}, "fc1.bias");
    expect(fc2.weights, {1, 64}, "fc2.weights");
    expect(fc2.bias, {1}, "fc2.bias");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
        raise(Errc::config_invalid, "dropout_p must lie in [0, 1)");
    }
}

Tensor conv2d_forward(const Tensor& x, const ConvLayer& layer) {
    if (x.shape.size() != 3) {
        raise(Errc::shape_mismatch,
              "conv input must be rank 3, got " + x.shape_string());
    }
    const size_t C = x.shape[0];
    const size_t H = x.shape[1];
    const size_t W = x.shape[2];
    const auto& ws = layer.weights.shape;
    if (ws.size() != 4 || ws[2] != 3 || ws[3] != 3) {
        raise(Errc::shape_mismatch,
              "conv weights must be (K,C,3,3), got " + layer.weights.shape_string());
    }
    const size_t K = ws[0];
    if (ws[1] != C) {
        raise(Errc::shape_mismatch,
              "conv expects " + std::to_string(ws[1]) + " input channels, got " +
                  std::to_string(C));
    }
    check_shape(layer.bias, {K}, "conv bias");
    if (H < 3 || W < 3) {
        raise(Errc::shape_mismatch,
              "conv input " + x.shape_string() + " is smaller than the 3x3 kernel");
    }

    const size_t OH = H - 2;
    const size_t OW = W - 2;
    Tensor y = Tensor::zeros({K, OH, OW});
    // Per output element the reduction runs bias first, then channels outer
    // and kernel rows/cols inner, so every evaluation sums in one order.
    for (size_t k = 0; k < K; ++k) {
        double* yk = &y.data[k * OH * OW];
        const double bk = layer.bias.data[k];
        for (size_t e = 0; e < OH * OW; ++e) {
            yk[e] = bk;
        }
        for (size_t c = 0; c < C; ++c) {
            const double* xc = &x.data[c * H * W];
            const double* wkc = &layer.weights.data[(k * C + c) * 9];
            for (size_t u = 0; u < 3; ++u) {
                for (size_t v = 0; v < 3; ++v) {
                    const double wv = wkc[u * 3 + v];
                    for (size_t i = 0; i < OH; ++i) {
                        const double* xrow = xc + (i + u) * W + v;
                        double* yrow = yk + i * OW;
                        for (size_t j = 0; j < OW; ++j) {
                            yrow[j] += wv * xrow[j];
                        }
                    }
                }
            }
        }
    }
    return y;
}

PoolResult maxpool2x2_forward(const Tensor& x) {
    if (x.shape.size() != 3) {
        raise(Errc::shape_mismatch,
              "pool input must be rank 3, got " + x.shape_string());
    }
    const size_t K = x.shape[0];
    const size_t H = x.shape[1];
    const size_t W = x.shape[2];
    if (H < 2 || W < 2) {
        raise(Errc::shape_mismatch,
              "pool input " + x.shape_string() + " is smaller than the 2x2 window");
    }
    const size_t OH = H / 2;
    const size_t OW = W / 2;
    PoolResult res;
    res.y = Tensor::zeros({K, OH, OW});
    res.argmax.resize(K * OH * OW);
    for (size_t k = 0; k < K; ++k) {
        for (size_t i = 0; i < OH; ++i) {
            for (size_t j = 0; j < OW; ++j) {
                const size_t base = (k * H + 2 * i) * W + 2 * j;
                // strictly-greater keeps the smallest flat index on ties
                size_t best = base;
                double bv = x.data[base];
                const size_t cand[3] = {base + 1, base + W, base + W + 1};
                for (size_t idx : cand) {
                    if (x.data[idx] > bv) {
                        bv = x.data[idx];
                        best = idx;
                    }
                }
                const size_t out = (k * OH + i) * OW + j;
                res.y.data[out] = bv;
                res.argmax[out] = static_cast<uint32_t>(best);
            }
        }
    }
    return res;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) {
        v = std::max(0.0, v);
    }
    return y;
}

double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor dense_forward(const Tensor& x, const DenseLayer& layer) {
    const auto& ws = layer.weights.shape;
    if (ws.size() != 2 || x.shape.size() != 1 || x.shape[0] != ws[1]) {
        raise(Errc::shape_mismatch,
              "dense expects rank-1 input of length " +
                  (ws.size() == 2 ? std::to_string(ws[1]) : std::string("?")) +
                  ", got " + x.shape_string());
    }
    const size_t out = ws[0];
    const size_t in = ws[1];
    check_shape(layer.bias, {out}, "dense bias");
    Tensor y = Tensor::zeros({out});
    for (size_t o = 0; o < out; ++o) {
        const double* row = &layer.weights.data[o * in];
        double acc = layer.bias.data[o];
        for (size_t i = 0; i < in; ++i) {
            acc += row[i] * x.data[i];
        }
        y.data[o] = acc;
    }
    return y;
}

Tensor flatten(const Tensor& x) {
    Tensor y;
    y.shape = {x.numel()};
    y.data = x.data;
    return y;
}

DropoutResult dropout_forward(const Tensor& x, double p, Rng& rng, Mode mode) {
    if (!(p >= 0.0 && p < 1.0)) {
        raise(Errc::config_invalid, "dropout probability must lie in [0, 1)");
    }
    DropoutResult res;
    res.y = x;
    if (mode == Mode::eval) {
        return res;
    }
    const double scale = 1.0 / (1.0 - p);
    res.mask.resize(x.data.size());
    for (size_t i = 0; i < x.data.size(); ++i) {
        const bool keep = !(rng.uniform() < p);
        res.mask[i] = keep ? 1 : 0;
        res.y.data[i] = keep ? x.data[i] * scale : 0.0;
    }
    return res;
}

LossResult loss(double p, double y, LossKind kind) {
    const double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
    LossResult res;
    if (kind == LossKind::bce) {
        res.value = -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
        res.grad = -y / pc + (1.0 - y) / (1.0 - pc);
    } else {
        res.value = (pc - y) * (pc - y);
        res.grad = 2.0 * (pc - y);
    }
    return res;
}

double model_forward(const Tensor& image, const ModelParams& params, Mode mode,
                     Rng* dropout_rng, ForwardCache* cache) {
    params.validate();
    if (image.shape.size() != 3 || image.shape[0] != 3) {
        raise(Errc::shape_mismatch,
              "model input must be (3,H,W), got " + image.shape_string());
    }
    if (mode == Mode::train && (dropout_rng == nullptr || cache == nullptr)) {
        raise(Errc::config_invalid,
              "training-mode forward needs a dropout stream and a cache");
    }
    const ShapePlan plan = plan_shape(image.shape[1], image.shape[2]);
    if (params.fc1.weights.shape[1] != plan.flat_size) {
        raise(Errc::shape_mismatch,
              "fc1 expects a flat input of " +
                  std::to_string(params.fc1.weights.shape[1]) + ", but a " +
                  std::to_string(image.shape[1]) + "x" +
                  std::to_string(image.shape[2]) + " image flattens to " +
                  std::to_string(plan.flat_size));
    }

    const ConvLayer* convs[3] = {&params.conv1, &params.conv2, &params.conv3};
    if (cache) {
        cache->input = image;
    }
    Tensor cur = image;
    for (size_t s = 0; s < 3; ++s) {
        Tensor z = conv2d_forward(cur, *convs[s]);
        Tensor r = relu(z);
        if (cache) {
            cache->conv_out[s] = std::move(z);
            cache->pooled[s] = plan.pool_after[s];
        }
        if (plan.pool_after[s]) {
            PoolResult pr = maxpool2x2_forward(r);
            if (cache) {
                cache->relu_out[s] = std::move(r);
                cache->pool_out[s] = pr.y;
                cache->pool_argmax[s] = std::move(pr.argmax);
            }
            cur = std::move(pr.y);
        } else {
            if (cache) {
                cache->relu_out[s] = r;
            }
            cur = std::move(r);
        }
    }

    Tensor flat = flatten(cur);
    Tensor z1 = dense_forward(flat, params.fc1);
    Tensor r1 = relu(z1);
    Tensor dropped;
    if (mode == Mode::train) {
        DropoutResult dr = dropout_forward(r1, params.dropout_p, *dropout_rng,
                                           Mode::train);
        cache->dropout_mask = std::move(dr.mask);
        dropped = std::move(dr.y);
    } else {
        dropped = r1;
    }
    Tensor z2 = dense_forward(dropped, params.fc2);
    const double prob = sigmoid(z2.data[0]);

    if (cache) {
        cache->flat = std::move(flat);
        cache->fc1_pre = std::move(z1);
        cache->fc1_act = std::move(r1);
        cache->dropped = std::move(dropped);
        cache->fc2_pre = z2.data[0];
        cache->prob = prob;
    }
    return prob;
}

namespace {

// Weight, bias, and optional input gradients for one valid 3x3 conv.
void conv2d_backward(const Tensor& x, const ConvLayer& layer, const Tensor& dy,
                     ConvLayer& grad, Tensor* dx) {
    const size_t C = x.shape[0];
    const size_t H = x.shape[1];
    const size_t W = x.shape[2];
    const size_t K = dy.shape[0];
    const size_t OH = dy.shape[1];
    const size_t OW = dy.shape[2];

    for (size_t k = 0; k < K; ++k) {
        const double* dyk = &dy.data[k * OH * OW];
        double acc = 0.0;
        for (size_t e = 0; e < OH * OW; ++e) {
            acc += dyk[e];
        }
        grad.bias.data[k] = acc;

        for (size_t c = 0; c < C; ++c) {
            const double* xc = &x.data[c * H * W];
            double* gkc = &grad.weights.data[(k * C + c) * 9];
            for (size_t u = 0; u < 3; ++u) {
                for (size_t v = 0; v < 3; ++v) {
                    double wacc = 0.0;
                    for (size_t i = 0; i < OH; ++i) {
                        const double* xrow = xc + (i + u) * W + v;
                        const double* drow = dyk + i * OW;
                        for (size_t j = 0; j < OW; ++j) {
                            wacc += drow[j] * xrow[j];
                        }
                    }
                    gkc[u * 3 + v] = wacc;
                }
            }
        }
    }

    if (dx == nullptr) {
        return;
    }
    *dx = Tensor::zeros(x.shape);
    for (size_t k = 0; k < K; ++k) {
        const double* dyk = &dy.data[k * OH * OW];
        for (size_t c = 0; c < C; ++c) {
            double* dxc = &dx->data[c * H * W];
            const double* wkc = &layer.weights.data[(k * C + c) * 9];
            for (size_t u = 0; u < 3; ++u) {
                for (size_t v = 0; v < 3; ++v) {
                    const double wv = wkc[u * 3 + v];
                    for (size_t i = 0; i < OH; ++i) {
                        double* dxrow = dxc + (i + u) * W + v;
                        const double* drow = dyk + i * OW;
                        for (size_t j = 0; j < OW; ++j) {
                            dxrow[j] += wv * drow[j];
                        }
                    }
                }
            }
        }
    }
}

} // namespace

ModelParams model_backward(const ForwardCache& cache, const ModelParams& params,
                           double d_prob) {
    params.validate();
    const size_t flat_size = params.fc1.weights.shape[1];
    if (cache.flat.numel() != flat_size || cache.fc1_act.numel() != 64 ||
        cache.input.shape.size() != 3) {
        raise(Errc::stale_cache, "forward cache does not match these parameters");
    }
    if (cache.dropout_mask.size() != 64) {
        raise(Errc::stale_cache, "cache was not produced by a training-mode forward");
    }

    ModelParams g = params.zeros_like();

    // sigmoid then fc2
    const double dz2 = d_prob * cache.prob * (1.0 - cache.prob);
    g.fc2.bias.data[0] = dz2;
    Tensor dd = Tensor::zeros({64});
    for (size_t i = 0; i < 64; ++i) {
        g.fc2.weights.data[i] = dz2 * cache.dropped.data[i];
        dd.data[i] = dz2 * params.fc2.weights.data[i];
    }

    // dropout mask passthrough with the forward scaling
    const double scale = 1.0 / (1.0 - params.dropout_p);
    Tensor dr1 = Tensor::zeros({64});
    for (size_t i = 0; i < 64; ++i) {
        dr1.data[i] = cache.dropout_mask[i] ? dd.data[i] * scale : 0.0;
    }

    // fc1 relu gate, then fc1
    Tensor dz1 = Tensor::zeros({64});
    for (size_t i = 0; i < 64; ++i) {
        dz1.data[i] = cache.fc1_pre.data[i] > 0.0 ? dr1.data[i] : 0.0;
    }
    Tensor dflat = Tensor::zeros({flat_size});
    for (size_t o = 0; o < 64; ++o) {
        const double go = dz1.data[o];
        g.fc1.bias.data[o] = go;
        double* grow = &g.fc1.weights.data[o * flat_size];
        const double* wrow = &params.fc1.weights.data[o * flat_size];
        for (size_t i = 0; i < flat_size; ++i) {
            grow[i] = go * cache.flat.data[i];
            dflat.data[i] += go * wrow[i];
        }
    }

    // back through the trunk
    const ConvLayer* layers[3] = {&params.conv1, &params.conv2, &params.conv3};
    ConvLayer* grads[3] = {&g.conv1, &g.conv2, &g.conv3};
    Tensor dcur = dflat;
    dcur.shape = cache.pooled[2] ? cache.pool_out[2].shape : cache.relu_out[2].shape;
    if (dcur.numel() != flat_size) {
        raise(Errc::stale_cache, "cache stage shapes do not match fc1");
    }
    for (int s = 2; s >= 0; --s) {
        const auto us = static_cast<size_t>(s);
        if (cache.pooled[us]) {
            Tensor drelu = Tensor::zeros(cache.relu_out[us].shape);
            for (size_t e = 0; e < dcur.data.size(); ++e) {
                drelu.data[cache.pool_argmax[us][e]] += dcur.data[e];
            }
            dcur = std::move(drelu);
        }
        Tensor dz = Tensor::zeros(cache.conv_out[us].shape);
        for (size_t e = 0; e < dz.data.size(); ++e) {
            dz.data[e] = cache.conv_out[us].data[e] > 0.0 ? dcur.data[e] : 0.0;
        }
        const Tensor& input =
            s == 0 ? cache.input
                   : (cache.pooled[us - 1] ? cache.pool_out[us - 1]
                                           : cache.relu_out[us - 1]);
        if (s > 0) {
            Tensor dinput;
            conv2d_backward(input, *layers[us], dz, *grads[us], &dinput);
            dcur = std::move(dinput);
        } else {
            conv2d_backward(input, *layers[us], dz, *grads[us], nullptr);
        }
    }
    return g;
}

AdamState AdamState::like(const ModelParams& params) {
    AdamState s;
    s.m = params.zeros_like();
    s.v = params.zeros_like();
    s.t = 0;
    return s;
}

SgdState SgdState::like(const ModelParams& params) {
    SgdState s;
    s.velocity = params.zeros_like();
    return s;
}

namespace {

void check_grad_shapes(const ModelParams& params, const ModelParams& grads) {
    auto ps = params.tensors();
    auto gs = grads.tensors();
    for (size_t i = 0; i < ps.size(); ++i) {
        if (!ps[i].second->same_shape(*gs[i].second)) {
            raise(Errc::shape_mismatch,
                  "gradient " + gs[i].first + " has shape " +
                      gs[i].second->shape_string() + ", parameters have " +
                      ps[i].second->shape_string());
        }
    }
}

} // namespace

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    check_grad_shapes(params, grads);
    check_grad_shapes(params, state.m);
    check_grad_shapes(params, state.v);
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));

    auto ps = params.tensors();
    auto gs = grads.tensors();
    auto ms = state.m.tensors();
    auto vs = state.v.tensors();
    for (size_t i = 0; i < ps.size(); ++i) {
        double* p = ps[i].second->data.data();
        const double* g = gs[i].second->data.data();
        double* m = ms[i].second->data.data();
        double* v = vs[i].second->data.data();
        const size_t n = ps[i].second->data.size();
        for (size_t e = 0; e < n; ++e) {
            m[e] = beta1 * m[e] + (1.0 - beta1) * g[e];
            v[e] = beta2 * v[e] + (1.0 - beta2) * g[e] * g[e];
            const double mhat = m[e] / bc1;
            const double vhat = v[e] / bc2;
            p[e] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void sgd_step(ModelParams& params, const ModelParams& grads, SgdState& state, double lr,
              double momentum) {
    check_grad_shapes(params, grads);
    check_grad_shapes(params, state.velocity);
    auto ps = params.tensors();
    auto gs = grads.tensors();
    auto vs = state.velocity.tensors();
    for (size_t i = 0; i < ps.size(); ++i) {
        double* p = ps[i].second->data.data();
        const double* g = gs[i].second->data.data();
        double* v = vs[i].second->data.data();
        const size_t n = ps[i].second->data.size();
        for (size_t e = 0; e < n; ++e) {
            v[e] = momentum * v[e] - lr * g[e];
            p[e] += v[e];
        }
    }
}

namespace {

void put_u16(std::vector<unsigned char>& out, uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, uint32_t v) {
    for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xff));
    }
}

void put_f64(std::vector<unsigned char>& out, double v) {
    uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xff));
    }
}

struct Cursor {
    std::span<const unsigned char> bytes;
    size_t pos = 0;

    void need(size_t n, const char* what) const {
        if (bytes.size() - pos < n) {
            raise(Errc::truncated_model,
                  std::string("model file ends inside ") + what);
        }
    }

    uint8_t u8(const char* what) {
        need(1, what);
        return bytes[pos++];
    }

    uint16_t u16(const char* what) {
        need(2, what);
        const uint16_t v = static_cast<uint16_t>(bytes[pos]) |
                           static_cast<uint16_t>(bytes[pos + 1]) << 8;
        pos += 2;
        return v;
    }

    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int b = 0; b < 4; ++b) {
            v |= static_cast<uint32_t>(bytes[pos + static_cast<size_t>(b)]) << (8 * b);
        }
        pos += 4;
        return v;
    }

    double f64(const char* what) {
        need(8, what);
        uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<uint64_t>(bytes[pos + static_cast<size_t>(b)])
                    << (8 * b);
        }
        pos += 8;
        double v = 0.0;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    std::string str(size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
        pos += n;
        return s;
    }
};

constexpr std::array<const char*, 10> kTensorNames = {
    "conv1.weights", "conv1.bias", "conv2.weights", "conv2.bias", "conv3.weights",
    "conv3.bias",    "fc1.weights", "fc1.bias",     "fc2.weights", "fc2.bias",
};

} // namespace

std::vector<unsigned char> serialize_model(const ModelParams& params, LossKind kind) {
    params.validate();
    std::vector<unsigned char> out;
    out.push_back('I');
    out.push_back('A');
    out.push_back('T');
    out.push_back('M');
    put_u16(out, kModelFormatVersion);
    out.push_back(static_cast<unsigned char>(kind));
    auto named = params.tensors();
    out.push_back(static_cast<unsigned char>(named.size()));
    for (const auto& [name, t] : named) {
        out.push_back(static_cast<unsigned char>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(static_cast<unsigned char>(t->shape.size()));
        for (size_t d : t->shape) {
            put_u32(out, static_cast<uint32_t>(d));
        }
        for (double v : t->data) {
            put_f64(out, v);
        }
    }
    return out;
}

SavedModel deserialize_model(std::span<const unsigned char> bytes) {
    Cursor cur{bytes};
    cur.need(4, "the magic");
    if (std::memcmp(bytes.data(), "IATM", 4) != 0) {
        raise(Errc::bad_model_magic, "file does not start with IATM");
    }
    cur.pos = 4;
    const uint16_t version = cur.u16("the format version");
    if (version != kModelFormatVersion) {
        raise(Errc::unsupported_model_version,
              "model format version " + std::to_string(version) + ", expected " +
                  std::to_string(kModelFormatVersion));
    }
    const uint8_t loss_byte = cur.u8("the loss kind");
    if (loss_byte > 1) {
        raise(Errc::config_invalid,
              "model file declares unknown loss kind " + std::to_string(loss_byte));
    }
    const uint8_t count = cur.u8("the tensor count");
    if (count != kTensorNames.size()) {
        raise(Errc::shape_chain_mismatch,
              "model file holds " + std::to_string(count) + " tensors, expected " +
                  std::to_string(kTensorNames.size()));
    }

    SavedModel model;
    model.loss_kind = static_cast<LossKind>(loss_byte);
    auto named = model.params.tensors();
    for (size_t idx = 0; idx < named.size(); ++idx) {
        const uint8_t name_len = cur.u8("a tensor name length");
        const std::string name = cur.str(name_len, "a tensor name");
        if (name != kTensorNames[idx]) {
            raise(Errc::shape_chain_mismatch,
                  "tensor " + std::to_string(idx) + " is named '" + name +
                      "', expected '" + kTensorNames[idx] + "'");
        }
        const uint8_t rank = cur.u8("a tensor rank");
        if (rank == 0 || rank > 4) {
            raise(Errc::shape_chain_mismatch,
                  "tensor '" + name + "' has rank " + std::to_string(rank));
        }
        std::vector<size_t> shape(rank);
        size_t numel = 1;
        for (auto& d : shape) {
            d = cur.u32("a tensor dimension");
            if (d == 0 || numel > (size_t{1} << 32) / std::max<size_t>(d, 1)) {
                raise(Errc::shape_chain_mismatch,
                      "tensor '" + name + "' has an invalid dimension");
            }
            numel *= d;
        }
        Tensor t = Tensor::zeros(shape);
        for (double& v : t.data) {
            v = cur.f64("tensor data");
            if (!std::isfinite(v)) {
                raise(Errc::shape_chain_mismatch,
                      "tensor '" + name + "' holds a non-finite value");
            }
        }
        *named[idx].second = std::move(t);
    }
    if (cur.pos != bytes.size()) {
        raise(Errc::truncated_model,
              "model file has " + std::to_string(bytes.size() - cur.pos) +
                  " trailing bytes");
    }
    model.params.validate();
    return model;
}

void save_model(const std::string& path, const ModelParams& params, LossKind kind) {
    const auto bytes = serialize_model(params, kind);
    write_binary_file(path, bytes);
}

SavedModel load_model(const std::string& path) {
    const auto bytes = read_binary_file(path);
    return deserialize_model(bytes);
}

} // namespace iatfp::nn
