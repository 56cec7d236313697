// End-to-end acceptance checks, one per numbered criterion. Run with no
// arguments for all of them or pass ids ("3", "c9") to run a subset; the
// exit code is 0 only when every requested criterion passes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "iatfp/augment.hpp"
#include "iatfp/config.hpp"
#include "iatfp/convnet.hpp"
#include "iatfp/iat.hpp"
#include "iatfp/pcap.hpp"
#include "iatfp/render.hpp"
#include "iatfp/rng.hpp"
#include "iatfp/simulate.hpp"
#include "iatfp/train.hpp"
#include "iatfp/util.hpp"
#include "test_support.hpp"

using namespace iatfp;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void need(bool cond, const std::string& what) {
    if (!cond) {
        throw Failure(what);
    }
}

std::string format(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

std::vector<iat::IatWindow> constant_windows(uint8_t device_byte, double value,
                                             size_t count, size_t width) {
    std::vector<iat::IatWindow> out;
    for (size_t i = 0; i < count; ++i) {
        out.push_back(testsup::make_window(device_byte,
                                           std::vector<double>(width, value),
                                           static_cast<uint32_t>(i)));
    }
    return out;
}

// ---- criterion 1: dataset split arithmetic ------------------------------

std::string criterion1() {
    auto windows = constant_windows(0x0a, 0.002, 636, 2);
    auto b = constant_windows(0x0b, 0.003, 608, 2);
    windows.insert(windows.end(), b.begin(), b.end());
    const auto split = iat::split_dataset(windows, 0.8, 42);

    size_t train_a = 0, train_b = 0, val_a = 0, val_b = 0;
    for (const auto& w : split.train) {
        (w.device.mac[5] == 0x0a ? train_a : train_b) += 1;
    }
    for (const auto& w : split.validation) {
        (w.device.mac[5] == 0x0a ? val_a : val_b) += 1;
    }
    need(train_a == 509, format("device-a train count %zu, expected 509", train_a));
    need(val_a == 127, format("device-a validation count %zu, expected 127", val_a));
    need(train_b == 486, format("device-b train count %zu, expected 486", train_b));
    need(val_b == 122, format("device-b validation count %zu, expected 122", val_b));
    need(split.train.size() == 995 && split.validation.size() == 249,
         "totals are not 995/249");
    return "636+608 windows split 0.8 into 509/127 and 486/122 (995/249/1244)";
}

// ---- criterion 2: architecture shape chain -------------------------------

std::string shape_text(const std::vector<size_t>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        out += (i ? "," : "") + std::to_string(s[i]);
    }
    return out + ")";
}

void need_shape(const nn::Tensor& t, std::vector<size_t> expect, const char* what) {
    need(t.shape == expect, format("%s is %s, expected %s", what,
                                   shape_text(t.shape).c_str(),
                                   shape_text(expect).c_str()));
}

std::string criterion2() {
    const auto params = nn::ModelParams::create(150, 150, 7);
    Rng rng(8);
    const auto x = train::image_tensor(testsup::random_image(150, 150, rng));
    nn::ForwardCache cache;
    const double prob = nn::model_forward(x, params, nn::Mode::eval, nullptr, &cache);

    need_shape(cache.conv_out[0], {32, 148, 148}, "conv1 output");
    need(cache.pooled[0], "stage 1 must pool");
    need_shape(cache.pool_out[0], {32, 74, 74}, "pool1 output");
    need_shape(cache.conv_out[1], {32, 72, 72}, "conv2 output");
    need(cache.pooled[1], "stage 2 must pool");
    need_shape(cache.pool_out[1], {32, 36, 36}, "pool2 output");
    need_shape(cache.conv_out[2], {64, 34, 34}, "conv3 output");
    need(cache.pooled[2], "stage 3 must pool");
    need_shape(cache.pool_out[2], {64, 17, 17}, "pool3 output");
    need_shape(cache.flat, {18496}, "flattened features");
    need_shape(cache.fc1_act, {64}, "hidden activations");
    need(prob > 0.0 && prob < 1.0, "output is not a probability");
    return "(3,150,150) forwards through (32,148,148)...(64,17,17), 18496, 64, 1";
}

// ---- criterion 3: exhaustive gradient check ------------------------------

std::string criterion3() {
    // this test point was screened for finite-difference conditioning: with
    // h pinned at 1e-6 the difference quotient carries an absolute noise
    // floor of roughly ulp(loss)/2h, so the smallest live gradient must stay
    // well above ~6e-6 for the relative tolerance to be meaningful
    auto params = nn::ModelParams::create(8, 8, 10610);
    Rng img_rng(10611);
    const auto x = train::image_tensor(testsup::random_image(8, 8, img_rng));
    const double y = 1.0;
    const uint64_t mask_seed = 10612;

    // a fresh rng per forward keeps the dropout mask identical across
    // perturbed evaluations
    const auto loss_at = [&](const nn::ModelParams& p) {
        Rng mask_rng(mask_seed);
        nn::ForwardCache cache;
        const double prob =
            nn::model_forward(x, p, nn::Mode::train, &mask_rng, &cache);
        return nn::loss(prob, y, nn::LossKind::bce).value;
    };

    Rng mask_rng(mask_seed);
    nn::ForwardCache cache;
    const double prob = nn::model_forward(x, params, nn::Mode::train, &mask_rng, &cache);
    const auto l = nn::loss(prob, y, nn::LossKind::bce);
    const nn::ModelParams grads = nn::model_backward(cache, params, l.grad);

    const double h = 1e-6;
    double max_rel = 0.0;
    size_t checked = 0;
    auto grad_tensors = grads.tensors();
    auto param_tensors = params.tensors();
    for (size_t t = 0; t < param_tensors.size(); ++t) {
        nn::Tensor* pt = param_tensors[t].second;
        const nn::Tensor* gt = grad_tensors[t].second;
        for (size_t i = 0; i < pt->data.size(); ++i) {
            const double saved = pt->data[i];
            pt->data[i] = saved + h;
            const double up = loss_at(params);
            pt->data[i] = saved - h;
            const double down = loss_at(params);
            pt->data[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double g = gt->data[i];
            const double rel =
                std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-8});
            if (rel > max_rel) {
                max_rel = rel;
            }
            need(rel < 1e-5,
                 format("%s[%zu]: analytic %.12e vs central difference %.12e "
                        "(relative error %.3e)",
                        param_tensors[t].first.c_str(), i, g, fd, rel));
            ++checked;
        }
    }
    return format("all %zu parameter gradients within 1e-5 of central differences "
                  "(max relative error %.2e)",
                  checked, max_rel);
}

// ---- criterion 4: layer oracles ------------------------------------------

nn::Tensor conv_oracle(const nn::Tensor& x, const nn::ConvLayer& layer) {
    const size_t kout = layer.weights.shape[0];
    const size_t cin = layer.weights.shape[1];
    const size_t hout = x.shape[1] - 2;
    const size_t wout = x.shape[2] - 2;
    auto y = nn::Tensor::zeros({kout, hout, wout});
    for (size_t k = 0; k < kout; ++k) {
        for (size_t i = 0; i < hout; ++i) {
            for (size_t j = 0; j < wout; ++j) {
                double acc = layer.bias.data[k];
                for (size_t c = 0; c < cin; ++c) {
                    for (size_t u = 0; u < 3; ++u) {
                        for (size_t v = 0; v < 3; ++v) {
                            acc += layer.weights
                                       .data[((k * cin + c) * 3 + u) * 3 + v] *
                                   x.at3(c, i + u, j + v);
                        }
                    }
                }
                y.at3(k, i, j) = acc;
            }
        }
    }
    return y;
}

nn::Tensor pool_oracle(const nn::Tensor& x) {
    const size_t c = x.shape[0];
    const size_t h = x.shape[1] / 2;
    const size_t w = x.shape[2] / 2;
    auto y = nn::Tensor::zeros({c, h, w});
    for (size_t k = 0; k < c; ++k) {
        for (size_t i = 0; i < h; ++i) {
            for (size_t j = 0; j < w; ++j) {
                y.at3(k, i, j) = std::max(
                    std::max(x.at3(k, 2 * i, 2 * j), x.at3(k, 2 * i, 2 * j + 1)),
                    std::max(x.at3(k, 2 * i + 1, 2 * j),
                             x.at3(k, 2 * i + 1, 2 * j + 1)));
            }
        }
    }
    return y;
}

nn::Tensor random_tensor(std::vector<size_t> shape, Rng& rng) {
    auto t = nn::Tensor::zeros(std::move(shape));
    for (double& v : t.data) {
        v = rng.uniform(-1.0, 1.0);
    }
    return t;
}

std::string criterion4() {
    Rng rng(44);
    double worst = 0.0;
    for (int round = 0; round < 100; ++round) {
        const size_t cin = 1 + rng.bounded(4);
        const size_t kout = 1 + rng.bounded(8);
        const size_t h = 3 + rng.bounded(8);
        const size_t w = 3 + rng.bounded(8);
        const auto x = random_tensor({cin, h, w}, rng);
        nn::ConvLayer layer{random_tensor({kout, cin, 3, 3}, rng),
                            random_tensor({kout}, rng)};
        const auto got = nn::conv2d_forward(x, layer);
        const auto want = conv_oracle(x, layer);
        need(got.shape == want.shape, "convolution output shape mismatch");
        for (size_t i = 0; i < got.data.size(); ++i) {
            const double diff = std::abs(got.data[i] - want.data[i]);
            worst = std::max(worst, diff);
            need(diff <= 1e-12,
                 format("convolution instance %d deviates by %.3e", round, diff));
        }
    }
    for (int round = 0; round < 100; ++round) {
        const size_t c = 1 + rng.bounded(4);
        const size_t h = 2 + rng.bounded(8);
        const size_t w = 2 + rng.bounded(8);
        const auto x = random_tensor({c, h, w}, rng);
        const auto got = nn::maxpool2x2_forward(x);
        const auto want = pool_oracle(x);
        need(got.y.shape == want.shape, "pool output shape mismatch");
        for (size_t i = 0; i < got.y.data.size(); ++i) {
            const double diff = std::abs(got.y.data[i] - want.data[i]);
            worst = std::max(worst, diff);
            need(diff <= 1e-12,
                 format("pool instance %d deviates by %.3e", round, diff));
        }
    }
    return format("100 convolution and 100 pooling instances match loop oracles "
                  "(max |diff| %.1e)",
                  worst);
}

// ---- criterion 5: renderer determinism and goldens ------------------------

std::string criterion5() {
    const auto kv = testsup::read_kv(testsup::golden_path("seed42_raster.txt"));
    const auto w = testsup::reference_window();
    const render::PlotStyle style;

    const auto img1 = render::rasterize(w, style);
    const auto img2 = render::rasterize(w, style);
    const auto ppm1 = render::encode_ppm(img1);
    const auto ppm2 = render::encode_ppm(img2);
    need(ppm1 == ppm2, "two rasterizations of the reference window differ");
    need(to_hex(fnv1a64(img1.pixels)) == kv.at("pixels_fnv1a64"),
         "pixel hash drifted from the committed golden " + kv.at("pixels_fnv1a64"));
    need(to_hex(fnv1a64(ppm1)) == kv.at("ppm_fnv1a64"),
         "ppm hash drifted from the committed golden " + kv.at("ppm_fnv1a64"));

    const auto flat = testsup::make_window(0x01, std::vector<double>(100, 0.005));
    const auto img = render::rasterize(flat, style);
    int rows_with_line = 0;
    int line_row = -1;
    for (int y = 0; y < img.height; ++y) {
        bool has = false;
        for (int x = 0; x < img.width; ++x) {
            has = has || img.at(x, y) == style.line_color;
        }
        if (has) {
            ++rows_with_line;
            line_row = y;
        }
    }
    need(rows_with_line == 1,
         format("constant window paints %d rows, expected exactly 1",
                rows_with_line));
    need(line_row == img.height / 2,
         format("constant window row %d is not the midline %d", line_row,
                img.height / 2));
    int first = -1, last = -1, count = 0;
    for (int x = 0; x < img.width; ++x) {
        if (img.at(x, line_row) == style.line_color) {
            if (first < 0) {
                first = x;
            }
            last = x;
            ++count;
        }
    }
    need(count == last - first + 1 && count >= 2,
         "midline pixels do not form one contiguous run");
    return format("byte-identical reruns match golden %s; constant window is one "
                  "run on row %d",
                  kv.at("ppm_fnv1a64").c_str(), line_row);
}

// ---- criterion 6: augmentation invariants ---------------------------------

std::string criterion6() {
    Rng rng(606);
    for (int i = 0; i < 100; ++i) {
        const int w = 1 + static_cast<int>(rng.bounded(24));
        const int h = 1 + static_cast<int>(rng.bounded(24));
        const auto img = testsup::random_image(w, h, rng);
        need(augment::hflip(augment::hflip(img)) == img,
             format("hflip is not an involution on a %dx%d image", w, h));
    }

    const auto img = testsup::random_image(21, 16, rng);
    need(augment::affine_sample(img, augment::Affine2x3{}) == img,
         "the identity transform is not a pixel identity");

    augment::AugmentParams still;
    still.shear_range = 0.0;
    still.zoom_range = 0.0;
    still.horizontal_flip = false;
    for (uint64_t epoch : {0ull, 3ull}) {
        need(augment::augment_image(img, still, epoch, 5) == img,
             "zero-range parameters do not give the identity pipeline");
    }

    augment::AugmentParams params; // default 0.2 ranges
    Rng mc(607);
    double sum_zx = 0.0, sum_zy = 0.0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const auto t = augment::draw_transform(params, mc);
        sum_zx += t.matrix.a00;
        sum_zy += t.matrix.a11;
    }
    const double mean_zx = sum_zx / draws;
    const double mean_zy = sum_zy / draws;
    need(std::abs(mean_zx - 1.0) <= 0.01,
         format("x zoom mean %.4f is outside 1.0 +/- 0.01", mean_zx));
    need(std::abs(mean_zy - 1.0) <= 0.01,
         format("y zoom mean %.4f is outside 1.0 +/- 0.01", mean_zy));
    return format("involution, identity, zero-range identity hold; zoom means "
                  "%.4f/%.4f over 10000 draws",
                  mean_zx, mean_zy);
}

// ---- criterion 7: capture round trip --------------------------------------

std::string criterion7() {
    const std::vector<sim::DeviceProfile> profiles = {sim::default_profile_a(),
                                                      sim::default_profile_b()};
    const size_t per_device = 4000;
    testsup::TempDir tmp;
    const auto path = tmp.file("roundtrip.pcap");
    sim::generate_pcap(profiles, per_device, path);

    const auto file = pcap::read_file(path);
    need(!file.body.error, "capture reads back with an error");
    need(file.body.stats.skipped == 0,
         format("%llu frames were skipped",
                static_cast<unsigned long long>(file.body.stats.skipped)));
    need(file.body.records.size() == 2 * per_device, "record count mismatch");

    const auto streams = iat::device_streams(file.body.records);
    double worst = 0.0;
    for (const auto& profile : profiles) {
        const iat::DeviceKey key{profile.mac};
        const auto it = streams.find(key);
        need(it != streams.end(), "device stream missing: " + key.to_string());
        const auto series = iat::compute_iats(key, it->second);
        need(series.dropped_nonpositive == 0, "non-positive IATs in the capture");
        const auto truth = sim::sample_iats(profile, per_device);
        need(series.iats.size() == per_device - 1, "recovered IAT count mismatch");
        // packet k sits after the k-th sampled gap, so the first gap never
        // separates two captured packets
        for (size_t i = 0; i < series.iats.size(); ++i) {
            const double diff = std::abs(series.iats[i] - truth[i + 1]);
            worst = std::max(worst, diff);
            need(diff <= 1e-6 + 1e-9,
                 format("%s IAT %zu off by %.3e s", profile.name.c_str(), i, diff));
        }
    }
    return format("2x%zu packets round-trip with every IAT within 1 us "
                  "(worst %.2e s), zero skipped",
                  per_device, worst);
}

// ---- criterion 8: batch arithmetic ----------------------------------------

std::string criterion8() {
    const auto two = train::make_batches(500, 250, 1, 1);
    need(two.size() == 2, format("500/250 made %zu batches, expected 2", two.size()));
    need(two[0].size() == 250 && two[1].size() == 250, "500/250 batches not 250 each");

    const auto uneven = train::make_batches(995, 16, 1, 1);
    need(uneven.size() == 63,
         format("995/16 made %zu batches, expected 63", uneven.size()));
    return "make_batches(500,250) = 2 and make_batches(995,16) = 63";
}

// ---- criterion 9: synthetic benchmark -------------------------------------

constexpr uint64_t kBenchSeed = 17;
constexpr int kBenchEpochs = 12;

train::TrainConfig benchmark_config(int side) {
    train::TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.epochs = kBenchEpochs;
    cfg.learning_rate = 1e-3;
    cfg.seed = kBenchSeed;
    cfg.augment.seed = kBenchSeed;
    cfg.plot_style.width = side;
    cfg.plot_style.height = side;
    cfg.plot_style.y_scale = render::YScale::log_fixed;
    return cfg;
}

std::string criterion9() {
    int side = 64; // reduced size for CI; IATFP_BENCH_SIZE=150 runs the full benchmark
    if (const char* env = std::getenv("IATFP_BENCH_SIZE")) {
        side = std::atoi(env);
        need(side == 64 || side == 150, "IATFP_BENCH_SIZE must be 64 or 150");
    }
    const auto t0 = std::chrono::steady_clock::now();

    const auto windows = sim::benchmark_dataset(sim::default_profile_a(),
                                                sim::default_profile_b());
    need(windows.size() == 1244, "benchmark dataset is not 636+608 windows");
    const auto split = iat::split_dataset(windows, 0.8, kBenchSeed);
    const auto cfg = benchmark_config(side);

    testsup::TempDir cache;
    const auto result =
        train::train(split.train, split.validation, cfg, cache.path(), &std::cerr);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    need(result.best_val_accuracy >= 0.85,
         format("best validation accuracy %.4f < 0.85 within %d epochs",
                result.best_val_accuracy, cfg.epochs));
    need(result.best_epoch <= 30, "best epoch beyond the 30-epoch budget");
    if (side == 64) {
        // the 15 min budget is a constraint on the reduced CI size; the
        // full-size run just reports its timing
        need(seconds <= 900.0,
             format("run took %.0fs, over the 15 min budget", seconds));
    }

    // per-seed determinism: replaying the first epochs reproduces the
    // history bitwise (every stream is keyed by seed, epoch, and sample)
    auto prefix_cfg = cfg;
    prefix_cfg.epochs = 2;
    const auto replay =
        train::train(split.train, split.validation, prefix_cfg, cache.path(), nullptr);
    for (int e = 0; e < prefix_cfg.epochs; ++e) {
        const auto& a = result.history[static_cast<size_t>(e)];
        const auto& b = replay.history[static_cast<size_t>(e)];
        need(a.train_loss == b.train_loss && a.val_loss == b.val_loss &&
                 a.train_accuracy == b.train_accuracy &&
                 a.val_accuracy == b.val_accuracy,
             format("epoch %d of the replay diverged", e + 1));
    }
    return format("best val accuracy %.4f at epoch %d (%dx%d, %d epochs, %.0fs); "
                  "2-epoch replay is bitwise identical",
                  result.best_val_accuracy, result.best_epoch, side, side,
                  cfg.epochs, seconds);
}

// ---- criterion 10: separable sanity ----------------------------------------

std::string criterion10() {
    auto train_set = constant_windows(0x0a, 0.001, 8, 8);
    auto more = constant_windows(0x0b, 0.1, 8, 8);
    train_set.insert(train_set.end(), more.begin(), more.end());
    auto val_set = constant_windows(0x0a, 0.001, 2, 8);
    auto val_b = constant_windows(0x0b, 0.1, 2, 8);
    val_set.insert(val_set.end(), val_b.begin(), val_b.end());

    train::TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 5;
    cfg.learning_rate = 0.01;
    cfg.seed = 3;
    cfg.augment.shear_range = 0.0;
    cfg.augment.zoom_range = 0.0;
    cfg.augment.horizontal_flip = false;
    cfg.plot_style.width = 8;
    cfg.plot_style.height = 8;
    cfg.plot_style.margin = 1;
    cfg.plot_style.y_scale = render::YScale::log_fixed;

    const auto result = train::train(train_set, val_set, cfg);
    need(result.best_val_accuracy == 1.0,
         format("best validation accuracy %.4f never reached 1.0 in %d epochs",
                result.best_val_accuracy, cfg.epochs));
    return format("two constant classes hit validation accuracy 1.0 at epoch %d",
                  result.best_epoch);
}

// ---- criterion 11: model persistence ----------------------------------------

std::string criterion11() {
    const auto params = nn::ModelParams::create(8, 8, 77);
    const auto bytes = nn::serialize_model(params, nn::LossKind::bce);

    testsup::TempDir tmp;
    const auto path = tmp.file("model.iatm");
    nn::save_model(path, params, nn::LossKind::bce);
    need(read_binary_file(path) == bytes, "file bytes differ from serialization");
    const auto loaded = nn::load_model(path);
    need(nn::serialize_model(loaded.params, loaded.loss_kind) == bytes,
         "reserialized model is not bitwise identical");

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    const auto magic_code =
        testsup::thrown_code([&] { nn::deserialize_model(bad_magic); });
    need(magic_code == Errc::bad_model_magic, "corrupted magic raised the wrong error");

    const std::vector<unsigned char> cut(bytes.begin(),
                                         bytes.begin() + bytes.size() / 2);
    const auto cut_code = testsup::thrown_code([&] { nn::deserialize_model(cut); });
    need(cut_code == Errc::truncated_model, "truncation raised the wrong error");

    // swapping two dimension bytes keeps the element count, so the damage
    // only shows in the shape chain
    auto swapped = bytes;
    need(swapped[23] == 32 && swapped[27] == 3, "model layout changed; fix the test");
    std::swap(swapped[23], swapped[27]);
    const auto shape_code =
        testsup::thrown_code([&] { nn::deserialize_model(swapped); });
    need(shape_code == Errc::shape_chain_mismatch,
         "shape mutation raised the wrong error");

    need(magic_code != cut_code && cut_code != shape_code && magic_code != shape_code,
         "corruption errors are not distinct");
    return "round trip is bitwise; magic, truncation, and shape damage raise "
           "distinct errors";
}

struct Criterion {
    int id;
    std::string (*run)();
};

const Criterion kCriteria[] = {
    {1, criterion1}, {2, criterion2}, {3, criterion3},  {4, criterion4},
    {5, criterion5}, {6, criterion6}, {7, criterion7},  {8, criterion8},
    {9, criterion9}, {10, criterion10}, {11, criterion11},
};

} // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) {
        const char* arg = argv[i];
        if (arg[0] == 'c' || arg[0] == 'C') {
            ++arg;
        }
        const int id = std::atoi(arg);
        if (id < 1 || id > 11) {
            std::fprintf(stderr, "usage: %s [c1..c11 ...]\n", argv[0]);
            return 2;
        }
        wanted.push_back(id);
    }
    if (wanted.empty()) {
        for (const auto& c : kCriteria) {
            wanted.push_back(c.id);
        }
    }

    bool all_passed = true;
    for (int id : wanted) {
        const auto& criterion = kCriteria[id - 1];
        try {
            const std::string detail = criterion.run();
            std::printf("PASS criterion %d: %s\n", id, detail.c_str());
        } catch (const std::exception& e) {
            std::printf("FAIL criterion %d: %s\n", id, e.what());
            all_passed = false;
        }
        std::fflush(stdout);
    }
    return all_passed ? 0 : 1;
}
