#include "iatfp/train.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <set>

#include "iatfp/errors.hpp"
#include "iatfp/rng.hpp"
#include "iatfp/util.hpp"

namespace iatfp::train {

std::string to_string(Optimizer opt) { return opt == Optimizer::adam ? "adam" : "sgd"; }

Optimizer optimizer_from_string(const std::string& name) {
    if (name == "adam") return Optimizer::adam;
    if (name == "sgd") return Optimizer::sgd;
    raise(Errc::config_invalid, "unknown optimizer '" + name + "'");
}

void TrainConfig::validate() const {
    if (batch_size < 1) {
        raise(Errc::config_invalid, "batch_size must be at least 1");
    }
    if (epochs < 1) {
        raise(Errc::config_invalid, "epochs must be at least 1");
    }
    if (!(learning_rate > 0.0)) {
        raise(Errc::config_invalid, "learning_rate must be positive");
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
        raise(Errc::config_invalid, "split_ratio must lie in (0, 1)");
    }
    augment.validate();
    plot_style.validate();
}

LabelMap LabelMap::from_windows(const std::vector<iat::IatWindow>& windows) {
    std::set<iat::DeviceKey> keys;
    for (const auto& w : windows) {
        keys.insert(w.device);
    }
    LabelMap map;
    map.devices.assign(keys.begin(), keys.end());
    return map;
}

int LabelMap::label_of(const iat::DeviceKey& device) const {
    const auto it = std::lower_bound(devices.begin(), devices.end(), device);
    if (it == devices.end() || !(*it == device)) {
        raise(Errc::config_invalid,
              "device " + device.to_string() + " is not in the label map");
    }
    return static_cast<int>(it - devices.begin());
}

std::vector<std::vector<size_t>> make_batches(size_t n_samples, size_t batch_size,
                                              uint64_t seed, uint64_t epoch) {
    if (n_samples == 0) {
        raise(Errc::empty_split, "cannot batch an empty sample set");
    }
    if (batch_size == 0) {
        raise(Errc::config_invalid, "batch_size must be at least 1");
    }
    std::vector<size_t> order(n_samples);
    for (size_t i = 0; i < n_samples; ++i) {
        order[i] = i;
    }
    Rng rng(hash_combine(hash_combine(seed, stream::batches), epoch));
    for (size_t i = n_samples; i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.bounded(i));
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::vector<size_t>> batches;
    batches.reserve((n_samples + batch_size - 1) / batch_size);
    for (size_t start = 0; start < n_samples; start += batch_size) {
        const size_t end = std::min(start + batch_size, n_samples);
        batches.emplace_back(order.begin() + static_cast<ptrdiff_t>(start),
                             order.begin() + static_cast<ptrdiff_t>(end));
    }
    return batches;
}

nn::Tensor image_tensor(const render::FingerprintImage& image) {
    const size_t h = static_cast<size_t>(image.height);
    const size_t w = static_cast<size_t>(image.width);
    nn::Tensor t = nn::Tensor::zeros({3, h, w});
    for (size_t c = 0; c < 3; ++c) {
        double* plane = &t.data[c * h * w];
        for (size_t e = 0; e < h * w; ++e) {
            plane[e] = image.pixels[3 * e + c] / 255.0;
        }
    }
    return t;
}

render::FingerprintImage base_image(const iat::IatWindow& window,
                                    const render::PlotStyle& style,
                                    const std::string& cache_dir) {
    if (cache_dir.empty()) {
        return render::rasterize(window, style);
    }
    const auto* vb = reinterpret_cast<const unsigned char*>(window.values.data());
    uint64_t key = fnv1a64(std::span(vb, window.values.size() * sizeof(double)));
    key = hash_combine(key, style.fingerprint());
    const std::string path =
        (std::filesystem::path(cache_dir) / (to_hex(key) + ".ppm")).string();

    if (std::filesystem::exists(path)) {
        try {
            auto img = render::decode_ppm(read_binary_file(path));
            if (img.width == style.width && img.height == style.height) {
                return img;
            }
        } catch (const Error&) {
            // fall through to re-render
        }
    }
    auto img = render::rasterize(window, style);
    write_binary_file(path, render::encode_ppm(img));
    return img;
}

namespace {

// labels as doubles for the loss, resolved once up front
std::vector<double> label_values(const std::vector<iat::IatWindow>& windows,
                                 const LabelMap& labels) {
    std::vector<double> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        out.push_back(static_cast<double>(labels.label_of(w.device)));
    }
    return out;
}

void accumulate(nn::ModelParams& acc, const nn::ModelParams& g) {
    auto at = acc.tensors();
    auto gt = g.tensors();
    for (size_t i = 0; i < at.size(); ++i) {
        double* a = at[i].second->data.data();
        const double* b = gt[i].second->data.data();
        for (size_t e = 0; e < at[i].second->data.size(); ++e) {
            a[e] += b[e];
        }
    }
}

void scale(nn::ModelParams& acc, double factor) {
    for (auto& [name, t] : acc.tensors()) {
        for (double& v : t->data) {
            v *= factor;
        }
    }
}

struct EvalTotals {
    double loss_sum = 0.0;
    size_t correct = 0;
    std::vector<double> probabilities;
};

EvalTotals eval_tensors(const nn::ModelParams& params,
                        const std::vector<nn::Tensor>& images,
                        const std::vector<double>& labels, nn::LossKind kind) {
    EvalTotals totals;
    totals.probabilities.reserve(images.size());
    for (size_t i = 0; i < images.size(); ++i) {
        const double p = nn::model_forward(images[i], params, nn::Mode::eval);
        totals.probabilities.push_back(p);
        totals.loss_sum += nn::loss(p, labels[i], kind).value;
        const double predicted = p >= 0.5 ? 1.0 : 0.0;
        totals.correct += predicted == labels[i] ? 1 : 0;
    }
    return totals;
}

} // namespace

TrainResult train(const std::vector<iat::IatWindow>& train_windows,
                  const std::vector<iat::IatWindow>& val_windows,
                  const TrainConfig& config, const std::string& cache_dir,
                  std::ostream* log) {
    config.validate();
    if (train_windows.empty() || val_windows.empty()) {
        raise(Errc::empty_split, "both splits must be non-empty");
    }

    std::vector<iat::IatWindow> all;
    all.reserve(train_windows.size() + val_windows.size());
    all.insert(all.end(), train_windows.begin(), train_windows.end());
    all.insert(all.end(), val_windows.begin(), val_windows.end());
    const LabelMap labels = LabelMap::from_windows(all);
    if (labels.devices.size() != 2) {
        raise(labels.devices.size() < 2 ? Errc::single_class_training
                                        : Errc::config_invalid,
              "the binary head needs exactly 2 devices, got " +
                  std::to_string(labels.devices.size()));
    }
    {
        std::set<int> seen;
        for (const auto& w : train_windows) {
            seen.insert(labels.label_of(w.device));
        }
        if (seen.size() < 2) {
            raise(Errc::single_class_training,
                  "training split covers only one device");
        }
    }

    const std::vector<double> train_labels = label_values(train_windows, labels);
    const std::vector<double> val_labels = label_values(val_windows, labels);

    // rasterize both splits once; augmentation works from these bases
    std::vector<render::FingerprintImage> train_base;
    train_base.reserve(train_windows.size());
    for (const auto& w : train_windows) {
        train_base.push_back(base_image(w, config.plot_style, cache_dir));
    }
    std::vector<nn::Tensor> val_images;
    val_images.reserve(val_windows.size());
    for (const auto& w : val_windows) {
        val_images.push_back(image_tensor(base_image(w, config.plot_style, cache_dir)));
    }

    nn::ModelParams params =
        nn::ModelParams::create(static_cast<size_t>(config.plot_style.height),
                                static_cast<size_t>(config.plot_style.width),
                                config.seed);
    nn::AdamState adam = nn::AdamState::like(params);
    nn::SgdState sgd = nn::SgdState::like(params);

    TrainResult result;
    result.labels = labels;
    result.params = params;
    result.best_val_accuracy = -1.0;

    const size_t n = train_windows.size();
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto batches = make_batches(n, static_cast<size_t>(config.batch_size),
                                          config.seed, static_cast<uint64_t>(epoch));
        double loss_sum = 0.0;
        size_t correct = 0;
        for (const auto& batch : batches) {
            nn::ModelParams grads = params.zeros_like();
            for (size_t idx : batch) {
                const auto img = augment::augment_image(
                    train_base[idx], config.augment, static_cast<uint64_t>(epoch), idx);
                const nn::Tensor x = image_tensor(img);
                Rng dropout_rng(hash_combine(
                    hash_combine(hash_combine(config.seed, stream::dropout),
                                 static_cast<uint64_t>(epoch)),
                    idx));
                nn::ForwardCache cache;
                const double p =
                    nn::model_forward(x, params, nn::Mode::train, &dropout_rng, &cache);
                const auto l = nn::loss(p, train_labels[idx], config.loss_kind);
                loss_sum += l.value;
                const double predicted = p >= 0.5 ? 1.0 : 0.0;
                correct += predicted == train_labels[idx] ? 1 : 0;
                accumulate(grads, nn::model_backward(cache, params, l.grad));
            }
            scale(grads, 1.0 / static_cast<double>(batch.size()));
            if (config.optimizer == Optimizer::adam) {
                nn::adam_step(params, grads, adam, config.learning_rate);
            } else {
                nn::sgd_step(params, grads, sgd, config.learning_rate);
            }
        }

        const EvalTotals val =
            eval_tensors(params, val_images, val_labels, config.loss_kind);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
        rec.val_loss = val.loss_sum / static_cast<double>(val_images.size());
        rec.val_accuracy =
            static_cast<double>(val.correct) / static_cast<double>(val_images.size());
        result.history.push_back(rec);

        if (rec.val_accuracy >= result.best_val_accuracy) {
            result.best_val_accuracy = rec.val_accuracy;
            result.best_epoch = epoch;
            result.params = params;
        }

        if (log) {
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            char line[192];
            std::snprintf(line, sizeof line,
                          "epoch %d/%d  train_loss=%.4f train_acc=%.4f  "
                          "val_loss=%.4f val_acc=%.4f  (%.1fs)",
                          epoch, config.epochs, rec.train_loss, rec.train_accuracy,
                          rec.val_loss, rec.val_accuracy, secs);
            *log << line << std::endl;
        }
    }
    result.final_val_accuracy = result.history.back().val_accuracy;
    return result;
}

EvalResult evaluate(const nn::ModelParams& params,
                    const std::vector<iat::IatWindow>& windows, const LabelMap& labels,
                    const render::PlotStyle& style, nn::LossKind loss_kind,
                    const std::string& cache_dir) {
    if (windows.empty()) {
        raise(Errc::empty_split, "cannot evaluate an empty window set");
    }
    const std::vector<double> truth = label_values(windows, labels);
    std::vector<nn::Tensor> images;
    images.reserve(windows.size());
    for (const auto& w : windows) {
        images.push_back(image_tensor(base_image(w, style, cache_dir)));
    }
    const EvalTotals totals = eval_tensors(params, images, truth, loss_kind);
    EvalResult res;
    res.accuracy =
        static_cast<double>(totals.correct) / static_cast<double>(windows.size());
    res.mean_loss = totals.loss_sum / static_cast<double>(windows.size());
    res.probabilities = totals.probabilities;
    return res;
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochRecord>& history) {
    std::string text = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
    for (const auto& rec : history) {
        char line[192];
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", rec.epoch,
                      rec.train_loss, rec.train_accuracy, rec.val_loss,
                      rec.val_accuracy);
        text += line;
    }
    write_text_file(path, text);
}

} // namespace iatfp::train
