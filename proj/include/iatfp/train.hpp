#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "iatfp/augment.hpp"
#include "iatfp/convnet.hpp"
#include "iatfp/iat.hpp"
#include "iatfp/render.hpp"

namespace iatfp::train {

enum class Optimizer { adam, sgd };

std::string to_string(Optimizer opt);
Optimizer optimizer_from_string(const std::string& name);

struct TrainConfig {
    int batch_size = 16;
    int epochs = 50;
    double learning_rate = 1e-3;
    nn::LossKind loss_kind = nn::LossKind::bce;
    Optimizer optimizer = Optimizer::adam;
    double split_ratio = 0.8;
    uint64_t seed = 0;
    augment::AugmentParams augment;
    render::PlotStyle plot_style;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

// Two-device label map: class index = position of the device key in sorted
// order. The binary head fixes the class count at two.
struct LabelMap {
    std::vector<iat::DeviceKey> devices;

    static LabelMap from_windows(const std::vector<iat::IatWindow>& windows);

    int label_of(const iat::DeviceKey& device) const;
};

// Seeded shuffle of 0..n-1 keyed by (seed, epoch), cut into ceil(n/batch)
// batches; only the last batch may be short.
std::vector<std::vector<size_t>> make_batches(size_t n_samples, size_t batch_size,
                                              uint64_t seed, uint64_t epoch);

// Planar (3,H,W) tensor of byte/255 values.
nn::Tensor image_tensor(const render::FingerprintImage& image);

// Rasterize through the on-disk PPM cache keyed by (window values, style);
// an empty cache_dir renders fresh every time. Unreadable cache entries are
// re-rendered and overwritten.
render::FingerprintImage base_image(const iat::IatWindow& window,
                                    const render::PlotStyle& style,
                                    const std::string& cache_dir);

struct TrainResult {
    nn::ModelParams params; // best-validation-accuracy checkpoint
    std::vector<EpochRecord> history;
    int best_epoch = 0; // 1-based
    double best_val_accuracy = 0.0;
    double final_val_accuracy = 0.0;
    LabelMap labels;
};

// Online augmentation on the training split only; validation runs in
// evaluation mode after every epoch. Ties on best validation accuracy keep
// the latest epoch. `log`, when given, receives one line per epoch.
TrainResult train(const std::vector<iat::IatWindow>& train_windows,
                  const std::vector<iat::IatWindow>& val_windows,
                  const TrainConfig& config, const std::string& cache_dir = "",
                  std::ostream* log = nullptr);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
    std::vector<double> probabilities; // in window order
};

// Evaluation mode: no dropout, no augmentation; probability >= 0.5 predicts
// class 1.
EvalResult evaluate(const nn::ModelParams& params,
                    const std::vector<iat::IatWindow>& windows, const LabelMap& labels,
                    const render::PlotStyle& style, nn::LossKind loss_kind,
                    const std::string& cache_dir = "");

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);

} // namespace iatfp::train
