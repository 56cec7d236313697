#include "iatfp/cli_app.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "iatfp/config.hpp"
#include "iatfp/convnet.hpp"
#include "iatfp/errors.hpp"
#include "iatfp/iat.hpp"
#include "iatfp/pcap.hpp"
#include "iatfp/render.hpp"
#include "iatfp/simulate.hpp"
#include "iatfp/train.hpp"
#include "iatfp/util.hpp"

namespace iatfp::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Exclusive ownership of an experiment directory for the process lifetime.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
        FILE* f = std::fopen(path_.string().c_str(), "wx");
        if (f == nullptr) {
            raise(Errc::io_failure,
                  "experiment directory is already in use ('" + path_.string() +
                      "' exists; remove it if no other run owns the directory)");
        }
        std::fclose(f);
    }

    ~DirLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
};

struct CommonFlags {
    bool quiet = false;
    std::optional<uint64_t> seed;
};

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        raise(Errc::io_failure,
              "cannot create directory '" + dir.string() + "': " + ec.message());
    }
}

std::map<std::string, size_t> per_device_counts(const std::vector<iat::IatWindow>& windows) {
    std::map<std::string, size_t> counts;
    for (const auto& w : windows) {
        ++counts[w.device.to_string()];
    }
    return counts;
}

void do_ingest(const std::string& pcap_path, const std::string& filter_name,
               const std::string& out_path, size_t window_size, size_t stride,
               const CommonFlags& flags) {
    const auto model = pcap::filter_model_from_string(filter_name);
    if (!model) {
        raise(Errc::config_invalid,
              "--filter '" + filter_name + "' is not one of model2, model3, model4, all");
    }
    const pcap::PcapFile file = pcap::read_file(pcap_path);
    if (file.body.error) {
        std::cerr << "warning: capture ends mid-record (" << file.body.error_detail
                  << "); keeping the " << file.body.records.size()
                  << " records before the break\n";
    }
    const auto kept = pcap::apply_filter(file.body.records, *model);
    const auto windows = iat::windows_from_records(kept, window_size, stride);

    std::vector<config::ManifestEntry> entries;
    entries.reserve(windows.size());
    for (const auto& w : windows) {
        entries.push_back({w, pcap_path, pcap::filter_model_name(*model)});
    }
    config::write_manifest(out_path, entries);

    if (windows.empty()) {
        std::cerr << "warning: no complete " << window_size
                  << "-IAT windows; manifest is empty\n";
    }
    if (!flags.quiet) {
        std::cout << file.body.stats.summary_line() << "\n";
        std::cout << "filter " << pcap::filter_model_name(*model) << ": "
                  << kept.size() << " packets kept\n";
        for (const auto& [device, n] : per_device_counts(windows)) {
            std::cout << device << ": " << n << " windows\n";
        }
        std::cout << "wrote " << windows.size() << " windows to " << out_path << "\n";
    }
}

render::PlotStyle style_from_optional_config(const std::string& config_path) {
    if (config_path.empty()) {
        return render::PlotStyle{};
    }
    return config::ExperimentConfig::load(config_path).train.plot_style;
}

void do_render(const std::string& manifest_path, const std::string& out_dir,
               const std::string& config_path, const CommonFlags& flags) {
    const auto entries = config::read_manifest(manifest_path);
    const render::PlotStyle style = style_from_optional_config(config_path);
    if (entries.empty()) {
        std::cerr << "warning: manifest is empty; nothing to render\n";
        return;
    }
    make_dirs(out_dir);
    for (const auto& e : entries) {
        const std::string device = e.window.device.to_string();
        const fs::path dir = fs::path(out_dir) / device;
        make_dirs(dir);
        const fs::path file =
            dir / (device + "_" + std::to_string(e.window.window_index) + ".ppm");
        const auto img = render::rasterize(e.window, style);
        write_binary_file(file.string(), render::encode_ppm(img));
    }
    if (!flags.quiet) {
        std::cout << "rendered " << entries.size() << " windows into " << out_dir
                  << "\n";
    }
}

// Windows for training: a manifest when configured, otherwise the two-profile
// synthetic benchmark at the class counts 636/608.
std::vector<iat::IatWindow> training_windows(const config::ExperimentConfig& cfg) {
    if (!cfg.paths.manifest.empty()) {
        return config::manifest_windows(config::read_manifest(cfg.paths.manifest));
    }
    if (cfg.profiles.size() == 2) {
        return sim::benchmark_dataset(cfg.profiles[0], cfg.profiles[1], 636, 608,
                                      cfg.window_size);
    }
    std::vector<sim::DeviceProfile> defaults = {sim::default_profile_a(),
                                                sim::default_profile_b()};
    if (cfg.profiles.empty()) {
        return sim::benchmark_dataset(defaults[0], defaults[1], 636, 608,
                                      cfg.window_size);
    }
    raise(Errc::config_invalid,
          "training needs paths.manifest, exactly two profiles, or no profiles "
          "(defaults)");
}

void write_summary(const fs::path& path, const config::ExperimentConfig& cfg,
                   const train::TrainResult& result, double train_seconds) {
    json labels = json::object();
    for (size_t i = 0; i < result.labels.devices.size(); ++i) {
        labels[result.labels.devices[i].to_string()] = i;
    }
    json root = {
        {"seed", cfg.seed},
        {"epochs", cfg.train.epochs},
        {"best_epoch", result.best_epoch},
        {"best_val_accuracy", result.best_val_accuracy},
        {"final_val_accuracy", result.final_val_accuracy},
        {"final_train_accuracy", result.history.back().train_accuracy},
        {"final_train_loss", result.history.back().train_loss},
        {"train_seconds", train_seconds},
        {"labels", labels},
    };
    write_text_file(path.string(), root.dump(2) + "\n");
}

void do_train(const std::string& config_path, const CommonFlags& flags) {
    const auto cfg = config::ExperimentConfig::load(config_path, flags.seed);
    if (cfg.paths.out_dir.empty()) {
        raise(Errc::config_invalid, "config.paths.out_dir is required for training");
    }
    const fs::path out_dir = cfg.paths.out_dir;
    make_dirs(out_dir);
    DirLock lock(out_dir);
    const fs::path images_dir = out_dir / "images";
    make_dirs(images_dir);

    write_text_file((out_dir / "config.json").string(), cfg.to_json_text());

    const auto windows = training_windows(cfg);
    if (windows.empty()) {
        raise(Errc::empty_split, "no windows available for training");
    }
    {
        std::vector<config::ManifestEntry> entries;
        entries.reserve(windows.size());
        const std::string source =
            cfg.paths.manifest.empty() ? "profiles" : cfg.paths.manifest;
        const std::string filter =
            cfg.filter ? pcap::filter_model_name(*cfg.filter) : "all";
        for (const auto& w : windows) {
            entries.push_back({w, source, filter});
        }
        config::write_manifest((out_dir / "manifest.jsonl").string(), entries);
    }

    const auto split = iat::split_dataset(windows, cfg.train.split_ratio,
                                          cfg.train.seed);
    if (!flags.quiet) {
        std::cerr << "split: " << split.train.size() << " train / "
                  << split.validation.size() << " validation\n";
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto result =
        train::train(split.train, split.validation, cfg.train, images_dir.string(),
                     flags.quiet ? nullptr : &std::cerr);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nn::save_model((out_dir / "model.iatm").string(), result.params,
                   cfg.train.loss_kind);
    train::write_history_csv((out_dir / "history.csv").string(), result.history);
    write_summary(out_dir / "summary.json", cfg, result, seconds);

    std::cout << "best_val_accuracy=" << result.best_val_accuracy << " at epoch "
              << result.best_epoch << "; final_val_accuracy="
              << result.final_val_accuracy << "\n";
    std::cout << "experiment directory: " << out_dir.string() << "\n";
}

train::LabelMap labels_from_summary(const fs::path& summary_path) {
    json root;
    try {
        root = json::parse(read_text_file(summary_path.string()));
    } catch (const json::exception& e) {
        raise(Errc::config_invalid,
              "'" + summary_path.string() + "' is not valid JSON: " + e.what());
    }
    if (!root.is_object() || !root.contains("labels") ||
        !root.at("labels").is_object()) {
        raise(Errc::config_invalid,
              "'" + summary_path.string() + "' lacks a labels object");
    }
    std::map<int, iat::DeviceKey> by_index;
    for (const auto& [mac_text, idx] : root.at("labels").items()) {
        const auto mac = pcap::mac_from_string(mac_text);
        if (!mac || !idx.is_number_integer()) {
            raise(Errc::config_invalid,
                  "labels in '" + summary_path.string() + "' must map MACs to indices");
        }
        by_index[idx.get<int>()] = iat::DeviceKey{*mac};
    }
    train::LabelMap map;
    for (const auto& [idx, key] : by_index) {
        if (idx != static_cast<int>(map.devices.size())) {
            raise(Errc::config_invalid, "label indices must be 0..n-1 without gaps");
        }
        map.devices.push_back(key);
    }
    return map;
}

// Model sidecars: config.json and summary.json written next to the model by
// `train`. The config override replaces the plot style source.
struct ModelContext {
    nn::SavedModel model;
    render::PlotStyle style;
    std::optional<train::LabelMap> labels;
};

ModelContext load_model_context(const std::string& model_path,
                                const std::string& config_path) {
    ModelContext ctx;
    ctx.model = nn::load_model(model_path);
    const fs::path dir = fs::path(model_path).parent_path();
    if (!config_path.empty()) {
        ctx.style = config::ExperimentConfig::load(config_path).train.plot_style;
    } else if (fs::exists(dir / "config.json")) {
        ctx.style =
            config::ExperimentConfig::load((dir / "config.json").string()).train.plot_style;
    } else {
        std::cerr << "warning: no config.json beside the model; using the default "
                     "plot style\n";
    }
    if (fs::exists(dir / "summary.json")) {
        ctx.labels = labels_from_summary(dir / "summary.json");
    }
    return ctx;
}

void do_eval(const std::string& model_path, const std::string& manifest_path,
             const std::string& config_path, const CommonFlags& flags) {
    const ModelContext ctx = load_model_context(model_path, config_path);
    const auto entries = config::read_manifest(manifest_path);
    if (entries.empty()) {
        raise(Errc::empty_split, "manifest '" + manifest_path + "' holds no windows");
    }
    const auto windows = config::manifest_windows(entries);
    const train::LabelMap labels =
        ctx.labels ? *ctx.labels : train::LabelMap::from_windows(windows);
    if (!ctx.labels) {
        std::cerr << "warning: no summary.json beside the model; labels derived "
                     "from the manifest\n";
    }
    const auto result = train::evaluate(ctx.model.params, windows, labels,
                                        ctx.style, ctx.model.loss_kind);
    if (!flags.quiet) {
        for (const auto& [device, n] : per_device_counts(windows)) {
            std::cout << device << ": " << n << " windows\n";
        }
    }
    char line[128];
    std::snprintf(line, sizeof line, "accuracy=%.6f mean_loss=%.6f n=%zu",
                  result.accuracy, result.mean_loss, windows.size());
    std::cout << line << "\n";
}

void do_predict(const std::string& model_path, const std::string& window_path,
                const std::string& config_path, const CommonFlags&) {
    const ModelContext ctx = load_model_context(model_path, config_path);
    if (!ctx.labels) {
        raise(Errc::config_invalid,
              "predict needs summary.json beside the model for device labels");
    }

    json obj;
    try {
        obj = json::parse(read_text_file(window_path));
    } catch (const json::exception& e) {
        raise(Errc::config_invalid,
              "window file is not valid JSON: " + std::string(e.what()));
    }
    if (!obj.is_object() || !obj.contains("values") || !obj.at("values").is_array()) {
        raise(Errc::config_invalid,
              "window file must be an object with a numeric 'values' array");
    }
    iat::IatWindow window;
    for (const auto& v : obj.at("values")) {
        if (!v.is_number()) {
            raise(Errc::config_invalid, "window values must all be numbers");
        }
        window.values.push_back(v.get<double>());
    }

    const auto img = render::rasterize(window, ctx.style);
    const double p = nn::model_forward(train::image_tensor(img), ctx.model.params,
                                       nn::Mode::eval);
    const int predicted = p >= 0.5 ? 1 : 0;
    const double confidence = predicted == 1 ? p : 1.0 - p;
    char line[128];
    std::snprintf(line, sizeof line, "device=%s probability=%.6f",
                  ctx.labels->devices[static_cast<size_t>(predicted)].to_string().c_str(),
                  confidence);
    std::cout << line << "\n";
}

void do_simulate(const std::string& config_path, const std::string& out_path,
                 const CommonFlags& flags) {
    config::ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = config::ExperimentConfig::load(config_path, flags.seed);
    } else if (flags.seed) {
        cfg.seed = *flags.seed;
    }
    std::vector<sim::DeviceProfile> profiles = cfg.profiles;
    if (profiles.empty()) {
        profiles = {sim::default_profile_a(), sim::default_profile_b()};
    }
    const std::string out = out_path.empty() ? cfg.paths.pcap : out_path;
    if (out.empty()) {
        raise(Errc::config_invalid, "simulate needs --out or config.paths.pcap");
    }
    sim::generate_pcap(profiles, cfg.packets_per_device, out);
    if (!flags.quiet) {
        std::cout << "wrote " << profiles.size() * cfg.packets_per_device
                  << " packets for " << profiles.size() << " devices to " << out
                  << "\n";
    }
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"device fingerprinting from packet inter-arrival times"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonFlags flags;
    app.add_flag("--quiet", flags.quiet, "suppress progress output");
    uint64_t seed_value = 0;
    auto* seed_opt =
        app.add_option("--seed", seed_value, "override the config seed everywhere");

    std::string pcap_path;
    std::string filter_name;
    std::string out_path;
    std::string manifest_path;
    std::string config_path;
    std::string model_path;
    std::string window_path;
    std::string out_dir;
    size_t window_size = iat::kDefaultWindowSize;
    size_t stride = 0;

    auto* ingest = app.add_subcommand("ingest",
                                      "parse a pcap into an IAT window manifest");
    ingest->add_option("--pcap", pcap_path, "classic pcap capture file")->required();
    ingest->add_option("--filter", filter_name,
                       "traffic filter: model2, model3, model4, or all")
        ->required();
    ingest->add_option("--out", out_path, "manifest path to write")->required();
    ingest->add_option("--window-size", window_size, "IATs per window (default 100)");
    ingest->add_option("--stride", stride,
                       "window stride (default: window size, non-overlapping)");

    auto* rendercmd = app.add_subcommand("render",
                                         "rasterize manifest windows into PPM images");
    rendercmd->add_option("--manifest", manifest_path, "window manifest")->required();
    rendercmd->add_option("--out-dir", out_dir, "output directory")->required();
    rendercmd->add_option("--config", config_path,
                          "experiment config supplying the plot style");

    auto* traincmd = app.add_subcommand("train", "train a model per the config");
    traincmd->add_option("--config", config_path, "experiment config JSON")->required();

    auto* evalcmd = app.add_subcommand("eval", "evaluate a model on a manifest");
    evalcmd->add_option("--model", model_path, "model file")->required();
    evalcmd->add_option("--manifest", manifest_path, "window manifest")->required();
    evalcmd->add_option("--config", config_path,
                        "experiment config overriding the model's sidecar");

    auto* predictcmd = app.add_subcommand("predict",
                                          "predict the device for one window");
    predictcmd->add_option("--model", model_path, "model file")->required();
    predictcmd->add_option("--window", window_path,
                           "JSON file with a 'values' array")
        ->required();
    predictcmd->add_option("--config", config_path,
                           "experiment config overriding the model's sidecar");

    auto* simcmd = app.add_subcommand("simulate", "generate a synthetic capture");
    simcmd->add_option("--config", config_path,
                       "experiment config with device profiles");
    simcmd->add_option("--out", out_path, "pcap path to write");

    try {
        app.parse(argc, argv);
        if (seed_opt->count() > 0) {
            flags.seed = seed_value;
        }
        if (ingest->parsed()) {
            do_ingest(pcap_path, filter_name, out_path, window_size, stride, flags);
        } else if (rendercmd->parsed()) {
            do_render(manifest_path, out_dir, config_path, flags);
        } else if (traincmd->parsed()) {
            do_train(config_path, flags);
        } else if (evalcmd->parsed()) {
            do_eval(model_path, manifest_path, config_path, flags);
        } else if (predictcmd->parsed()) {
            do_predict(model_path, window_path, config_path, flags);
        } else if (simcmd->parsed()) {
            do_simulate(config_path, out_path, flags);
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == Errc::io_failure ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace iatfp::cli
