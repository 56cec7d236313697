#include "iatfp/config.hpp"

#include <cstdio>
#include <initializer_list>
#include <set>

#include <json.hpp>

#include "iatfp/errors.hpp"
#include "iatfp/rng.hpp"
#include "iatfp/util.hpp"

namespace iatfp::config {

namespace {

using nlohmann::json;

// tag for deriving profile seeds from the experiment seed
constexpr uint64_t kProfileStream = 0x50524F46u;

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) {
        raise(Errc::config_invalid, where + " must be a JSON object");
    }
}

void expect_keys(const json& obj, std::initializer_list<const char*> allowed,
                 const std::string& where) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!ok.count(key)) {
            raise(Errc::config_invalid, "unknown key '" + key + "' in " + where);
        }
    }
}

double get_double(const json& obj, const char* key, double fallback,
                  const std::string& where) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
        raise(Errc::config_invalid, where + "." + key + " must be a number");
    }
    return v.get<double>();
}

int64_t get_int(const json& obj, const char* key, int64_t fallback,
                const std::string& where) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
        raise(Errc::config_invalid, where + "." + key + " must be an integer");
    }
    return v.get<int64_t>();
}

uint64_t get_u64(const json& obj, const char* key, uint64_t fallback,
                 const std::string& where) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!(v.is_number_integer() && (v.is_number_unsigned() || v.get<int64_t>() >= 0))) {
        raise(Errc::config_invalid,
              where + "." + key + " must be a non-negative integer");
    }
    return v.get<uint64_t>();
}

bool get_bool(const json& obj, const char* key, bool fallback,
              const std::string& where) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
        raise(Errc::config_invalid, where + "." + key + " must be a boolean");
    }
    return v.get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& where) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_string()) {
        raise(Errc::config_invalid, where + "." + key + " must be a string");
    }
    return v.get<std::string>();
}

render::Rgb get_rgb(const json& obj, const char* key, render::Rgb fallback,
                    const std::string& where) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 3) {
        raise(Errc::config_invalid,
              where + "." + key + " must be an [r,g,b] array of three integers");
    }
    render::Rgb c;
    uint8_t* parts[3] = {&c.r, &c.g, &c.b};
    for (size_t i = 0; i < 3; ++i) {
        if (!v[i].is_number_integer() || v[i].get<int64_t>() < 0 ||
            v[i].get<int64_t>() > 255) {
            raise(Errc::config_invalid,
                  where + "." + key + " channels must be integers in [0,255]");
        }
        *parts[i] = static_cast<uint8_t>(v[i].get<int64_t>());
    }
    return c;
}

render::PlotStyle parse_plot_style(const json& obj, const std::string& where) {
    expect_object(obj, where);
    expect_keys(obj,
                {"width", "height", "margin", "background", "line_color", "y_scale",
                 "log_min", "log_max", "autoscale_pad"},
                where);
    render::PlotStyle s;
    s.width = static_cast<int>(get_int(obj, "width", s.width, where));
    s.height = static_cast<int>(get_int(obj, "height", s.height, where));
    s.margin = static_cast<int>(get_int(obj, "margin", s.margin, where));
    s.background = get_rgb(obj, "background", s.background, where);
    s.line_color = get_rgb(obj, "line_color", s.line_color, where);
    s.y_scale = render::y_scale_from_string(
        get_string(obj, "y_scale", render::to_string(s.y_scale), where));
    s.log_min = get_double(obj, "log_min", s.log_min, where);
    s.log_max = get_double(obj, "log_max", s.log_max, where);
    s.autoscale_pad = get_double(obj, "autoscale_pad", s.autoscale_pad, where);
    return s;
}

augment::AugmentParams parse_augment(const json& obj, uint64_t default_seed,
                                     const std::string& where) {
    expect_object(obj, where);
    expect_keys(obj, {"shear_range", "zoom_range", "horizontal_flip", "fill", "seed"},
                where);
    augment::AugmentParams a;
    a.shear_range = get_double(obj, "shear_range", a.shear_range, where);
    a.zoom_range = get_double(obj, "zoom_range", a.zoom_range, where);
    a.horizontal_flip = get_bool(obj, "horizontal_flip", a.horizontal_flip, where);
    a.fill = augment::fill_mode_from_string(
        get_string(obj, "fill", augment::to_string(a.fill), where));
    a.seed = get_u64(obj, "seed", default_seed, where);
    return a;
}

sim::DeviceProfile parse_profile(const json& obj, uint64_t experiment_seed,
                                 size_t index, const std::string& where) {
    expect_object(obj, where);
    expect_keys(obj,
                {"name", "mac", "intra_burst_mean", "inter_burst_mean",
                 "burst_length_mean", "jitter_cv", "clock_quantum", "seed"},
                where);
    sim::DeviceProfile p;
    p.name = get_string(obj, "name", "device-" + std::to_string(index), where);
    const std::string mac_text = get_string(obj, "mac", "", where);
    if (mac_text.empty()) {
        raise(Errc::config_invalid, where + ".mac is required");
    }
    const auto mac = pcap::mac_from_string(mac_text);
    if (!mac) {
        raise(Errc::config_invalid,
              where + ".mac '" + mac_text + "' is not a aa:bb:cc:dd:ee:ff address");
    }
    p.mac = *mac;
    p.intra_burst_mean = get_double(obj, "intra_burst_mean", p.intra_burst_mean, where);
    p.inter_burst_mean = get_double(obj, "inter_burst_mean", p.inter_burst_mean, where);
    p.burst_length_mean =
        get_double(obj, "burst_length_mean", p.burst_length_mean, where);
    p.jitter_cv = get_double(obj, "jitter_cv", p.jitter_cv, where);
    p.clock_quantum = get_double(obj, "clock_quantum", p.clock_quantum, where);
    p.seed = get_u64(obj, "seed",
                     hash_combine(hash_combine(experiment_seed, kProfileStream), index),
                     where);
    return p;
}

} // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  std::optional<uint64_t> seed_override) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::config_invalid, std::string("config is not valid JSON: ") + e.what());
    }
    expect_object(root, "the config root");
    expect_keys(root,
                {"seed", "filter", "window_size", "packets_per_device", "paths",
                 "train", "augment", "plot_style", "profiles"},
                "the config root");

    ExperimentConfig cfg;
    cfg.seed = get_u64(root, "seed", cfg.seed, "config");
    if (seed_override) {
        cfg.seed = *seed_override;
    }

    if (root.contains("filter")) {
        const std::string name = get_string(root, "filter", "", "config");
        const auto model = pcap::filter_model_from_string(name);
        if (!model) {
            raise(Errc::config_invalid,
                  "config.filter '" + name +
                      "' is not one of model2, model3, model4, all");
        }
        cfg.filter = *model;
    }

    const int64_t ws = get_int(root, "window_size",
                               static_cast<int64_t>(cfg.window_size), "config");
    if (ws < 2) {
        raise(Errc::config_invalid, "config.window_size must be at least 2");
    }
    cfg.window_size = static_cast<size_t>(ws);

    const int64_t ppd = get_int(root, "packets_per_device",
                                static_cast<int64_t>(cfg.packets_per_device), "config");
    if (ppd < 1) {
        raise(Errc::config_invalid, "config.packets_per_device must be at least 1");
    }
    cfg.packets_per_device = static_cast<size_t>(ppd);

    if (root.contains("paths")) {
        const json& p = root.at("paths");
        expect_object(p, "config.paths");
        expect_keys(p, {"pcap", "manifest", "out_dir"}, "config.paths");
        cfg.paths.pcap = get_string(p, "pcap", "", "config.paths");
        cfg.paths.manifest = get_string(p, "manifest", "", "config.paths");
        cfg.paths.out_dir = get_string(p, "out_dir", "", "config.paths");
    }

    cfg.train.seed = cfg.seed;
    if (root.contains("train")) {
        const json& t = root.at("train");
        expect_object(t, "config.train");
        expect_keys(t,
                    {"batch_size", "epochs", "learning_rate", "loss", "optimizer",
                     "split_ratio", "seed"},
                    "config.train");
        cfg.train.batch_size = static_cast<int>(
            get_int(t, "batch_size", cfg.train.batch_size, "config.train"));
        cfg.train.epochs =
            static_cast<int>(get_int(t, "epochs", cfg.train.epochs, "config.train"));
        cfg.train.learning_rate =
            get_double(t, "learning_rate", cfg.train.learning_rate, "config.train");
        cfg.train.loss_kind = nn::loss_kind_from_string(
            get_string(t, "loss", nn::to_string(cfg.train.loss_kind), "config.train"));
        cfg.train.optimizer = train::optimizer_from_string(get_string(
            t, "optimizer", train::to_string(cfg.train.optimizer), "config.train"));
        cfg.train.split_ratio =
            get_double(t, "split_ratio", cfg.train.split_ratio, "config.train");
        cfg.train.seed = get_u64(t, "seed", cfg.seed, "config.train");
    }

    if (root.contains("augment")) {
        cfg.train.augment = parse_augment(root.at("augment"), cfg.seed, "config.augment");
    } else {
        cfg.train.augment.seed = cfg.seed;
    }

    if (root.contains("plot_style")) {
        cfg.train.plot_style = parse_plot_style(root.at("plot_style"),
                                                "config.plot_style");
    }

    if (root.contains("profiles")) {
        const json& arr = root.at("profiles");
        if (!arr.is_array()) {
            raise(Errc::config_invalid, "config.profiles must be an array");
        }
        for (size_t i = 0; i < arr.size(); ++i) {
            cfg.profiles.push_back(parse_profile(
                arr[i], cfg.seed, i, "config.profiles[" + std::to_string(i) + "]"));
        }
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path,
                                        std::optional<uint64_t> seed_override) {
    return from_json_text(read_text_file(path), seed_override);
}

void ExperimentConfig::validate() const {
    train.validate();
    for (const auto& p : profiles) {
        p.validate();
    }
    for (size_t i = 0; i < profiles.size(); ++i) {
        for (size_t j = i + 1; j < profiles.size(); ++j) {
            if (profiles[i].mac == profiles[j].mac) {
                raise(Errc::duplicate_mac,
                      "config profiles '" + profiles[i].name + "' and '" +
                          profiles[j].name + "' share a MAC");
            }
        }
    }
}

std::string ExperimentConfig::to_json_text() const {
    json root;
    root["seed"] = seed;
    if (filter) {
        root["filter"] = pcap::filter_model_name(*filter);
    }
    root["window_size"] = window_size;
    root["packets_per_device"] = packets_per_device;
    root["paths"] = {{"pcap", paths.pcap},
                     {"manifest", paths.manifest},
                     {"out_dir", paths.out_dir}};
    root["train"] = {{"batch_size", train.batch_size},
                     {"epochs", train.epochs},
                     {"learning_rate", train.learning_rate},
                     {"loss", nn::to_string(train.loss_kind)},
                     {"optimizer", train::to_string(train.optimizer)},
                     {"split_ratio", train.split_ratio},
                     {"seed", train.seed}};
    root["augment"] = {{"shear_range", train.augment.shear_range},
                       {"zoom_range", train.augment.zoom_range},
                       {"horizontal_flip", train.augment.horizontal_flip},
                       {"fill", augment::to_string(train.augment.fill)},
                       {"seed", train.augment.seed}};
    const auto& s = train.plot_style;
    root["plot_style"] = {{"width", s.width},
                          {"height", s.height},
                          {"margin", s.margin},
                          {"background", {s.background.r, s.background.g, s.background.b}},
                          {"line_color", {s.line_color.r, s.line_color.g, s.line_color.b}},
                          {"y_scale", render::to_string(s.y_scale)},
                          {"log_min", s.log_min},
                          {"log_max", s.log_max},
                          {"autoscale_pad", s.autoscale_pad}};
    if (!profiles.empty()) {
        json arr = json::array();
        for (const auto& p : profiles) {
            arr.push_back({{"name", p.name},
                           {"mac", pcap::mac_to_string(p.mac)},
                           {"intra_burst_mean", p.intra_burst_mean},
                           {"inter_burst_mean", p.inter_burst_mean},
                           {"burst_length_mean", p.burst_length_mean},
                           {"jitter_cv", p.jitter_cv},
                           {"clock_quantum", p.clock_quantum},
                           {"seed", p.seed}});
        }
        root["profiles"] = arr;
    }
    return root.dump(2) + "\n";
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += "{\"device\":\"" + e.window.device.to_string() + "\"";
        out += ",\"window_index\":" + std::to_string(e.window.window_index);
        out += ",\"values\":[";
        for (size_t i = 0; i < e.window.values.size(); ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", e.window.values[i]);
            if (i) {
                out += ",";
            }
            out += buf;
        }
        out += "],\"source\":" + json(e.source).dump();
        out += ",\"filter\":" + json(e.filter).dump();
        out += "}\n";
    }
    write_text_file(path, out);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<ManifestEntry> entries;
    size_t pos = 0;
    size_t line_no = 0;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) {
            end = text.size();
        }
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = "manifest line " + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            raise(Errc::config_invalid, where + " is not valid JSON: " + e.what());
        }
        expect_object(obj, where);
        expect_keys(obj, {"device", "window_index", "values", "source", "filter"},
                    where);
        ManifestEntry entry;
        const std::string mac_text = get_string(obj, "device", "", where);
        const auto mac = pcap::mac_from_string(mac_text);
        if (!mac) {
            raise(Errc::config_invalid,
                  where + ": device '" + mac_text + "' is not a MAC address");
        }
        entry.window.device.mac = *mac;
        entry.window.window_index =
            static_cast<uint32_t>(get_u64(obj, "window_index", 0, where));
        if (!obj.contains("values") || !obj.at("values").is_array()) {
            raise(Errc::config_invalid, where + ": values must be an array");
        }
        for (const auto& v : obj.at("values")) {
            if (!v.is_number()) {
                raise(Errc::config_invalid, where + ": values must all be numbers");
            }
            entry.window.values.push_back(v.get<double>());
        }
        entry.source = get_string(obj, "source", "", where);
        entry.filter = get_string(obj, "filter", "", where);
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<iat::IatWindow> manifest_windows(const std::vector<ManifestEntry>& entries) {
    std::vector<iat::IatWindow> windows;
    windows.reserve(entries.size());
    for (const auto& e : entries) {
        windows.push_back(e.window);
    }
    return windows;
}

} // namespace iatfp::config
