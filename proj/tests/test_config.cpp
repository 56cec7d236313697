#include <string>
#include <vector>

#include "doctest.h"
#include "iatfp/config.hpp"
#include "iatfp/rng.hpp"
#include "iatfp/util.hpp"
#include "test_support.hpp"

using namespace iatfp;
using namespace iatfp::config;

namespace {

const char* kFullDoc = R"({
  "seed": 7,
  "filter": "model3",
  "window_size": 50,
  "packets_per_device": 2000,
  "paths": {"pcap": "cap.pcap", "manifest": "w.jsonl", "out_dir": "run"},
  "train": {
    "batch_size": 8,
    "epochs": 12,
    "learning_rate": 0.002,
    "loss": "mse",
    "optimizer": "sgd",
    "split_ratio": 0.75,
    "seed": 9
  },
  "augment": {
    "shear_range": 0.1,
    "zoom_range": 0.15,
    "horizontal_flip": false,
    "fill": "nearest_edge",
    "seed": 11
  },
  "plot_style": {
    "width": 64,
    "height": 64,
    "margin": 2,
    "background": [250, 250, 250],
    "line_color": [10, 20, 30],
    "y_scale": "log_fixed",
    "log_min": 1e-05,
    "log_max": 5.0,
    "autoscale_pad": 0.1
  },
  "profiles": [
    {"name": "cam", "mac": "02:00:00:00:00:0a", "intra_burst_mean": 0.003,
     "inter_burst_mean": 0.2, "burst_length_mean": 15.0, "jitter_cv": 0.25,
     "clock_quantum": 1e-06, "seed": 123},
    {"mac": "02:00:00:00:00:0b"}
  ]
})";

std::optional<Errc> parse_code(const std::string& text) {
    return testsup::thrown_code([&] { ExperimentConfig::from_json_text(text); });
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("an empty document yields the defaults") {
    const auto cfg = ExperimentConfig::from_json_text("{}");
    CHECK(cfg.seed == 0);
    CHECK_FALSE(cfg.filter.has_value());
    CHECK(cfg.window_size == iat::kDefaultWindowSize);
    CHECK(cfg.packets_per_device == 64000);
    CHECK(cfg.paths == Paths{});
    CHECK(cfg.train.batch_size == 16);
    CHECK(cfg.train.epochs == 50);
    CHECK(cfg.train.seed == 0);
    CHECK(cfg.train.augment.seed == 0);
    CHECK(cfg.train.plot_style == render::PlotStyle{});
    CHECK(cfg.profiles.empty());
}

TEST_CASE("every field of a full document lands") {
    const auto cfg = ExperimentConfig::from_json_text(kFullDoc);
    CHECK(cfg.seed == 7);
    REQUIRE(cfg.filter.has_value());
    CHECK(*cfg.filter == pcap::FilterModel::model3);
    CHECK(cfg.window_size == 50);
    CHECK(cfg.packets_per_device == 2000);
    CHECK(cfg.paths.pcap == "cap.pcap");
    CHECK(cfg.paths.manifest == "w.jsonl");
    CHECK(cfg.paths.out_dir == "run");
    CHECK(cfg.train.batch_size == 8);
    CHECK(cfg.train.epochs == 12);
    CHECK(cfg.train.learning_rate == 0.002);
    CHECK(cfg.train.loss_kind == nn::LossKind::mse);
    CHECK(cfg.train.optimizer == train::Optimizer::sgd);
    CHECK(cfg.train.split_ratio == 0.75);
    CHECK(cfg.train.seed == 9);
    CHECK(cfg.train.augment.shear_range == 0.1);
    CHECK(cfg.train.augment.zoom_range == 0.15);
    CHECK_FALSE(cfg.train.augment.horizontal_flip);
    CHECK(cfg.train.augment.seed == 11);
    CHECK(cfg.train.plot_style.width == 64);
    CHECK(cfg.train.plot_style.margin == 2);
    CHECK(cfg.train.plot_style.background == render::Rgb{250, 250, 250});
    CHECK(cfg.train.plot_style.line_color == render::Rgb{10, 20, 30});
    CHECK(cfg.train.plot_style.y_scale == render::YScale::log_fixed);
    CHECK(cfg.train.plot_style.log_min == 1e-5);
    CHECK(cfg.train.plot_style.log_max == 5.0);
    CHECK(cfg.train.plot_style.autoscale_pad == 0.1);
    REQUIRE(cfg.profiles.size() == 2);
    CHECK(cfg.profiles[0].name == "cam");
    CHECK(cfg.profiles[0].mac == pcap::MacAddr{0x02, 0, 0, 0, 0, 0x0a});
    CHECK(cfg.profiles[0].intra_burst_mean == 0.003);
    CHECK(cfg.profiles[0].inter_burst_mean == 0.2);
    CHECK(cfg.profiles[0].burst_length_mean == 15.0);
    CHECK(cfg.profiles[0].jitter_cv == 0.25);
    CHECK(cfg.profiles[0].clock_quantum == 1e-6);
    CHECK(cfg.profiles[0].seed == 123);
    CHECK(cfg.profiles[1].name == "device-1");
}

TEST_CASE("unknown keys fail closed at every level") {
    CHECK(parse_code(R"({"seeds": 1})") == Errc::config_invalid);
    CHECK(parse_code(R"({"paths": {"pcap": "a", "output": "b"}})") ==
          Errc::config_invalid);
    CHECK(parse_code(R"({"train": {"lr": 0.1}})") == Errc::config_invalid);
    CHECK(parse_code(R"({"augment": {"shear": 0.1}})") == Errc::config_invalid);
    CHECK(parse_code(R"({"plot_style": {"w": 8}})") == Errc::config_invalid);
    CHECK(parse_code(
              R"({"profiles": [{"mac": "02:00:00:00:00:01", "burst": 3}]})") ==
          Errc::config_invalid);
}

TEST_CASE("malformed documents and values are rejected") {
    CHECK(parse_code("not json") == Errc::config_invalid);
    CHECK(parse_code("[1, 2]") == Errc::config_invalid);
    CHECK(parse_code(R"({"seed": -1})") == Errc::config_invalid);
    CHECK(parse_code(R"({"seed": "42"})") == Errc::config_invalid);
    CHECK(parse_code(R"({"window_size": 1})") == Errc::config_invalid);
    CHECK(parse_code(R"({"packets_per_device": 0})") == Errc::config_invalid);
    CHECK(parse_code(R"({"filter": "model5"})") == Errc::config_invalid);
    CHECK(parse_code(R"({"train": {"batch_size": "big"}})") == Errc::config_invalid);
    CHECK(parse_code(R"({"train": 3})") == Errc::config_invalid);
    CHECK(parse_code(R"({"plot_style": {"background": [1, 2]}})") ==
          Errc::config_invalid);
    CHECK(parse_code(R"({"plot_style": {"background": [0, 0, 256]}})") ==
          Errc::config_invalid);
    CHECK(parse_code(R"({"profiles": {"mac": "02:00:00:00:00:01"}})") ==
          Errc::config_invalid);
    // validation runs on the parsed result too
    CHECK(parse_code(R"({"train": {"batch_size": 0}})") == Errc::config_invalid);
    CHECK(parse_code(
              R"({"profiles": [{"mac": "02:00:00:00:00:01", "jitter_cv": -1.0}]})") ==
          Errc::config_invalid);
}

TEST_CASE("profiles require a parseable mac and distinct macs") {
    CHECK(parse_code(R"({"profiles": [{"name": "x"}]})") == Errc::config_invalid);
    CHECK(parse_code(R"({"profiles": [{"mac": "02-00-00"}]})") == Errc::config_invalid);
    CHECK(parse_code(R"({"profiles": [
        {"mac": "02:00:00:00:00:01"},
        {"mac": "02:00:00:00:00:01"}
    ]})") == Errc::duplicate_mac);
}

TEST_CASE("the experiment seed fans out to unseeded consumers") {
    const auto base = ExperimentConfig::from_json_text(R"({"seed": 7})");
    CHECK(base.train.seed == 7);
    CHECK(base.train.augment.seed == 7);

    const auto pinned = ExperimentConfig::from_json_text(
        R"({"seed": 7, "train": {"seed": 9}, "augment": {"seed": 11}})");
    CHECK(pinned.train.seed == 9);
    CHECK(pinned.train.augment.seed == 11);

    const auto profiles = ExperimentConfig::from_json_text(R"({"seed": 7, "profiles": [
        {"mac": "02:00:00:00:00:01"},
        {"mac": "02:00:00:00:00:02"},
        {"mac": "02:00:00:00:00:03", "seed": 55}
    ]})");
    const uint64_t tagged = hash_combine(7, 0x50524F46u);
    CHECK(profiles.profiles[0].seed == hash_combine(tagged, 0));
    CHECK(profiles.profiles[1].seed == hash_combine(tagged, 1));
    CHECK(profiles.profiles[2].seed == 55);
    CHECK(profiles.profiles[0].seed != profiles.profiles[1].seed);
}

TEST_CASE("a seed override replaces the document seed before fan-out") {
    const std::string doc = R"({"seed": 7, "train": {"seed": 9}, "profiles": [
        {"mac": "02:00:00:00:00:01"}
    ]})";
    const auto cfg = ExperimentConfig::from_json_text(doc, 99);
    CHECK(cfg.seed == 99);
    CHECK(cfg.train.seed == 9); // explicit seeds win over the override
    CHECK(cfg.train.augment.seed == 99);
    CHECK(cfg.profiles[0].seed == hash_combine(hash_combine(99, 0x50524F46u), 0));

    const auto plain = ExperimentConfig::from_json_text(R"({"seed": 7})", 99);
    CHECK(plain.train.seed == 99);
}

TEST_CASE("the canonical echo reparses to the same config") {
    for (const std::string doc : {std::string("{}"), std::string(kFullDoc)}) {
        const auto cfg = ExperimentConfig::from_json_text(doc);
        const std::string echo = cfg.to_json_text();
        const auto back = ExperimentConfig::from_json_text(echo);
        CHECK(back.to_json_text() == echo);
        CHECK(back.seed == cfg.seed);
        CHECK(back.filter == cfg.filter);
        CHECK(back.window_size == cfg.window_size);
        CHECK(back.packets_per_device == cfg.packets_per_device);
        CHECK(back.paths == cfg.paths);
        CHECK(back.train.learning_rate == cfg.train.learning_rate);
        CHECK(back.train.seed == cfg.train.seed);
        CHECK(back.train.augment == cfg.train.augment);
        CHECK(back.train.plot_style == cfg.train.plot_style);
        CHECK(back.profiles == cfg.profiles);
    }
}

TEST_CASE("load reads from disk and missing files raise io_failure") {
    testsup::TempDir tmp;
    const auto path = tmp.file("exp.json");
    write_text_file(path, R"({"seed": 3})");
    CHECK(ExperimentConfig::load(path).seed == 3);
    CHECK(ExperimentConfig::load(path, 4).seed == 4);
    CHECK(testsup::thrown_code([&] { ExperimentConfig::load(tmp.file("nope.json")); }) ==
          Errc::io_failure);
}

TEST_CASE("manifest lines survive a write and read unchanged") {
    testsup::TempDir tmp;
    const auto path = tmp.file("windows.jsonl");

    std::vector<ManifestEntry> entries;
    ManifestEntry a;
    a.window = testsup::make_window(0x0a, {0.1, 1.0 / 3.0, 1.2345678901234567e-9}, 4);
    a.source = "lab \"run\" 1"; // quotes must be escaped
    a.filter = "model2";
    ManifestEntry b;
    b.window = testsup::make_window(0x0b, {0.19255699999999998}, 0);
    entries.push_back(a);
    entries.push_back(b);

    write_manifest(path, entries);
    const auto back = read_manifest(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].window.device == entries[0].window.device);
    CHECK(back[0].window.window_index == 4);
    CHECK(back[0].window.values == entries[0].window.values);
    CHECK(back[0].source == entries[0].source);
    CHECK(back[0].filter == "model2");
    CHECK(back[1].window.values == entries[1].window.values);
    CHECK(back[1].source.empty());

    SUBCASE("the key order is fixed") {
        const auto lines = testsup::read_lines(path);
        REQUIRE(lines.size() == 2);
        const std::string& line = lines[0];
        CHECK(line.starts_with(R"({"device":"02:00:00:00:00:0a")"));
        const auto device = line.find("\"device\"");
        const auto index = line.find("\"window_index\"");
        const auto values = line.find("\"values\"");
        const auto source = line.find("\"source\"");
        const auto filter = line.find("\"filter\"");
        CHECK(device < index);
        CHECK(index < values);
        CHECK(values < source);
        CHECK(source < filter);
    }

    SUBCASE("windows are extracted in order") {
        const auto ws = manifest_windows(back);
        REQUIRE(ws.size() == 2);
        CHECK(ws[0].device.mac[5] == 0x0a);
        CHECK(ws[1].device.mac[5] == 0x0b);
    }

    SUBCASE("blank lines are skipped") {
        write_text_file(path, read_text_file(path) + "\n   \n");
        CHECK(read_manifest(path).size() == 2);
    }
}

TEST_CASE("manifest reading fails closed") {
    testsup::TempDir tmp;
    const auto path = tmp.file("bad.jsonl");
    const auto code = [&](const std::string& line) {
        write_text_file(path, line + "\n");
        return testsup::thrown_code([&] { read_manifest(path); });
    };
    const std::string good =
        R"({"device":"02:00:00:00:00:0a","window_index":0,"values":[0.5],"source":"","filter":""})";
    write_text_file(path, good + "\n");
    CHECK(read_manifest(path).size() == 1);

    CHECK(code("{ not json") == Errc::config_invalid);
    CHECK(code(R"([1,2])") == Errc::config_invalid);
    CHECK(code(
              R"({"device":"02:00:00:00:00:0a","window_index":0,"values":[0.5],"source":"","filter":"","extra":1})") ==
          Errc::config_invalid);
    CHECK(code(R"({"device":"banana","window_index":0,"values":[0.5]})") ==
          Errc::config_invalid);
    CHECK(code(R"({"device":"02:00:00:00:00:0a","values":0.5})") ==
          Errc::config_invalid);
    CHECK(code(R"({"device":"02:00:00:00:00:0a","values":[0.5,"x"]})") ==
          Errc::config_invalid);
    CHECK(testsup::thrown_code([&] { read_manifest(tmp.file("absent.jsonl")); }) ==
          Errc::io_failure);
}

} // TEST_SUITE
