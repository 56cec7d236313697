#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iatfp/iat.hpp"
#include "iatfp/pcap.hpp"
#include "iatfp/simulate.hpp"
#include "iatfp/train.hpp"

namespace iatfp::config {

struct Paths {
    std::string pcap;
    std::string manifest;
    std::string out_dir;

    bool operator==(const Paths&) const = default;
};

// One JSON document drives every subcommand. Parsing is fail-closed: any
// key outside the schema is an error, at every nesting level. A seed given
// on the command line replaces the config seed before derived seeds
// (train, augment, unseeded profiles) are resolved.
struct ExperimentConfig {
    uint64_t seed = 0;
    std::optional<pcap::FilterModel> filter; // deliberately no default
    size_t window_size = iat::kDefaultWindowSize;
    size_t packets_per_device = 64000;
    Paths paths;
    train::TrainConfig train;
    std::vector<sim::DeviceProfile> profiles;

    static ExperimentConfig from_json_text(const std::string& text,
                                           std::optional<uint64_t> seed_override = {});
    static ExperimentConfig load(const std::string& path,
                                 std::optional<uint64_t> seed_override = {});

    // Canonical echo with every default materialized; re-parsing it yields
    // an equal config.
    std::string to_json_text() const;

    void validate() const;
};

struct ManifestEntry {
    iat::IatWindow window;
    std::string source;
    std::string filter;
};

// JSON-lines, one window per line, fixed key order, values printed with 17
// significant digits so doubles survive the round trip.
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

std::vector<iat::IatWindow> manifest_windows(const std::vector<ManifestEntry>& entries);

} // namespace iatfp::config
