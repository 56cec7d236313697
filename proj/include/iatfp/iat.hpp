#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "iatfp/pcap.hpp"

namespace iatfp::iat {

// A device is its source MAC; ordering is byte-wise so every map iteration
// is deterministic.
struct DeviceKey {
    pcap::MacAddr mac{};

    auto operator<=>(const DeviceKey&) const = default;
    std::string to_string() const { return pcap::mac_to_string(mac); }
};

struct IatSeries {
    DeviceKey device;
    std::vector<double> iats;
    uint64_t dropped_nonpositive = 0;
};

struct IatWindow {
    DeviceKey device;
    std::vector<double> values;
    uint32_t window_index = 0;
};

inline constexpr size_t kDefaultWindowSize = 100;

// Per-source-MAC arrival timestamps in file order.
std::map<DeviceKey, std::vector<double>> device_streams(
    const std::vector<pcap::PacketRecord>& records);

// Consecutive differences; non-positive ones are dropped and counted.
IatSeries compute_iats(const DeviceKey& device, const std::vector<double>& timestamps);

// Fixed-size chunks; stride 0 means stride = w (non-overlapping). The
// trailing partial chunk is discarded.
std::vector<IatWindow> window_series(const IatSeries& series,
                                     size_t w = kDefaultWindowSize, size_t stride = 0);

// records -> streams -> IATs -> windows, per device in key order
std::vector<IatWindow> windows_from_records(const std::vector<pcap::PacketRecord>& records,
                                            size_t w = kDefaultWindowSize,
                                            size_t stride = 0);

struct DatasetSplit {
    std::vector<IatWindow> train;
    std::vector<IatWindow> validation;
    uint64_t seed = 0;
    double ratio = 0.8;
};

// round-half-up(ratio * n)
size_t train_count(double ratio, size_t n);

// Stratified per-device shuffle-and-cut; deterministic in (windows, ratio, seed).
DatasetSplit split_dataset(const std::vector<IatWindow>& windows, double ratio,
                           uint64_t seed);

} // namespace iatfp::iat
