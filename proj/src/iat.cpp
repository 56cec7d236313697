#include "iatfp/iat.hpp"

#include <cmath>

#include "iatfp/errors.hpp"
#include "iatfp/rng.hpp"
#include "iatfp/util.hpp"

namespace iatfp::iat {

std::map<DeviceKey, std::vector<double>> device_streams(
    const std::vector<pcap::PacketRecord>& records) {
    std::map<DeviceKey, std::vector<double>> streams;
    for (const auto& rec : records) {
        streams[DeviceKey{rec.src_mac}].push_back(rec.timestamp);
    }
    return streams;
}

IatSeries compute_iats(const DeviceKey& device, const std::vector<double>& timestamps) {
    IatSeries series;
    series.device = device;
    if (timestamps.size() < 2) {
        return series;
    }
    series.iats.reserve(timestamps.size() - 1);
    for (size_t i = 1; i < timestamps.size(); ++i) {
        const double delta = timestamps[i] - timestamps[i - 1];
        if (delta > 0.0) {
            series.iats.push_back(delta);
        } else {
            series.dropped_nonpositive += 1;
        }
    }
    return series;
}

std::vector<IatWindow> window_series(const IatSeries& series, size_t w, size_t stride) {
    if (w < 2) {
        raise(Errc::config_invalid, "window size must be >= 2, got " + std::to_string(w));
    }
    if (stride == 0) {
        stride = w;
    }
    std::vector<IatWindow> windows;
    uint32_t index = 0;
    for (size_t start = 0; start + w <= series.iats.size(); start += stride) {
        IatWindow win;
        win.device = series.device;
        win.window_index = index++;
        win.values.assign(series.iats.begin() + static_cast<ptrdiff_t>(start),
                          series.iats.begin() + static_cast<ptrdiff_t>(start + w));
        windows.push_back(std::move(win));
    }
    return windows;
}

std::vector<IatWindow> windows_from_records(const std::vector<pcap::PacketRecord>& records,
                                            size_t w, size_t stride) {
    std::vector<IatWindow> all;
    for (const auto& [device, timestamps] : device_streams(records)) {
        auto windows = window_series(compute_iats(device, timestamps), w, stride);
        all.insert(all.end(), std::make_move_iterator(windows.begin()),
                   std::make_move_iterator(windows.end()));
    }
    return all;
}

size_t train_count(double ratio, size_t n) {
    return static_cast<size_t>(round_half_up(ratio * static_cast<double>(n)));
}

DatasetSplit split_dataset(const std::vector<IatWindow>& windows, double ratio,
                           uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        raise(Errc::config_invalid, "split ratio must be in (0,1)");
    }
    DatasetSplit split;
    split.seed = seed;
    split.ratio = ratio;

    std::map<DeviceKey, std::vector<const IatWindow*>> per_device;
    for (const auto& win : windows) {
        per_device[win.device].push_back(&win);
    }

    for (auto& [device, group] : per_device) {
        Rng rng(hash_combine(hash_combine(seed, stream::split),
                             hash_bytes(0, std::span(device.mac))));
        // Fisher-Yates with our own bounded draw, stable across platforms
        for (size_t i = group.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(rng.bounded(i));
            std::swap(group[i - 1], group[j]);
        }
        const size_t n_train = train_count(ratio, group.size());
        for (size_t i = 0; i < group.size(); ++i) {
            (i < n_train ? split.train : split.validation).push_back(*group[i]);
        }
    }
    return split;
}

} // namespace iatfp::iat
