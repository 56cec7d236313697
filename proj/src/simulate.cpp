#include "iatfp/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "iatfp/errors.hpp"
#include "iatfp/rng.hpp"
#include "iatfp/util.hpp"

namespace iatfp::sim {

void DeviceProfile::validate() const {
    if (!(intra_burst_mean > 0.0) || !(inter_burst_mean > 0.0) ||
        !(clock_quantum > 0.0)) {
        raise(Errc::config_invalid,
              "profile '" + name + "': time parameters must be positive");
    }
    if (!(inter_burst_mean > intra_burst_mean)) {
        raise(Errc::config_invalid,
              "profile '" + name + "': inter_burst_mean must exceed intra_burst_mean");
    }
    if (!(burst_length_mean >= 1.0)) {
        raise(Errc::config_invalid,
              "profile '" + name + "': burst_length_mean must be at least 1");
    }
    if (!(jitter_cv >= 0.0)) {
        raise(Errc::config_invalid, "profile '" + name + "': jitter_cv must be >= 0");
    }
}

double DeviceProfile::analytic_mean_iat() const {
    const double el = burst_length_mean;
    return ((el - 1.0) * intra_burst_mean + inter_burst_mean) / el;
}

DeviceProfile default_profile_a() {
    DeviceProfile p;
    p.name = "device-a";
    p.mac = {0x02, 0x00, 0x00, 0x00, 0x00, 0x0a};
    p.intra_burst_mean = 0.002;
    p.inter_burst_mean = 0.150;
    p.burst_length_mean = 20.0;
    p.jitter_cv = 0.3;
    p.clock_quantum = 1e-6;
    p.seed = 101;
    return p;
}

DeviceProfile default_profile_b() {
    DeviceProfile p;
    p.name = "device-b";
    p.mac = {0x02, 0x00, 0x00, 0x00, 0x00, 0x0b};
    p.intra_burst_mean = 0.003;
    p.inter_burst_mean = 0.300;
    p.burst_length_mean = 12.0;
    p.jitter_cv = 0.5;
    p.clock_quantum = 1e-6;
    p.seed = 202;
    return p;
}

namespace {

double quantize(double seconds, double quantum) {
    const int64_t ticks = std::max<int64_t>(1, round_half_up(seconds / quantum));
    return static_cast<double>(ticks) * quantum;
}

} // namespace

std::vector<double> sample_iats(const DeviceProfile& profile, size_t n) {
    profile.validate();
    if (n == 0) {
        return {};
    }
    Rng rng(profile.seed);
    const double cv2 = profile.jitter_cv * profile.jitter_cv;

    std::vector<double> out;
    out.reserve(n);
    while (out.size() < n) {
        const uint64_t burst_len = rng.geometric_count(profile.burst_length_mean);
        for (uint64_t i = 1; i < burst_len && out.size() < n; ++i) {
            const double iat = cv2 > 0.0
                                   ? rng.gamma(1.0 / cv2, profile.intra_burst_mean * cv2)
                                   : profile.intra_burst_mean;
            out.push_back(quantize(iat, profile.clock_quantum));
        }
        if (out.size() < n) {
            out.push_back(quantize(rng.exponential(profile.inter_burst_mean),
                                   profile.clock_quantum));
        }
    }
    return out;
}

namespace {

// RFC 1071 ones-complement checksum over big-endian 16-bit words.
uint16_t internet_checksum(std::span<const uint8_t> bytes) {
    uint32_t sum = 0;
    for (size_t i = 0; i + 1 < bytes.size(); i += 2) {
        sum += static_cast<uint32_t>(bytes[i]) << 8 | bytes[i + 1];
    }
    if (bytes.size() % 2 == 1) {
        sum += static_cast<uint32_t>(bytes.back()) << 8;
    }
    while (sum >> 16) {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    return static_cast<uint16_t>(~sum);
}

// 50-byte ICMP echo request: Ethernet + IPv4 + ICMP header + 8 payload bytes.
std::vector<uint8_t> make_icmp_frame(const pcap::MacAddr& src_mac, size_t device_index,
                                     uint32_t sequence) {
    std::vector<uint8_t> frame(50, 0);
    // Ethernet
    const pcap::MacAddr dst_mac = {0x02, 0x00, 0x00, 0x00, 0x00, 0xfe};
    std::copy(dst_mac.begin(), dst_mac.end(), frame.begin());
    std::copy(src_mac.begin(), src_mac.end(), frame.begin() + 6);
    frame[12] = 0x08;
    frame[13] = 0x00;
    // IPv4, 20-byte header, total length 36
    uint8_t* ip = frame.data() + 14;
    ip[0] = 0x45;
    ip[2] = 0;
    ip[3] = 36;
    ip[4] = static_cast<uint8_t>(sequence >> 8);
    ip[5] = static_cast<uint8_t>(sequence);
    ip[8] = 64; // ttl
    ip[9] = 1;  // icmp
    ip[12] = 10;
    ip[13] = 0;
    ip[14] = static_cast<uint8_t>(device_index + 1);
    ip[15] = 2;
    ip[16] = 10;
    ip[17] = 0;
    ip[18] = 0;
    ip[19] = 1;
    const uint16_t ipsum = internet_checksum({ip, 20});
    ip[10] = static_cast<uint8_t>(ipsum >> 8);
    ip[11] = static_cast<uint8_t>(ipsum);
    // ICMP echo request, 8 header + 8 payload
    uint8_t* icmp = frame.data() + 34;
    icmp[0] = 8;
    icmp[4] = static_cast<uint8_t>((device_index + 1) >> 8);
    icmp[5] = static_cast<uint8_t>(device_index + 1);
    icmp[6] = static_cast<uint8_t>(sequence >> 8);
    icmp[7] = static_cast<uint8_t>(sequence);
    for (int b = 0; b < 8; ++b) {
        icmp[8 + b] = static_cast<uint8_t>('a' + b);
    }
    const uint16_t icmpsum = internet_checksum({icmp, 16});
    icmp[2] = static_cast<uint8_t>(icmpsum >> 8);
    icmp[3] = static_cast<uint8_t>(icmpsum);
    return frame;
}

struct ScheduledFrame {
    uint64_t t_us = 0;
    size_t device = 0;
    uint32_t sequence = 0;
};

} // namespace

void generate_pcap(const std::vector<DeviceProfile>& profiles,
                   size_t packets_per_device, const std::string& path) {
    if (profiles.empty() || packets_per_device == 0) {
        raise(Errc::config_invalid,
              "need at least one profile and one packet per device");
    }
    for (size_t i = 0; i < profiles.size(); ++i) {
        profiles[i].validate();
        for (size_t j = i + 1; j < profiles.size(); ++j) {
            if (profiles[i].mac == profiles[j].mac) {
                raise(Errc::duplicate_mac,
                      "profiles '" + profiles[i].name + "' and '" + profiles[j].name +
                          "' share MAC " + pcap::mac_to_string(profiles[i].mac));
            }
        }
    }

    std::vector<ScheduledFrame> schedule;
    schedule.reserve(profiles.size() * packets_per_device);
    for (size_t d = 0; d < profiles.size(); ++d) {
        const auto iats = sample_iats(profiles[d], packets_per_device);
        uint64_t t_us = 0;
        for (size_t k = 0; k < iats.size(); ++k) {
            t_us += static_cast<uint64_t>(
                std::max<int64_t>(1, round_half_up(iats[k] * 1e6)));
            schedule.push_back({t_us, d, static_cast<uint32_t>(k)});
        }
    }
    std::stable_sort(schedule.begin(), schedule.end(),
                     [](const ScheduledFrame& a, const ScheduledFrame& b) {
                         if (a.t_us != b.t_us) {
                             return a.t_us < b.t_us;
                         }
                         return a.device < b.device;
                     });

    std::vector<pcap::PacketRecord> records;
    records.reserve(schedule.size());
    for (const auto& ev : schedule) {
        pcap::PacketRecord rec;
        rec.ts_sec = static_cast<uint32_t>(ev.t_us / 1000000);
        rec.ts_frac = static_cast<uint32_t>(ev.t_us % 1000000);
        rec.timestamp = static_cast<double>(rec.ts_sec) + 1e-6 * rec.ts_frac;
        rec.frame = make_icmp_frame(profiles[ev.device].mac, ev.device, ev.sequence);
        rec.captured_len = static_cast<uint32_t>(rec.frame.size());
        rec.original_len = rec.captured_len;
        rec.src_mac = profiles[ev.device].mac;
        rec.protocol_class = pcap::ProtocolClass::icmp;
        records.push_back(std::move(rec));
    }

    pcap::PcapFileHeader header;
    header.snaplen = 65535;
    pcap::write_file(path, header, records);
}

std::vector<iat::IatWindow> benchmark_dataset(const DeviceProfile& a,
                                              const DeviceProfile& b, size_t windows_a,
                                              size_t windows_b, size_t window_size) {
    if (windows_a == 0 || windows_b == 0) {
        raise(Errc::config_invalid, "need at least one window per device");
    }
    if (a.mac == b.mac) {
        raise(Errc::duplicate_mac, "benchmark profiles share a MAC");
    }
    std::vector<iat::IatWindow> all;
    all.reserve(windows_a + windows_b);
    const DeviceProfile* profiles[2] = {&a, &b};
    const size_t counts[2] = {windows_a, windows_b};
    for (int d = 0; d < 2; ++d) {
        iat::IatSeries series;
        series.device = iat::DeviceKey{profiles[d]->mac};
        series.iats = sample_iats(*profiles[d], counts[d] * window_size);
        auto windows = iat::window_series(series, window_size);
        all.insert(all.end(), std::make_move_iterator(windows.begin()),
                   std::make_move_iterator(windows.end()));
    }
    return all;
}

} // namespace iatfp::sim
