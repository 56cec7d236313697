#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iatfp/iat.hpp"
#include "iatfp/pcap.hpp"

namespace iatfp::sim {

// A two-regime renewal process: geometric burst lengths, gamma IATs inside a
// burst, one exponential gap between bursts.
struct DeviceProfile {
    std::string name;
    pcap::MacAddr mac{};
    double intra_burst_mean = 0.002;  // seconds
    double inter_burst_mean = 0.150;  // seconds
    double burst_length_mean = 20.0;  // expected packets per burst
    double jitter_cv = 0.3;           // coefficient of variation inside a burst
    double clock_quantum = 1e-6;      // timestamp granularity, seconds
    uint64_t seed = 0;

    void validate() const;

    // Long-run mean IAT: ((E[L]-1) * intra + inter) / E[L], before the
    // (sub-quantum) quantization bias.
    double analytic_mean_iat() const;

    bool operator==(const DeviceProfile&) const = default;
};

DeviceProfile default_profile_a();
DeviceProfile default_profile_b();

// n strictly positive IATs, each a positive multiple of clock_quantum;
// deterministic in (profile.seed, n), and a longer run extends a shorter one.
std::vector<double> sample_iats(const DeviceProfile& profile, size_t n);

// Classic microsecond pcap of minimal ICMP-echo frames, one stream per
// profile with timestamps at the cumulative sums of sample_iats, merged in
// global timestamp order (ties by profile order). Sub-microsecond quanta
// still advance at least one microsecond per frame so per-device timestamps
// stay strictly increasing under the microsecond stamps.
void generate_pcap(const std::vector<DeviceProfile>& profiles,
                   size_t packets_per_device, const std::string& path);

// The synthetic two-device window set: windows_a windows for profile a and
// windows_b for profile b, labeled by device MAC. Defaults mirror the
// benchmark's 636/608 class counts.
std::vector<iat::IatWindow> benchmark_dataset(const DeviceProfile& a,
                                              const DeviceProfile& b,
                                              size_t windows_a = 636,
                                              size_t windows_b = 608,
                                              size_t window_size = 100);

} // namespace iatfp::sim
