#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iatfp/errors.hpp"

namespace iatfp::pcap {

using MacAddr = std::array<uint8_t, 6>;
using Ipv4Addr = std::array<uint8_t, 4>;

std::string mac_to_string(const MacAddr& mac);
std::optional<MacAddr> mac_from_string(std::string_view text);
std::string ipv4_to_string(const Ipv4Addr& ip);

inline constexpr size_t kFileHeaderSize = 24;
inline constexpr size_t kRecordHeaderSize = 16;
inline constexpr uint32_t kMagicMicro = 0xa1b2c3d4u;
inline constexpr uint32_t kMagicNano = 0xa1b23c4du;
inline constexpr uint32_t kMagicPcapng = 0x0a0d0d0au;
inline constexpr uint32_t kLinktypeEthernet = 1;

enum class ByteOrder { same, swapped };
enum class TsResolution { microsecond, nanosecond };

struct PcapFileHeader {
    ByteOrder byte_order = ByteOrder::same;
    TsResolution ts_resolution = TsResolution::microsecond;
    uint16_t version_major = 2;
    uint16_t version_minor = 4;
    int32_t thiszone = 0;
    uint32_t sigfigs = 0;
    uint32_t snaplen = 0;
    uint32_t linktype = kLinktypeEthernet;
};

enum class ProtocolClass : uint8_t { arp, icmp, tcp, udp, other_ip, non_ip };
inline constexpr size_t kProtocolClassCount = 6;

const char* protocol_class_name(ProtocolClass cls) noexcept;

struct PacketRecord {
    double timestamp = 0.0;     // seconds, assembled from ts_sec + ts_frac
    uint32_t ts_sec = 0;        // raw record-header fields, kept for lossless
    uint32_t ts_frac = 0;       // re-serialization
    uint32_t captured_len = 0;
    uint32_t original_len = 0;
    MacAddr src_mac{};
    MacAddr dst_mac{};
    ProtocolClass protocol_class = ProtocolClass::non_ip;
    std::optional<Ipv4Addr> src_ip;
    std::optional<Ipv4Addr> dst_ip;
    std::optional<uint16_t> src_port;
    std::optional<uint16_t> dst_port;
    std::vector<uint8_t> frame; // captured bytes
};

struct DissectStats {
    uint64_t total = 0;
    uint64_t dissected = 0;
    uint64_t skipped = 0;
    std::array<uint64_t, kProtocolClassCount> by_class{};

    std::string summary_line() const;
};

enum class FilterModel { model2, model3, model4, all };

std::optional<FilterModel> filter_model_from_string(std::string_view text);
const char* filter_model_name(FilterModel model) noexcept;

// 24-byte global header. Throws on unknown magic (pcapng gets its own error)
// and on non-Ethernet link types.
PcapFileHeader parse_file_header(std::span<const uint8_t> bytes);

struct Dissection {
    ProtocolClass protocol_class = ProtocolClass::non_ip;
    MacAddr src_mac{};
    MacAddr dst_mac{};
    std::optional<Ipv4Addr> src_ip;
    std::optional<Ipv4Addr> dst_ip;
    std::optional<uint16_t> src_port;
    std::optional<uint16_t> dst_port;
};

// Ethernet dissection of one captured frame. Throws frame_too_short when the
// bytes end before the fields the classification itself requires.
Dissection classify_protocol(std::span<const uint8_t> frame);

struct ReadResult {
    std::vector<PacketRecord> records;
    DissectStats stats;
    // set when the stream ends mid-record; the records read so far are kept
    std::optional<Errc> error;
    std::string error_detail;
};

// Body = everything after the global header. File order is preserved even
// when timestamps regress; undissectable frames are counted, not fatal.
ReadResult read_records(std::span<const uint8_t> body, const PcapFileHeader& header);

bool filter_admits(FilterModel model, ProtocolClass cls) noexcept;
std::vector<PacketRecord> apply_filter(const std::vector<PacketRecord>& records,
                                       FilterModel model);

// Byte-exact re-serialization of the record stream in the header's byte order.
std::vector<uint8_t> serialize_records(const std::vector<PacketRecord>& records,
                                       const PcapFileHeader& header);
std::vector<uint8_t> serialize_file_header(const PcapFileHeader& header);

struct PcapFile {
    PcapFileHeader header;
    ReadResult body;
};

PcapFile read_file(const std::string& path);
void write_file(const std::string& path, const PcapFileHeader& header,
                const std::vector<PacketRecord>& records);

} // namespace iatfp::pcap
