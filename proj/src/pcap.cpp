#include "iatfp/pcap.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>

#include "iatfp/util.hpp"

namespace iatfp::pcap {

namespace {

uint32_t bswap(uint32_t v) noexcept { return __builtin_bswap32(v); }
uint16_t bswap(uint16_t v) noexcept { return __builtin_bswap16(v); }

uint32_t load_u32(const uint8_t* p, bool swap) noexcept {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return swap ? bswap(v) : v;
}

uint16_t load_u16(const uint8_t* p, bool swap) noexcept {
    uint16_t v;
    std::memcpy(&v, p, 2);
    return swap ? bswap(v) : v;
}

uint16_t load_be16(const uint8_t* p) noexcept {
    return static_cast<uint16_t>((uint16_t(p[0]) << 8) | p[1]);
}

void store_u32(std::vector<uint8_t>& out, uint32_t v, bool swap) {
    if (swap) {
        v = bswap(v);
    }
    const auto* b = reinterpret_cast<const uint8_t*>(&v);
    out.insert(out.end(), b, b + 4);
}

void store_u16(std::vector<uint8_t>& out, uint16_t v, bool swap) {
    if (swap) {
        v = bswap(v);
    }
    const auto* b = reinterpret_cast<const uint8_t*>(&v);
    out.insert(out.end(), b, b + 2);
}

constexpr uint16_t kEthertypeIpv4 = 0x0800;
constexpr uint16_t kEthertypeArp = 0x0806;
constexpr uint16_t kEthertypeVlan = 0x8100;

} // namespace

std::string mac_to_string(const MacAddr& mac) {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", mac[0], mac[1], mac[2],
                  mac[3], mac[4], mac[5]);
    return buf;
}

std::optional<MacAddr> mac_from_string(std::string_view text) {
    MacAddr mac{};
    if (text.size() != 17) {
        return std::nullopt;
    }
    for (int i = 0; i < 6; ++i) {
        const size_t off = static_cast<size_t>(i) * 3;
        if (i > 0 && text[off - 1] != ':') {
            return std::nullopt;
        }
        auto nibble = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            return -1;
        };
        const int hi = nibble(text[off]);
        const int lo = nibble(text[off + 1]);
        if (hi < 0 || lo < 0) {
            return std::nullopt;
        }
        mac[static_cast<size_t>(i)] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return mac;
}

std::string ipv4_to_string(const Ipv4Addr& ip) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", ip[0], ip[1], ip[2], ip[3]);
    return buf;
}

const char* protocol_class_name(ProtocolClass cls) noexcept {
    switch (cls) {
    case ProtocolClass::arp: return "arp";
    case ProtocolClass::icmp: return "icmp";
    case ProtocolClass::tcp: return "tcp";
    case ProtocolClass::udp: return "udp";
    case ProtocolClass::other_ip: return "other_ip";
    case ProtocolClass::non_ip: return "non_ip";
    }
    return "?";
}

std::string DissectStats::summary_line() const {
    std::ostringstream os;
    os << "packets total=" << total << " dissected=" << dissected << " skipped=" << skipped;
    for (size_t i = 0; i < kProtocolClassCount; ++i) {
        os << ' ' << protocol_class_name(static_cast<ProtocolClass>(i)) << '='
           << by_class[i];
    }
    return os.str();
}

std::optional<FilterModel> filter_model_from_string(std::string_view text) {
    if (text == "model2") return FilterModel::model2;
    if (text == "model3") return FilterModel::model3;
    if (text == "model4") return FilterModel::model4;
    if (text == "all") return FilterModel::all;
    return std::nullopt;
}

const char* filter_model_name(FilterModel model) noexcept {
    switch (model) {
    case FilterModel::model2: return "model2";
    case FilterModel::model3: return "model3";
    case FilterModel::model4: return "model4";
    case FilterModel::all: return "all";
    }
    return "?";
}

PcapFileHeader parse_file_header(std::span<const uint8_t> bytes) {
    if (bytes.size() != kFileHeaderSize) {
        raise(Errc::truncated_packet_header,
              "file header requires 24 bytes, got " + std::to_string(bytes.size()));
    }
    uint32_t magic;
    std::memcpy(&magic, bytes.data(), 4);

    PcapFileHeader h;
    bool swap = false;
    if (magic == kMagicMicro) {
        h.byte_order = ByteOrder::same;
        h.ts_resolution = TsResolution::microsecond;
    } else if (magic == kMagicNano) {
        h.byte_order = ByteOrder::same;
        h.ts_resolution = TsResolution::nanosecond;
    } else if (magic == bswap(kMagicMicro)) {
        h.byte_order = ByteOrder::swapped;
        h.ts_resolution = TsResolution::microsecond;
        swap = true;
    } else if (magic == bswap(kMagicNano)) {
        h.byte_order = ByteOrder::swapped;
        h.ts_resolution = TsResolution::nanosecond;
        swap = true;
    } else if (magic == kMagicPcapng || magic == bswap(kMagicPcapng)) {
        raise(Errc::pcapng_unsupported,
              "input is a pcapng capture; only classic pcap is supported");
    } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "0x%08x", magic);
        raise(Errc::unknown_magic, std::string("not a pcap file (magic ") + buf + ")");
    }

    h.version_major = load_u16(bytes.data() + 4, swap);
    h.version_minor = load_u16(bytes.data() + 6, swap);
    h.thiszone = static_cast<int32_t>(load_u32(bytes.data() + 8, swap));
    h.sigfigs = load_u32(bytes.data() + 12, swap);
    h.snaplen = load_u32(bytes.data() + 16, swap);
    h.linktype = load_u32(bytes.data() + 20, swap);
    if (h.linktype != kLinktypeEthernet) {
        raise(Errc::unsupported_linktype,
              "linktype " + std::to_string(h.linktype) + " (only Ethernet = 1 is supported)");
    }
    return h;
}

Dissection classify_protocol(std::span<const uint8_t> frame) {
    if (frame.size() < 14) {
        raise(Errc::frame_too_short,
              "Ethernet header needs 14 bytes, frame has " + std::to_string(frame.size()));
    }
    Dissection d;
    std::memcpy(d.dst_mac.data(), frame.data(), 6);
    std::memcpy(d.src_mac.data(), frame.data() + 6, 6);
    uint16_t ethertype = load_be16(frame.data() + 12);
    size_t off = 14;

    // one level of VLAN unwrap; nested tags classify as non-IP
    if (ethertype == kEthertypeVlan) {
        if (frame.size() < off + 4) {
            raise(Errc::frame_too_short, "VLAN tag truncated");
        }
        ethertype = load_be16(frame.data() + off + 2);
        off += 4;
        if (ethertype == kEthertypeVlan) {
            d.protocol_class = ProtocolClass::non_ip;
            return d;
        }
    }

    if (ethertype == kEthertypeArp) {
        d.protocol_class = ProtocolClass::arp;
        // sender/target protocol addresses when the ARP body is captured
        if (frame.size() >= off + 28 && frame[off + 4] == 6 && frame[off + 5] == 4) {
            Ipv4Addr sender{}, target{};
            std::memcpy(sender.data(), frame.data() + off + 14, 4);
            std::memcpy(target.data(), frame.data() + off + 24, 4);
            d.src_ip = sender;
            d.dst_ip = target;
        }
        return d;
    }

    if (ethertype != kEthertypeIpv4) {
        d.protocol_class = ProtocolClass::non_ip;
        return d;
    }

    if (frame.size() < off + 20) {
        raise(Errc::frame_too_short, "IPv4 header truncated");
    }
    const uint8_t* ip = frame.data() + off;
    const uint8_t version = ip[0] >> 4;
    const size_t ihl = static_cast<size_t>(ip[0] & 0x0f) * 4;
    if (version != 4 || ihl < 20) {
        raise(Errc::frame_too_short, "malformed IPv4 header");
    }
    if (frame.size() < off + ihl) {
        raise(Errc::frame_too_short, "IPv4 options truncated");
    }
    const uint8_t proto = ip[9];
    Ipv4Addr src{}, dst{};
    std::memcpy(src.data(), ip + 12, 4);
    std::memcpy(dst.data(), ip + 16, 4);
    d.src_ip = src;
    d.dst_ip = dst;

    switch (proto) {
    case 1:
        d.protocol_class = ProtocolClass::icmp;
        break;
    case 6:
        d.protocol_class = ProtocolClass::tcp;
        break;
    case 17:
        d.protocol_class = ProtocolClass::udp;
        break;
    default:
        d.protocol_class = ProtocolClass::other_ip;
        break;
    }

    if (d.protocol_class == ProtocolClass::tcp || d.protocol_class == ProtocolClass::udp) {
        const size_t transport = off + ihl;
        if (frame.size() >= transport + 4) {
            d.src_port = load_be16(frame.data() + transport);
            d.dst_port = load_be16(frame.data() + transport + 2);
        }
    }
    return d;
}

ReadResult read_records(std::span<const uint8_t> body, const PcapFileHeader& header) {
    ReadResult result;
    const bool swap = header.byte_order == ByteOrder::swapped;
    const double frac_unit =
        header.ts_resolution == TsResolution::microsecond ? 1e-6 : 1e-9;

    size_t pos = 0;
    while (pos < body.size()) {
        if (body.size() - pos < kRecordHeaderSize) {
            result.error = Errc::truncated_packet_header;
            result.error_detail = std::to_string(body.size() - pos) +
                                  " trailing bytes, record header needs 16";
            break;
        }
        const uint8_t* rh = body.data() + pos;
        PacketRecord rec;
        rec.ts_sec = load_u32(rh, swap);
        rec.ts_frac = load_u32(rh + 4, swap);
        rec.captured_len = load_u32(rh + 8, swap);
        rec.original_len = load_u32(rh + 12, swap);
        pos += kRecordHeaderSize;

        if (body.size() - pos < rec.captured_len) {
            result.error = Errc::truncated_payload;
            result.error_detail = "captured_len " + std::to_string(rec.captured_len) +
                                  " exceeds remaining " + std::to_string(body.size() - pos) +
                                  " bytes";
            break;
        }
        rec.timestamp = double(rec.ts_sec) + double(rec.ts_frac) * frac_unit;
        rec.frame.assign(body.begin() + static_cast<ptrdiff_t>(pos),
                         body.begin() + static_cast<ptrdiff_t>(pos + rec.captured_len));
        pos += rec.captured_len;
        result.stats.total += 1;

        if (rec.captured_len > header.snaplen) {
            result.stats.skipped += 1;
            continue;
        }
        try {
            Dissection d = classify_protocol(rec.frame);
            rec.src_mac = d.src_mac;
            rec.dst_mac = d.dst_mac;
            rec.protocol_class = d.protocol_class;
            rec.src_ip = d.src_ip;
            rec.dst_ip = d.dst_ip;
            rec.src_port = d.src_port;
            rec.dst_port = d.dst_port;
        } catch (const Error&) {
            result.stats.skipped += 1;
            continue;
        }
        result.stats.dissected += 1;
        result.stats.by_class[static_cast<size_t>(rec.protocol_class)] += 1;
        result.records.push_back(std::move(rec));
    }
    return result;
}

bool filter_admits(FilterModel model, ProtocolClass cls) noexcept {
    switch (model) {
    case FilterModel::model2:
        return cls == ProtocolClass::icmp;
    case FilterModel::model3:
        return cls == ProtocolClass::udp || cls == ProtocolClass::arp ||
               cls == ProtocolClass::icmp;
    case FilterModel::model4:
        return cls == ProtocolClass::tcp || cls == ProtocolClass::other_ip;
    case FilterModel::all:
        return true;
    }
    return false;
}

std::vector<PacketRecord> apply_filter(const std::vector<PacketRecord>& records,
                                       FilterModel model) {
    std::vector<PacketRecord> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        if (filter_admits(model, rec.protocol_class)) {
            out.push_back(rec);
        }
    }
    return out;
}

std::vector<uint8_t> serialize_records(const std::vector<PacketRecord>& records,
                                       const PcapFileHeader& header) {
    const bool swap = header.byte_order == ByteOrder::swapped;
    std::vector<uint8_t> out;
    size_t total = 0;
    for (const auto& rec : records) {
        total += kRecordHeaderSize + rec.frame.size();
    }
    out.reserve(total);
    for (const auto& rec : records) {
        store_u32(out, rec.ts_sec, swap);
        store_u32(out, rec.ts_frac, swap);
        store_u32(out, static_cast<uint32_t>(rec.frame.size()), swap);
        store_u32(out, rec.original_len, swap);
        out.insert(out.end(), rec.frame.begin(), rec.frame.end());
    }
    return out;
}

std::vector<uint8_t> serialize_file_header(const PcapFileHeader& header) {
    const bool swap = header.byte_order == ByteOrder::swapped;
    std::vector<uint8_t> out;
    out.reserve(kFileHeaderSize);
    const uint32_t magic =
        header.ts_resolution == TsResolution::microsecond ? kMagicMicro : kMagicNano;
    store_u32(out, magic, swap);
    store_u16(out, header.version_major, swap);
    store_u16(out, header.version_minor, swap);
    store_u32(out, static_cast<uint32_t>(header.thiszone), swap);
    store_u32(out, header.sigfigs, swap);
    store_u32(out, header.snaplen, swap);
    store_u32(out, header.linktype, swap);
    return out;
}

PcapFile read_file(const std::string& path) {
    const auto bytes = read_binary_file(path);
    if (bytes.size() < kFileHeaderSize) {
        raise(Errc::unknown_magic,
              path + " holds " + std::to_string(bytes.size()) + " bytes, no pcap header");
    }
    PcapFile file;
    file.header = parse_file_header(std::span(bytes).first(kFileHeaderSize));
    file.body = read_records(std::span(bytes).subspan(kFileHeaderSize), file.header);
    return file;
}

void write_file(const std::string& path, const PcapFileHeader& header,
                const std::vector<PacketRecord>& records) {
    auto bytes = serialize_file_header(header);
    const auto body = serialize_records(records, header);
    bytes.insert(bytes.end(), body.begin(), body.end());
    write_binary_file(path, bytes);
}

} // namespace iatfp::pcap
