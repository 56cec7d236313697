#include "iatfp/errors.hpp"

namespace iatfp {

const char* errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::unknown_magic: return "unknown magic";
    case Errc::pcapng_unsupported: return "pcapng not supported";
    case Errc::unsupported_linktype: return "unsupported link type";
    case Errc::truncated_packet_header: return "truncated packet header";
    case Errc::truncated_payload: return "truncated payload";
    case Errc::frame_too_short: return "frame too short";
    case Errc::non_positive_value: return "non-positive value";
    case Errc::singular_transform: return "singular transform";
    case Errc::shape_mismatch: return "shape mismatch";
    case Errc::stale_cache: return "stale cache";
    case Errc::single_class_training: return "single-class training set";
    case Errc::empty_split: return "empty split";
    case Errc::bad_model_magic: return "bad model magic";
    case Errc::unsupported_model_version: return "unsupported model version";
    case Errc::truncated_model: return "truncated model file";
    case Errc::shape_chain_mismatch: return "shape chain mismatch";
    case Errc::duplicate_mac: return "duplicate MAC address";
    case Errc::config_invalid: return "invalid configuration";
    case Errc::io_failure: return "I/O failure";
    }
    return "unknown error";
}

} // namespace iatfp
