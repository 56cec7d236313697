#pragma once

#include <stdexcept>
#include <string>

namespace iatfp {

// Every failure the library can signal, one code per distinct condition.
enum class Errc {
    // capture parsing
    unknown_magic,
    pcapng_unsupported,
    unsupported_linktype,
    truncated_packet_header,
    truncated_payload,
    frame_too_short,
    // rendering / augmentation
    non_positive_value,
    singular_transform,
    // network
    shape_mismatch,
    stale_cache,
    // training
    single_class_training,
    empty_split,
    // model files
    bad_model_magic,
    unsupported_model_version,
    truncated_model,
    shape_chain_mismatch,
    // simulation
    duplicate_mac,
    // configuration and I/O
    config_invalid,
    io_failure,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace iatfp
