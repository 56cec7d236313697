#include "iatfp/util.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "iatfp/errors.hpp"

namespace iatfp {

std::string to_hex(uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::vector<unsigned char> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(Errc::io_failure, "cannot open " + path);
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (in.bad()) {
        raise(Errc::io_failure, "read failed for " + path);
    }
    return bytes;
}

void write_binary_file(const std::string& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(Errc::io_failure, "cannot open " + path + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        raise(Errc::io_failure, "write failed for " + path);
    }
}

std::string read_text_file(const std::string& path) {
    auto bytes = read_binary_file(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_text_file(const std::string& path, const std::string& text) {
    write_binary_file(path, std::span<const unsigned char>(
                                reinterpret_cast<const unsigned char*>(text.data()),
                                text.size()));
}

} // namespace iatfp
