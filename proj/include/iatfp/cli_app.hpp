#pragma once

namespace iatfp::cli {

// Full command-line entry point. Returns the process exit code:
// 0 success, 1 I/O failure, 2 validation or parse failure.
int run(int argc, const char* const* argv);

} // namespace iatfp::cli
