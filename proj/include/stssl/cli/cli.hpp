#pragma once

namespace stssl::cli {

/// Entry point for the `stssl` command line tool.
/// Exit codes: 0 success, 1 usage error, 2 runtime failure.
int run(int argc, const char* const* argv);

}  // namespace stssl::cli
