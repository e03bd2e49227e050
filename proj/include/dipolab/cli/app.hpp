#pragma once

#include <iosfwd>

namespace dipolab::cli {

/// Entry point of the `dipolab` tool. Returns the process exit code:
/// 0 success, 1 module error (JSON record on err and in error.json),
/// 2 configuration or usage error naming the offending key.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dipolab::cli
