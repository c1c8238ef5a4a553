#pragma once

namespace fsml {

// Full command-line entry point. Returns the process exit code:
// 0 success, 1 numeric failure, 2 invalid input or usage.
int run_cli(int argc, const char* const* argv);

}  // namespace fsml
