#ifndef TEXSAN_SUBPROCESS_HPP
#define TEXSAN_SUBPROCESS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "texsan/util.hpp"

namespace texsan {

struct RunOptions {
  fs::path cwd;                                   // empty = inherit
  std::map<std::string, std::string> env;         // added/overridden variables
  double timeout_seconds = 0;                     // 0 = no limit
  fs::path watch_log;                             // log file monitored for overflow
  std::uint64_t log_limit_bytes = 0;              // 0 = no limit
  bool capture_stdout = true;
  std::uint64_t stdout_limit_bytes = 1ull << 30;  // safety cap on captured output
};

struct RunResult {
  int exit_code = -1;
  bool timed_out = false;
  bool log_overflow = false;
  bool signaled = false;
  double wall_seconds = 0;
  std::string out;  // captured stdout (stderr goes to the parent's stderr)
};

/// Run argv[0] with the given arguments. The child is placed in its own
/// process group and the whole group is killed on timeout or log overflow.
RunResult run_process(const std::vector<std::string>& argv, const RunOptions& opts = {});

/// Split a shell-ish command line into argv (quotes and backslash escapes,
/// no globbing or variable expansion).
std::vector<std::string> split_command(std::string_view cmd);

}  // namespace texsan

#endif
