#ifndef TEXSAN_CLI_HPP
#define TEXSAN_CLI_HPP

#include <string>
#include <vector>

#include "texsan/config.hpp"
#include "texsan/report.hpp"
#include "texsan/sanitize.hpp"
#include "texsan/util.hpp"

namespace texsan::cli {

inline constexpr const char* kToolVersion = "0.3.0";

struct CleanInvocation {
  fs::path input;
  fs::path out;          // output directory or archive (.tar/.tar.gz/.zip)
  fs::path report_path;  // optional
  CleanOptions options;
  bool verify = true;
  int dpi = 150;
  long fuzz = 0;
  double timeout_seconds = 300;
  int max_passes = 3;
  int jobs = 1;
  std::string root_override;
  bool quiet = false;
  Config config;
};

/// The clean pipeline: ingest, classify via recorder builds, plan, apply,
/// strip metadata, verify. The input is never modified. Throws on
/// operational errors (including fail-closed compile failures).
SanitizationReport run_clean(const CleanInvocation& inv);

struct ScanRun {
  std::vector<Finding> findings;
  std::vector<std::string> warnings;
};

/// The scan pipeline: pattern rules over all text files plus sensitive
/// metadata findings, with dangling/comment context when the bundle
/// compiles.
ScanRun run_scan(const fs::path& input, const Config& config,
                 double timeout_seconds = 300,
                 const std::vector<PatternRule>& rules = builtin_rules());

/// Entry point behind the `texsan` binary. Returns the process exit code:
/// 0 success/identical, 1 findings or visual mismatch, 2 operational error.
int run(const std::vector<std::string>& args);

}  // namespace texsan::cli

#endif
