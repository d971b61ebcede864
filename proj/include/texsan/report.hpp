#ifndef TEXSAN_REPORT_HPP
#define TEXSAN_REPORT_HPP

#include <map>
#include <string>
#include <vector>

#include "texsan/build.hpp"
#include "texsan/sanitize.hpp"
#include "texsan/scan.hpp"
#include "texsan/verify.hpp"

namespace texsan {

/// Machine-readable record of one clean run. Replaying the recorded plan on
/// the original bundle reproduces the sanitized bundle hash exactly.
struct SanitizationReport {
  int schema_version = 1;
  std::string tool_version;
  std::string toolchain;  // engine command used
  std::string origin;
  std::string bundle_hash_before;
  std::string bundle_hash_after;
  std::vector<std::string> roots;
  std::vector<FileClassification> classifications;
  CleanPlan plan;
  std::map<std::string, std::vector<std::string>> metadata_removed;  // file -> keys
  std::vector<std::string> metadata_skipped;  // unsupported payload files
  bool timestamps_normalized = false;
  std::int64_t times_epoch = 0;
  bool verified = false;
  CleanOutcome verification;
  std::map<std::string, int> findings_by_severity;  // scan mode
  std::vector<std::string> warnings;
};

std::string report_to_json(const SanitizationReport& r);
SanitizationReport report_from_json(const std::string& json_text);

void save_report(const SanitizationReport& r, const fs::path& path);
SanitizationReport load_report(const fs::path& path);

/// Short human summary (stdout companion to the JSON).
std::string report_summary(const SanitizationReport& r);

std::string findings_to_jsonl(const std::vector<Finding>& findings, bool redact_values);

}  // namespace texsan

#endif
