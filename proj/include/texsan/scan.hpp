#ifndef TEXSAN_SCAN_HPP
#define TEXSAN_SCAN_HPP

#include <map>
#include <string>
#include <vector>

#include "texsan/ast.hpp"
#include "texsan/build.hpp"
#include "texsan/bundle.hpp"
#include "texsan/util.hpp"

namespace texsan {

enum class Severity { H, M, L };
const char* severity_name(Severity s);

struct PatternRule {
  std::string name;       // mirrors the built-in catalog labels exactly
  std::string regex;
  Severity severity = Severity::L;
  bool entropy_gated = false;  // candidate must pass filter_candidate
  bool icase = false;
  bool multiline = false;
  int capture_group = 0;  // the secret-bearing group fed to the filter
  enum class Context { any, comment_only, dangling_only } context = Context::any;
};

/// The built-in rule catalog. Severities follow the published impact labels.
const std::vector<PatternRule>& builtin_rules();

/// Load extra/overriding rules from a config-style file: one rule per line,
/// `name <TAB> severity <TAB> flags <TAB> regex` (flags: i=icase, e=entropy,
/// m=multiline; '-' for none).
std::vector<PatternRule> load_rules(const fs::path& file);

struct Finding {
  std::string rule;
  std::string file;
  Span span;
  std::string matched;  // raw matched text; redact for display
  Severity severity = Severity::L;
  bool in_dangling_file = false;
  bool in_comment = false;
};

/// Shannon entropy in bits over the character distribution of `segment`.
double shannon_entropy(std::string_view segment);

enum class FilterDecision { keep, drop_entropy, drop_monotone, drop_junk };
const char* filter_decision_name(FilterDecision d);

/// Secret-candidate filter: segmented entropy (> 3 bits to keep), monotone
/// character sequences and a known-junk list.
FilterDecision filter_candidate(std::string_view candidate);

/// Splits a candidate into alphanumeric segments for the entropy filter.
std::vector<std::string> entropy_segments(std::string_view candidate);

/// Redaction for reports: keeps the first and last 2 characters.
std::string redact(std::string_view matched);

/// Scan one text buffer with the given rules. `comment_spans` marks regions
/// known to be comments/irrelevant (sets in_comment).
std::vector<Finding> scan_text(const std::string& path, const Bytes& bytes,
                               const std::vector<PatternRule>& rules,
                               const std::vector<Span>& comment_spans = {},
                               bool in_dangling = false);

/// Scan a whole bundle. Classifications set in_dangling_file; per-file
/// irrelevant spans set in_comment. Metadata findings (GPS and friends) are
/// appended by the caller (see metadata module). Output is sorted by
/// severity, then path, then offset.
std::vector<Finding> scan(const SubmissionBundle& bundle,
                          const std::vector<FileClassification>& classifications,
                          const std::map<std::string, std::vector<Span>>& spans,
                          const std::vector<PatternRule>& rules = builtin_rules());

void sort_findings(std::vector<Finding>& findings);

}  // namespace texsan

#endif
