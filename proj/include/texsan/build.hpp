#ifndef TEXSAN_BUILD_HPP
#define TEXSAN_BUILD_HPP

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "texsan/bundle.hpp"
#include "texsan/config.hpp"
#include "texsan/util.hpp"

namespace texsan {

/// Parsed recorder trace of one compiler pass (`PWD`/`INPUT`/`OUTPUT` lines).
struct BuildRecord {
  std::string root;
  int pass = 0;
  std::string working_dir;
  std::set<std::string> inputs;   // bundle-relative paths only
  std::set<std::string> outputs;  // bundle-relative paths only
};

enum class Verdict { required, dangling, ancillary, directive };
enum class Evidence { recorder, access_trace, readme, anc_rule, root_rule };

const char* verdict_name(Verdict v);
const char* evidence_name(Evidence e);

struct FileClassification {
  std::string path;
  Verdict verdict = Verdict::dangling;
  Evidence evidence = Evidence::recorder;
};

struct CompileLimits {
  double timeout_seconds = 300;                     // 5 minute default
  std::uint64_t log_limit_bytes = 2ull << 30;       // kill at 2 GB of log
  int max_passes = 3;
};

struct CompileOutcome {
  std::vector<BuildRecord> records;
  fs::path pdf;        // produced PDF (inside the scratch dir)
  fs::path scratch;    // scratch working dir (owned by caller-provided TempDir)
  bool ok = false;
};

class BuildRunner {
 public:
  BuildRunner(const Config& config, CompileLimits limits = {})
      : config_(config), limits_(limits) {}

  /// One recorder pass in `scratch` (which must already contain the bundle
  /// files). Throws CompileTimeout / LogOverflow / CompileFailed.
  BuildRecord compile_with_recorder(const SubmissionBundle& bundle,
                                    const std::string& root, const fs::path& scratch,
                                    int pass);

  /// Multi-pass compile in a fresh copy of the bundle under `scratch`;
  /// records are unioned over passes. Stops early once the aux state is
  /// stable.
  CompileOutcome compile_all(const SubmissionBundle& bundle, const std::string& root,
                             const fs::path& scratch);

  /// Validation oracle: same compile driven under an access-tracing wrapper;
  /// returns every bundle file read. Throws TracingUnavailable when no
  /// tracing mechanism exists.
  std::set<std::string> trace_file_accesses(const SubmissionBundle& bundle,
                                            const std::string& root);

  const CompileLimits& limits() const { return limits_; }

 private:
  BuildRecord run_pass(const SubmissionBundle& bundle, const std::string& root,
                       const fs::path& scratch, int pass,
                       const std::map<std::string, std::string>& extra_env);

  const Config& config_;
  CompileLimits limits_;
};

/// Classify every bundle file. `records` must hold at least one successful
/// record (union over roots and passes).
std::vector<FileClassification> classify(const SubmissionBundle& bundle,
                                         const std::vector<BuildRecord>& records);

/// The required set implied by records + rules (used by classify and the
/// harness oracle comparison).
std::set<std::string> required_set(const SubmissionBundle& bundle,
                                   const std::vector<BuildRecord>& records);

}  // namespace texsan

#endif
