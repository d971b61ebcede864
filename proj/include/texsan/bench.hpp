#ifndef TEXSAN_BENCH_HPP
#define TEXSAN_BENCH_HPP

#include <map>
#include <string>
#include <vector>

#include "texsan/config.hpp"
#include "texsan/util.hpp"

namespace texsan {

/// A cleaner under test: any tool expressible as a directory-to-directory
/// command. {input_dir} and {output_dir} are substituted; {root} when the
/// tool needs the main file spelled out.
struct CleanerPlugin {
  std::string name;
  std::string invoke_cmd;
  bool needs_root_hint = false;
};

enum class TestStatus { pass, fail, crash };
const char* test_status_name(TestStatus s);

struct TestCaseResult {
  int id = 0;  // 1..9, mirroring the comment cleanup test legend
  TestStatus status = TestStatus::crash;
  std::string note;
};

struct ScoreSummary {
  int total = 0;
  int beneficial = 0;
  int neutral = 0;
  int breaks = 0;
  std::map<int, int> over_removal_hist;   // count of over-removed files -> bundles
  std::map<int, int> under_removal_hist;  // count of under-removed files -> bundles
};

class Harness {
 public:
  Harness(const Config& config, fs::path mwe_corpus_dir)
      : config_(config), corpus_(std::move(mwe_corpus_dir)) {}

  /// Runs the nine-test MWE suite against a plugin. Each case checks that
  /// target text is gone, protected text survives, and the cleaned bundle
  /// compiles to a pixel-identical PDF. Throws PluginMissing.
  std::vector<TestCaseResult> run_test_suite(const CleanerPlugin& plugin) const;

  /// Scores a plugin over a corpus of bundle directories: beneficial/breaks
  /// shares via the verifier and over-/under-removal against the
  /// recorder-based classification oracle.
  ScoreSummary score_corpus(const CleanerPlugin& plugin,
                            const std::vector<fs::path>& bundles) const;

  /// Plain-text table mirroring the published comparison layout.
  static std::string format_results_table(
      const std::vector<std::pair<std::string, std::vector<TestCaseResult>>>& rows);

  /// The bundled sanitizer, expressed as a plugin like any other.
  static CleanerPlugin builtin_plugin();
  static CleanerPlugin naive_plugin();

  /// Loads plugin definitions from a config-style file with keys
  /// plugin.<name>.cmd (and optional plugin.<name>.needs_root).
  static std::vector<CleanerPlugin> load_plugins(const fs::path& file);

 private:
  bool run_plugin(const CleanerPlugin& plugin, const fs::path& input,
                  const fs::path& output, std::string* fail_note) const;

  const Config& config_;
  fs::path corpus_;
};

}  // namespace texsan

#endif
