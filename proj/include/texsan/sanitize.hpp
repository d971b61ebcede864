#ifndef TEXSAN_SANITIZE_HPP
#define TEXSAN_SANITIZE_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "texsan/ast.hpp"
#include "texsan/build.hpp"
#include "texsan/bundle.hpp"
#include "texsan/util.hpp"

namespace texsan {

/// The removal mechanisms tracked per span. The first five produce edits;
/// special_environment_text is detected and reported but never removed
/// (verbatim-family content must survive byte-identically).
enum class Mechanism {
  line_comment,
  comment_environment,
  outside_document,
  skipped_if_branch,
  discarded_command_argument,
  special_environment_text,
};

const char* mechanism_name(Mechanism m);

struct IrrelevantSpan {
  std::string file;
  Span span;
  Mechanism mechanism;
  Bytes replacement;  // usually empty or a lone '%'
};

struct BblInline {
  std::string root;
  Span command_span;     // the \bibliography{...} call in the root
  std::string bbl_path;  // inlined and then dropped from the output
};

/// Bundle-wide static context: macro arities and usage, \newif flags that
/// resolve statically, comment environments. Built from required TeX files
/// in inclusion order.
struct SanitizeContext {
  MacroTable macros;
  std::set<std::string> newif_flags;
  std::map<std::string, bool> static_flags;  // only statically-safe flags
  std::set<std::string> comment_envs;
  std::vector<std::string> verbatim_envs = default_verbatim_envs();
};

SanitizeContext build_context(const SubmissionBundle& bundle,
                              const std::vector<std::string>& required_tex_files);

/// Concepts A-D on one parsed file. Returns removable spans only; spans
/// never overlap, never touch verbatim-family interiors, never touch
/// regions with parse errors.
std::vector<IrrelevantSpan> find_irrelevant_spans(const SourceFile& file,
                                                  const ParseResult& parsed,
                                                  const SanitizeContext& ctx,
                                                  bool is_root);

/// Comment-looking lines inside verbatim-family environments, reported but
/// not removed.
std::vector<IrrelevantSpan> find_special_env_comments(const SourceFile& file,
                                                      const ParseResult& parsed,
                                                      const SanitizeContext& ctx);

/// Refines a line_comment node span into an edit: whole-comment lines are
/// deleted including their newline; trailing comments collapse to a bare
/// '%' (which preserves TeX's newline suppression). nullopt = keep as is.
std::optional<Edit> edit_for_line_comment(const Bytes& bytes, const Span& comment);

struct CleanOptions {
  bool remove_comments = true;
  bool remove_dangling = true;
  bool strip_metadata = true;
  bool inline_bbl = true;
  bool normalize_times = false;
  std::int64_t times_epoch = 946684800;  // 2000-01-01T00:00:00Z
};

struct CleanPlan {
  std::string bundle_hash;
  std::vector<std::string> file_removals;  // dangling verdicts only
  std::vector<IrrelevantSpan> span_edits;
  std::vector<BblInline> bbl_inlines;
  std::map<std::string, std::string> touched_hashes;  // staleness guard
  std::map<Mechanism, int> detected_counts;           // all six mechanisms
  std::vector<std::string> warnings;

  bool empty() const {
    return file_removals.empty() && span_edits.empty() && bbl_inlines.empty();
  }
};

/// Computes the full plan from classifications. Span edits target required
/// files only; ancillary/directive/required files are never removed.
CleanPlan plan_clean(const SubmissionBundle& bundle,
                     const std::vector<FileClassification>& classifications,
                     const CleanOptions& options);

struct ApplyOutcome {
  std::vector<std::pair<std::string, Bytes>> files;  // the sanitized bundle
  std::vector<std::string> removed_files;
  std::vector<std::string> warnings;
};

/// Applies a plan, producing the sanitized bundle content (the original is
/// never touched). Throws StalePlan if the bundle changed since planning.
ApplyOutcome apply_plan(const SubmissionBundle& bundle, const CleanPlan& plan);

/// Looks up the .bbl file matching a \bibliography call (jobname.bbl first,
/// then <arg>.bbl).
std::optional<std::string> find_bbl_for(const SubmissionBundle& bundle,
                                        const std::string& root,
                                        const std::string& bib_arg);

}  // namespace texsan

#endif
