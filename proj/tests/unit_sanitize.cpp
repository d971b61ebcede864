#include "doctest.h"
#include "testsupport.hpp"
#include "texsan/build.hpp"
#include "texsan/bundle.hpp"
#include "texsan/config.hpp"
#include "texsan/sanitize.hpp"

using namespace texsan;
using testsupport::minimal_root;
using testsupport::src;
using testsupport::write_bundle;

namespace {

struct Found {
  std::vector<IrrelevantSpan> spans;
  SourceFile file;
};

Found find_spans(const std::string& text, bool is_root = true) {
  Found f{{}, src(text)};
  auto pre = parse(f.file);
  SanitizeContext ctx;
  ctx.macros = pre.macros;
  ctx.newif_flags = pre.newif_flags;
  ctx.comment_envs = pre.comment_envs;
  for (const auto& flag : ctx.newif_flags) ctx.static_flags[flag] = false;
  std::map<std::string, int> counts;
  for (const auto& fa : pre.flag_assigns) counts[fa.flag]++;
  for (const auto& fa : pre.flag_assigns) {
    if (fa.dynamic_context || !fa.in_preamble || counts[fa.flag] > 1)
      ctx.static_flags.erase(fa.flag);
    else
      ctx.static_flags[fa.flag] = fa.value;
  }
  ParseOptions opts;
  opts.seed_macros = ctx.macros;
  opts.seed_flags = ctx.newif_flags;
  opts.comment_envs = ctx.comment_envs;
  auto parsed = parse(f.file, opts);
  f.spans = find_irrelevant_spans(f.file, parsed, ctx, is_root);
  return f;
}

std::string apply_spans(const Found& f) {
  std::vector<Edit> edits;
  for (const auto& s : f.spans) edits.push_back(Edit{s.span, s.replacement});
  return to_string(serialize(f.file, edits));
}

bool has_mechanism(const Found& f, Mechanism m) {
  for (const auto& s : f.spans)
    if (s.mechanism == m) return true;
  return false;
}

}  // namespace

TEST_CASE("trailing comment and post-document leftovers") {
  auto f = find_spans("\\begin{document}body % note\n\\end{document}\nleftover");
  CHECK(has_mechanism(f, Mechanism::line_comment));
  CHECK(has_mechanism(f, Mechanism::outside_document));
  std::string out = apply_spans(f);
  CHECK(out.find("note") == std::string::npos);
  CHECK(out.find("leftover") == std::string::npos);
  CHECK(out.find("body %") != std::string::npos);
}

TEST_CASE("iffalse block becomes one skipped-branch span") {
  auto f = find_spans("\\iffalse secret \\fi");
  REQUIRE(f.spans.size() == 1);
  CHECK(f.spans[0].mechanism == Mechanism::skipped_if_branch);
  CHECK(apply_spans(f).find("secret") == std::string::npos);
}

TEST_CASE("discarded argument of a no-op command") {
  auto f = find_spans("\\newcommand{\\hide}[1]{}\\hide{draft text}");
  REQUIRE(f.spans.size() == 1);
  CHECK(f.spans[0].mechanism == Mechanism::discarded_command_argument);
  std::string covered(f.file.bytes.begin() + long(f.spans[0].span.start),
                      f.file.bytes.begin() + long(f.spans[0].span.end));
  CHECK(covered == "draft text");
  CHECK(apply_spans(f) == "\\newcommand{\\hide}[1]{}\\hide{}");
}

TEST_CASE("taken custom branch produces no span") {
  auto f = find_spans("\\newif\\iffoo\\footrue\\iffoo kept\\fi");
  CHECK(f.spans.empty());
}

TEST_CASE("default-false newif branch is removed") {
  auto f = find_spans("\\newif\\iffoo\\iffoo hidden\\fi visible");
  CHECK(has_mechanism(f, Mechanism::skipped_if_branch));
  auto out = apply_spans(f);
  CHECK(out.find("hidden") == std::string::npos);
  CHECK(out.find("visible") != std::string::npos);
}

TEST_CASE("dynamically toggled flags are left alone") {
  auto f = find_spans(
      "\\newif\\iffoo\\iffalse\\footrue\\fi\\iffoo maybe\\fi");
  // The \iffalse wrapper goes, but \iffoo must survive untouched.
  auto out = apply_spans(f);
  CHECK(out.find("\\iffoo maybe\\fi") != std::string::npos);
}

TEST_CASE("if0 with else keeps the else branch") {
  auto f = find_spans("\\if0\nhidden\n\\else\nshown\n\\fi\n");
  auto out = apply_spans(f);
  CHECK(out.find("hidden") == std::string::npos);
  CHECK(out.find("shown") != std::string::npos);
  CHECK(out.find("\\fi") == std::string::npos);
  CHECK(out.find("\\else") == std::string::npos);
}

TEST_CASE("true conditional with else drops only the dead tail") {
  auto f = find_spans("\\newif\\ifx@\\iftrue A\\else B\\fi");
  auto out = apply_spans(f);
  CHECK(out.find("A") != std::string::npos);
  CHECK(out.find("B") == std::string::npos);
  CHECK(out.find("\\fi") != std::string::npos);  // kept to close the \iftrue
}

TEST_CASE("conditional containing verbatim is left untouched") {
  auto f = find_spans(
      "\\iffalse \\begin{verbatim}\\fi\\end{verbatim} tail \\fi");
  CHECK_FALSE(has_mechanism(f, Mechanism::skipped_if_branch));
}

TEST_CASE("comment environment removal is line based") {
  auto f = find_spans("A\n\\begin{comment}\nhidden\n\\end{comment}\nB\n");
  REQUIRE(f.spans.size() == 1);
  CHECK(f.spans[0].mechanism == Mechanism::comment_environment);
  CHECK(apply_spans(f) == "A\nB\n");
}

TEST_CASE("whole-line comments vanish with their newline") {
  Bytes b = to_bytes("x\n% gone\ny\n");
  auto parsed = parse(SourceFile::from_bytes("t.tex", b));
  const AstNode* comment = nullptr;
  for (const auto& c : parsed.root.children)
    if (c.kind == NodeKind::line_comment) comment = &c;
  REQUIRE(comment != nullptr);
  auto edit = edit_for_line_comment(b, comment->span);
  REQUIRE(edit.has_value());
  CHECK(to_string(serialize(b, {*edit})) == "x\ny\n");
}

TEST_CASE("bare trailing percent is kept as newline glue") {
  Bytes b = to_bytes("word%\n");
  auto parsed = parse(SourceFile::from_bytes("t.tex", b));
  const AstNode* comment = nullptr;
  for (const auto& c : parsed.root.children)
    if (c.kind == NodeKind::line_comment) comment = &c;
  REQUIRE(comment != nullptr);
  CHECK_FALSE(edit_for_line_comment(b, comment->span).has_value());
}

TEST_CASE("trailing comment collapses to a bare percent") {
  Bytes b = to_bytes("word % secret\n");
  auto parsed = parse(SourceFile::from_bytes("t.tex", b));
  const AstNode* comment = nullptr;
  for (const auto& c : parsed.root.children)
    if (c.kind == NodeKind::line_comment) comment = &c;
  auto edit = edit_for_line_comment(b, comment->span);
  REQUIRE(edit.has_value());
  CHECK(to_string(serialize(b, {*edit})) == "word %\n");
}

TEST_CASE("format line on line one survives") {
  Bytes b = to_bytes("%&pdflatex\nbody\n");
  auto parsed = parse(SourceFile::from_bytes("t.tex", b));
  const AstNode* comment = nullptr;
  for (const auto& c : parsed.root.children)
    if (c.kind == NodeKind::line_comment) comment = &c;
  REQUIRE(comment != nullptr);
  CHECK_FALSE(edit_for_line_comment(b, comment->span).has_value());
}

TEST_CASE("verbatim interiors are never edited but are reported") {
  auto f = find_spans("\\begin{verbatim}\n% keep me\n\\end{verbatim}\n");
  CHECK(f.spans.empty());
  auto pre = parse(f.file);
  SanitizeContext ctx;
  auto special = find_special_env_comments(f.file, pre, ctx);
  REQUIRE(special.size() == 1);
  CHECK(special[0].mechanism == Mechanism::special_environment_text);
}

TEST_CASE("parse errors suppress nearby removal") {
  // Unterminated environment: everything inside the error region is kept.
  auto f = find_spans("\\begin{itemize} % tempting\n");
  CHECK(f.spans.empty());
}

TEST_CASE("idempotence at the span level") {
  std::string text =
      "\\newcommand{\\hide}[1]{}\n% whole line\nbody % tail\n\\iffalse x\\fi\n"
      "\\hide{gone}\nrest\n";
  auto first = find_spans(text);
  auto once = apply_spans(first);
  auto second = find_spans(once);
  CHECK(second.spans.empty());
  CHECK(apply_spans(second) == once);
}

TEST_CASE("plan and apply on a full bundle") {
  TempDir t("bundle");
  write_bundle(t.path(),
               {{"main.tex",
                 "\\documentclass{article}\n% preamble note\n\\begin{document}\n"
                 "text % tail\n\\cite{k}\\bibliography{refs}\n\\end{document}\n"},
                {"refs.bib", "@misc{k, note={SECRET-BIB}}"},
                {"refs.bbl",
                 "\\begin{thebibliography}{1}\n% bbl comment\n\\bibitem{k} K.\n"
                 "\\end{thebibliography}\n"},
                {"dangling.txt", "unused"},
                {"anc/keep.dat", "ancillary"}});
  auto b = ingest(t.path());
  Config c;
  BuildRunner runner(c);
  TempDir scratch("plan");
  auto outcome = runner.compile_all(b, "main.tex", scratch.path() / "b");
  auto classifications = classify(b, outcome.records);

  CleanOptions options;
  auto plan = plan_clean(b, classifications, options);
  // refs.bib is never read (the engine reads the .bbl), so it is dangling.
  CHECK(plan.file_removals ==
        std::vector<std::string>{"dangling.txt", "refs.bib"});
  REQUIRE(plan.bbl_inlines.size() == 1);
  CHECK(plan.bbl_inlines[0].bbl_path == "refs.bbl");
  CHECK(plan.detected_counts.at(Mechanism::line_comment) >= 2);

  auto applied = apply_plan(b, plan);
  std::map<std::string, std::string> files;
  for (auto& [p, bytes] : applied.files) files[p] = to_string(bytes);
  CHECK(files.count("dangling.txt") == 0);
  CHECK(files.count("refs.bbl") == 0);
  CHECK(files.count("refs.bib") == 0);
  CHECK(files.count("anc/keep.dat") == 1);
  CHECK(files.at("main.tex").find("thebibliography") != std::string::npos);
  CHECK(files.at("main.tex").find("\\bibliography{refs}") == std::string::npos);
  CHECK(files.at("main.tex").find("bbl comment") == std::string::npos);
  CHECK(files.at("main.tex").find("preamble note") == std::string::npos);
}

TEST_CASE("empty plan reproduces the bundle byte for byte") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("clean")},
                          {"fig.txt", "data"}});
  auto b = ingest(t.path());
  CleanPlan plan;
  plan.bundle_hash = b.content_hash();
  auto applied = apply_plan(b, plan);
  REQUIRE(applied.files.size() == 2);
  for (const auto& [path, bytes] : applied.files)
    CHECK(bytes == b.read(path));
}

TEST_CASE("stale plan is rejected") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("v1")}});
  auto b = ingest(t.path());
  CleanPlan plan;
  plan.bundle_hash = b.content_hash();
  write_file(t.path() / "main.tex", minimal_root("v2-changed"));
  auto b2 = ingest(t.path());
  try {
    apply_plan(b2, plan);
    FAIL("expected StalePlan");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::stale_plan);
  }
}

TEST_CASE("missing bbl leaves the source unchanged with a warning") {
  TempDir t("bundle");
  write_bundle(t.path(),
               {{"main.tex", minimal_root("\\bibliography{refs}")}});
  auto b = ingest(t.path());
  std::vector<FileClassification> cls = {
      {"main.tex", Verdict::required, Evidence::root_rule}};
  CleanOptions options;
  options.remove_comments = false;
  options.remove_dangling = false;
  auto plan = plan_clean(b, cls, options);
  CHECK(plan.bbl_inlines.empty());
  bool warned = false;
  for (const auto& w : plan.warnings)
    if (w.find("no .bbl") != std::string::npos) warned = true;
  CHECK(warned);
}

TEST_CASE("root without bibliography is unchanged") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("no bib here")}});
  auto b = ingest(t.path());
  std::vector<FileClassification> cls = {
      {"main.tex", Verdict::required, Evidence::root_rule}};
  CleanOptions options;
  options.remove_comments = false;
  options.remove_dangling = false;
  auto plan = plan_clean(b, cls, options);
  CHECK(plan.empty());
}

TEST_CASE("span edits only target required files") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("x % tail")},
                          {"notes.tex", "% dangling tex file\n"}});
  auto b = ingest(t.path());
  std::vector<FileClassification> cls = {
      {"main.tex", Verdict::required, Evidence::root_rule},
      {"notes.tex", Verdict::dangling, Evidence::recorder}};
  CleanOptions options;
  auto plan = plan_clean(b, cls, options);
  for (const auto& s : plan.span_edits) CHECK(s.file == "main.tex");
  CHECK(plan.file_removals == std::vector<std::string>{"notes.tex"});
}
