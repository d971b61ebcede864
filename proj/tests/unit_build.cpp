#include <chrono>

#include "doctest.h"
#include "testsupport.hpp"
#include "texsan/build.hpp"
#include "texsan/bundle.hpp"
#include "texsan/config.hpp"

using namespace texsan;
using testsupport::add_asset;
using testsupport::minimal_root;
using testsupport::write_bundle;

namespace {

std::vector<BuildRecord> compile_union(const SubmissionBundle& b, BuildRunner& runner) {
  std::vector<BuildRecord> all;
  for (const auto& root : b.roots) {
    TempDir scratch("ub");
    auto outcome = runner.compile_all(b, root, scratch.path() / "b");
    all.insert(all.end(), outcome.records.begin(), outcome.records.end());
  }
  return all;
}

std::map<std::string, Verdict> verdict_map(const std::vector<FileClassification>& cs) {
  std::map<std::string, Verdict> m;
  for (const auto& c : cs) m[c.path] = c.verdict;
  return m;
}

}  // namespace

TEST_CASE("recorder reports read figures and omits unread ones") {
  TempDir t("bundle");
  write_bundle(t.path(),
               {{"main.tex", minimal_root("see \\includegraphics{fig1}")}});
  add_asset(t.path(), "plain1.png", "fig1.png");
  add_asset(t.path(), "plain2.png", "fig2.png");
  auto b = ingest(t.path());
  Config c;
  BuildRunner runner(c);
  auto records = compile_union(b, runner);
  REQUIRE(!records.empty());
  std::set<std::string> inputs;
  for (const auto& r : records) inputs.insert(r.inputs.begin(), r.inputs.end());
  CHECK(inputs.count("fig1.png") == 1);
  CHECK(inputs.count("fig2.png") == 0);
  CHECK(inputs.count("main.tex") == 1);
}

TEST_CASE("bbl is read, bib is not") {
  TempDir t("bundle");
  write_bundle(t.path(),
               {{"main.tex", minimal_root("cite \\cite{a}\\bibliography{refs}")},
                {"refs.bib", "@misc{a, title={T}}"},
                {"refs.bbl",
                 "\\begin{thebibliography}{1}\\bibitem{a} T.\\end{thebibliography}\n"}});
  auto b = ingest(t.path());
  Config c;
  BuildRunner runner(c);
  auto records = compile_union(b, runner);
  std::set<std::string> inputs;
  for (const auto& r : records) inputs.insert(r.inputs.begin(), r.inputs.end());
  CHECK(inputs.count("refs.bbl") == 1);
  CHECK(inputs.count("refs.bib") == 0);
}

TEST_CASE("nonexistent root violates the precondition") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("x")}});
  auto b = ingest(t.path());
  Config c;
  BuildRunner runner(c);
  TempDir scratch("ub");
  CHECK_THROWS_AS(runner.compile_with_recorder(b, "ghost.tex", scratch.path(), 1),
                  Error);
}

TEST_CASE("classification: dangling, ancillary, directive, required") {
  TempDir t("bundle");
  write_bundle(t.path(),
               {{"main.tex", minimal_root("uses \\input{part}")},
                {"part.tex", "included text\n"},
                {"unused.dat", "never read"},
                {"anc/video.mp4", "binary-ish"},
                {"00README.XXX", "extra.txt include\n"},
                {"extra.txt", "listed by the readme"}});
  auto b = ingest(t.path());
  Config c;
  BuildRunner runner(c);
  auto records = compile_union(b, runner);
  auto verdicts = verdict_map(classify(b, records));
  CHECK(verdicts.at("main.tex") == Verdict::required);
  CHECK(verdicts.at("part.tex") == Verdict::required);
  CHECK(verdicts.at("unused.dat") == Verdict::dangling);
  CHECK(verdicts.at("anc/video.mp4") == Verdict::ancillary);
  CHECK(verdicts.at("00README.XXX") == Verdict::directive);
  CHECK(verdicts.at("extra.txt") == Verdict::required);
}

TEST_CASE("classification requires a successful record") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("x")}});
  auto b = ingest(t.path());
  CHECK_THROWS_AS(classify(b, {}), Error);
}

TEST_CASE("file read only on the second pass is required (union over passes)") {
  TempDir t("bundle");
  write_bundle(t.path(),
               {{"main.tex",
                 "\\documentclass{article}\n\\begin{document}\n"
                 "\\ifdefined\\auxmark\\input{latestyle}\\fi\n"
                 "body\n\\end{document}\n"},
                {"latestyle.tex", "second-pass content\n"}});
  auto b = ingest(t.path());
  Config c;
  BuildRunner runner(c);
  auto records = compile_union(b, runner);
  REQUIRE(records.size() >= 2);
  CHECK(records[0].inputs.count("latestyle.tex") == 0);
  std::set<std::string> unioned;
  for (const auto& r : records) unioned.insert(r.inputs.begin(), r.inputs.end());
  CHECK(unioned.count("latestyle.tex") == 1);
  auto verdicts = verdict_map(classify(b, records));
  CHECK(verdicts.at("latestyle.tex") == Verdict::required);
}

TEST_CASE("access trace oracle equals recorder inputs") {
  TempDir t("bundle");
  write_bundle(t.path(),
               {{"main.tex", minimal_root("\\input{sub} and \\includegraphics{fig1}")},
                {"sub.tex", "sub content\n"},
                {"spare.txt", "unread"}});
  add_asset(t.path(), "plain1.png", "fig1.png");
  auto b = ingest(t.path());
  Config c;
  BuildRunner runner(c);
  auto records = compile_union(b, runner);
  std::set<std::string> rec_inputs;
  for (const auto& r : records) rec_inputs.insert(r.inputs.begin(), r.inputs.end());
  auto traced = runner.trace_file_accesses(b, b.roots.front());
  CHECK(rec_inputs == traced);
  CHECK(traced.count("spare.txt") == 0);
}

TEST_CASE("openin-style data reads show up in recorder and trace") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("\\openin3=data.txt ok")},
                          {"data.txt", "payload\n"}});
  auto b = ingest(t.path());
  Config c;
  BuildRunner runner(c);
  auto records = compile_union(b, runner);
  std::set<std::string> rec_inputs;
  for (const auto& r : records) rec_inputs.insert(r.inputs.begin(), r.inputs.end());
  CHECK(rec_inputs.count("data.txt") == 1);
  auto traced = runner.trace_file_accesses(b, b.roots.front());
  CHECK(traced == rec_inputs);
}

TEST_CASE("monotonicity: adding an unreferenced file changes no other verdict") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("stable body")},
                          {"keep.tex", "never input\n"}});
  auto b1 = ingest(t.path());
  Config c;
  BuildRunner runner(c);
  auto v1 = verdict_map(classify(b1, compile_union(b1, runner)));

  write_file(t.path() / "added.bin", std::string("fresh dangling file"));
  auto b2 = ingest(t.path());
  auto v2 = verdict_map(classify(b2, compile_union(b2, runner)));
  CHECK(v2.at("added.bin") == Verdict::dangling);
  for (const auto& [path, verdict] : v1) CHECK(v2.at(path) == verdict);
}

TEST_CASE("compile timeout kills a runaway build at the limit") {
  TempDir t("bundle");
  write_bundle(t.path(),
               {{"main.tex",
                 "\\documentclass{article}\\def\\loop{\\loop}\\begin{document}"
                 "\\loop\\end{document}\n"}});
  auto b = ingest(t.path());
  Config c;
  CompileLimits limits;
  limits.timeout_seconds = 2;
  BuildRunner runner(c, limits);
  TempDir scratch("ub");
  auto start = std::chrono::steady_clock::now();
  try {
    runner.compile_all(b, "main.tex", scratch.path() / "b");
    FAIL("expected CompileTimeout");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::compile_timeout);
  }
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(elapsed >= 1.8);
  CHECK(elapsed < 7.0);
}

TEST_CASE("log overflow kills the compiler") {
  TempDir t("bundle");
  write_bundle(
      t.path(),
      {{"main.tex",
        "\\documentclass{article}\\def\\noisy{\\message{xxxxxxxxxxxxxxxxxxxxxxxx}"
        "\\noisy}\\begin{document}\\noisy\\end{document}\n"}});
  auto b = ingest(t.path());
  Config c;
  CompileLimits limits;
  limits.timeout_seconds = 60;
  limits.log_limit_bytes = 64 * 1024;
  BuildRunner runner(c, limits);
  TempDir scratch("ub");
  try {
    runner.compile_all(b, "main.tex", scratch.path() / "b");
    FAIL("expected LogOverflow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::log_overflow);
  }
}

TEST_CASE("compile failure on missing input file") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("\\input{absent}")}});
  auto b = ingest(t.path());
  Config c;
  BuildRunner runner(c);
  TempDir scratch("ub");
  try {
    runner.compile_all(b, "main.tex", scratch.path() / "b");
    FAIL("expected CompileFailed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::compile_failed);
  }
}

TEST_CASE("compilation artifacts stay out of the bundle") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("pristine")}});
  auto b = ingest(t.path());
  auto before = b.content_hash();
  Config c;
  BuildRunner runner(c);
  compile_union(b, runner);
  auto after = ingest(t.path()).content_hash();
  CHECK(before == after);
  CHECK_FALSE(fs::exists(t.path() / "main.pdf"));
  CHECK_FALSE(fs::exists(t.path() / "main.aux"));
}
