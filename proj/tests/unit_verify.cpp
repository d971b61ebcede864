#include "doctest.h"
#include "testsupport.hpp"
#include "texsan/build.hpp"
#include "texsan/bundle.hpp"
#include "texsan/config.hpp"
#include "texsan/metadata.hpp"
#include "texsan/verify.hpp"

using namespace texsan;
using testsupport::add_asset;
using testsupport::minimal_root;
using testsupport::write_bundle;

namespace {

// Compiles a one-off document and returns the PDF path inside `scratch`.
fs::path compile_doc(const std::string& body, TempDir& scratch,
                     const std::string& name = "main.tex") {
  fs::path bundle = scratch.path() / "src";
  write_file(bundle / name, body);
  Config c;
  BuildRunner runner(c);
  auto b = ingest(bundle);
  auto outcome = runner.compile_all(b, name, scratch.path() / "build");
  return outcome.pdf;
}

}  // namespace

TEST_CASE("blank page rasterizes to an all-white buffer") {
  TempDir t("verify");
  auto pdf = compile_doc(minimal_root(""), t);
  Config c;
  Verifier v(c);
  auto pages = v.rasterize(pdf);
  REQUIRE(pages.size() == 1);
  CHECK(pages[0].width == 1275);  // US letter at 150 dpi
  CHECK(pages[0].height == 1650);
  bool all_white = true;
  for (auto byte : pages[0].rgb)
    if (byte != 255) all_white = false;
  CHECK(all_white);
}

TEST_CASE("rasterization is deterministic") {
  TempDir t("verify");
  auto pdf = compile_doc(minimal_root("determinism check"), t);
  Config c;
  Verifier v(c);
  auto a = v.rasterize(pdf);
  auto b = v.rasterize(pdf);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].rgb == b[i].rgb);
}

TEST_CASE("three pages yield three buffers") {
  TempDir t("verify");
  auto pdf = compile_doc(minimal_root("one\\newpage two\\newpage three"), t);
  Config c;
  Verifier v(c);
  CHECK(v.rasterize(pdf).size() == 3);
}

TEST_CASE("identical files compare identical") {
  TempDir t("verify");
  auto pdf = compile_doc(minimal_root("same content"), t);
  Config c;
  Verifier v(c);
  auto d = v.compare(pdf, pdf);
  CHECK(d.verdict == VisualDiff::V::identical);
  CHECK(d.page_count_match);
  CHECK(d.mismatched_pages.empty());
}

TEST_CASE("a deleted visible word produces a bounded diff") {
  TempDir t1("verify"), t2("verify");
  auto a = compile_doc(minimal_root("alpha beta gamma"), t1);
  auto b = compile_doc(minimal_root("alpha gamma"), t2);
  Config c;
  Verifier v(c);
  auto d = v.compare(a, b);
  CHECK(d.verdict == VisualDiff::V::different);
  REQUIRE(d.mismatched_pages.size() == 1);
  const auto& p = d.mismatched_pages[0];
  CHECK(p.page == 0);
  CHECK(p.differing_pixels > 0);
  CHECK(p.bbox_x1 > p.bbox_x0);
  CHECK(p.bbox_y1 > p.bbox_y0);
  // The difference sits in the text band of the first line.
  CHECK(p.bbox_y1 < 400);
}

TEST_CASE("pair differing only in metadata compares identical") {
  TempDir t("verify");
  fs::path a = t.path() / "a.pdf";
  fs::path b = t.path() / "b.pdf";
  add_asset(t.path(), "tagged.pdf", "a.pdf");
  add_asset(t.path(), "tagged.pdf", "b.pdf");
  Config c;
  MetadataCleaner cleaner(c);
  cleaner.strip(b);
  CHECK(read_file(a) != read_file(b));
  Verifier v(c);
  CHECK(v.compare(a, b).verdict == VisualDiff::V::identical);
}

TEST_CASE("comparison is symmetric") {
  TempDir t1("verify"), t2("verify");
  auto a = compile_doc(minimal_root("left text"), t1);
  auto b = compile_doc(minimal_root("right words"), t2);
  Config c;
  Verifier v(c);
  CHECK(v.compare(a, b).verdict == v.compare(b, a).verdict);
  CHECK(v.compare(a, a).verdict == VisualDiff::V::identical);
}

TEST_CASE("incomparable when one side fails to rasterize") {
  TempDir t("verify");
  auto good = compile_doc(minimal_root("fine"), t);
  fs::path bad = t.path() / "broken.pdf";
  write_file(bad, std::string("%PDF-1.4 not actually a pdf"));
  Config c;
  Verifier v(c);
  CHECK(v.compare(good, bad).verdict == VisualDiff::V::incomparable);
}

TEST_CASE("dpi bounds are enforced") {
  Config c;
  CHECK_THROWS_AS(Verifier(c, 50), Error);
  CHECK_THROWS_AS(Verifier(c, 700), Error);
}

TEST_CASE("fuzz tolerance admits small diffs") {
  TempDir t1("verify"), t2("verify");
  auto a = compile_doc(minimal_root("word."), t1);
  auto b = compile_doc(minimal_root("word:"), t2);
  Config c;
  Verifier strict(c, 150, 0);
  CHECK(strict.compare(a, b).verdict == VisualDiff::V::different);
  long pixels = strict.compare(a, b).mismatched_pages[0].differing_pixels;
  Verifier lax(c, 150, pixels);
  CHECK(lax.compare(a, b).verdict == VisualDiff::V::identical);
}

TEST_CASE("judge: comment-only change is beneficial") {
  TempDir t("verify");
  fs::path orig = t.path() / "orig";
  fs::path clean = t.path() / "clean";
  write_file(orig / "main.tex", minimal_root("visible % note"));
  write_file(clean / "main.tex", minimal_root("visible %"));
  Config c;
  BuildRunner runner(c);
  Verifier v(c);
  auto outcome = v.judge(ingest(orig), ingest(clean), runner);
  CHECK(outcome.verdict == CleanOutcome::V::beneficial);
  CHECK(outcome.changed_sources);
  CHECK(outcome.compiles_after);
}

TEST_CASE("judge: removing a required figure breaks") {
  TempDir t("verify");
  fs::path orig = t.path() / "orig";
  fs::path clean = t.path() / "clean";
  write_file(orig / "main.tex", minimal_root("\\includegraphics{fig1}"));
  add_asset(orig, "plain1.png", "fig1.png");
  write_file(clean / "main.tex", minimal_root("\\includegraphics{fig1}"));
  Config c;
  BuildRunner runner(c);
  Verifier v(c);
  auto outcome = v.judge(ingest(orig), ingest(clean), runner);
  CHECK(outcome.verdict == CleanOutcome::V::breaks);
}

TEST_CASE("judge: no changes is neutral") {
  TempDir t("verify");
  fs::path orig = t.path() / "orig";
  write_file(orig / "main.tex", minimal_root("unchanged"));
  Config c;
  BuildRunner runner(c);
  Verifier v(c);
  auto b = ingest(orig);
  auto outcome = v.judge(b, b, runner);
  CHECK(outcome.verdict == CleanOutcome::V::neutral);
  CHECK_FALSE(outcome.changed_sources);
}

TEST_CASE("judge: visible content change breaks") {
  TempDir t("verify");
  fs::path orig = t.path() / "orig";
  fs::path clean = t.path() / "clean";
  write_file(orig / "main.tex", minimal_root("original words"));
  write_file(clean / "main.tex", minimal_root("changed words"));
  Config c;
  BuildRunner runner(c);
  Verifier v(c);
  auto outcome = v.judge(ingest(orig), ingest(clean), runner);
  CHECK(outcome.verdict == CleanOutcome::V::breaks);
  CHECK(outcome.visual.verdict == VisualDiff::V::different);
}

TEST_CASE("judge throws Incomparable when the original cannot compile") {
  TempDir t("verify");
  fs::path orig = t.path() / "orig";
  write_file(orig / "main.tex",
             std::string("\\documentclass{article}\\begin{document}\\input{gone}"
                         "\\end{document}"));
  Config c;
  BuildRunner runner(c);
  Verifier v(c);
  auto b = ingest(orig);
  try {
    v.judge(b, b, runner);
    FAIL("expected Incomparable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::incomparable);
  }
}
