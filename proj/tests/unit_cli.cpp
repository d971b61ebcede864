#include "doctest.h"
#include "testsupport.hpp"
#include "texsan/archive.hpp"
#include "texsan/bundle.hpp"
#include "texsan/cli.hpp"
#include "texsan/metadata.hpp"
#include "texsan/sanitize.hpp"

using namespace texsan;
using testsupport::add_asset;
using testsupport::corpus_dir;
using testsupport::minimal_root;
using testsupport::write_bundle;

TEST_CASE("clean on a simple bundle: exit 0 and a replayable report") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input, {{"main.tex", minimal_root("body % secret note")},
                       {"unused.dat", "dangling"}});
  fs::path out = t.path() / "out";
  fs::path report_path = t.path() / "r.json";

  int rc = cli::run({"clean", input.string(), "--out", out.string(), "--report",
                     report_path.string(), "--quiet"});
  CHECK(rc == 0);
  CHECK(fs::exists(out / "main.tex"));
  CHECK_FALSE(fs::exists(out / "unused.dat"));
  std::string cleaned = to_string(read_file(out / "main.tex"));
  CHECK(cleaned.find("secret") == std::string::npos);

  auto report = load_report(report_path);
  CHECK(report.verified);
  CHECK(report.verification.verdict == CleanOutcome::V::beneficial);
  CHECK(report.bundle_hash_after == ingest(out).content_hash());

  // Replayability: applying the recorded plan to the original reproduces
  // the sanitized bundle hash exactly.
  auto original = ingest(input);
  auto replayed = apply_plan(original, report.plan);
  TempDir t2("replay");
  emit_bundle(t2.path() / "b", replayed.files);
  CHECK(ingest(t2.path() / "b").content_hash() == report.bundle_hash_after);
}

TEST_CASE("originals are never modified") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input, {{"main.tex", minimal_root("x % y")},
                       {"junk.txt", "dangling"}});
  auto before = ingest(input).content_hash();
  fs::path out = t.path() / "out";
  CHECK(cli::run({"clean", input.string(), "--out", out.string(), "--quiet"}) == 0);
  CHECK(ingest(input).content_hash() == before);
}

TEST_CASE("refuses to write inside the input bundle") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input, {{"main.tex", minimal_root("x")}});
  int rc = cli::run({"clean", input.string(), "--out",
                     (input / "cleaned").string(), "--quiet"});
  CHECK(rc == 2);
}

TEST_CASE("keep flags disable dimensions") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input, {{"main.tex", minimal_root("keep % this comment")},
                       {"unused.dat", "dangling"}});
  fs::path out = t.path() / "out";
  int rc = cli::run({"clean", input.string(), "--out", out.string(),
                     "--keep-comments", "--keep-dangling", "--quiet"});
  CHECK(rc == 0);
  CHECK(fs::exists(out / "unused.dat"));
  CHECK(to_string(read_file(out / "main.tex")).find("this comment") !=
        std::string::npos);
}

TEST_CASE("strip-times normalizes output mtimes") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input, {{"main.tex", minimal_root("x")}});
  fs::path out = t.path() / "out";
  int rc = cli::run({"clean", input.string(), "--out", out.string(),
                     "--strip-times", "--quiet"});
  CHECK(rc == 0);
  auto b = ingest(out);
  for (const auto& f : b.files) CHECK(f.mtime == 946684800);
}

TEST_CASE("archive output round-trips through ingest") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input, {{"main.tex", minimal_root("archived output")},
                       {"unused.txt", "dangling"}});
  fs::path out = t.path() / "cleaned.tar.gz";
  int rc = cli::run({"clean", input.string(), "--out", out.string(), "--quiet"});
  CHECK(rc == 0);
  auto b = ingest(out);
  CHECK(b.has("main.tex"));
  CHECK_FALSE(b.has("unused.txt"));
}

TEST_CASE("no-verify leaves the verdict unverified") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input, {{"main.tex", minimal_root("x % y")}});
  fs::path out = t.path() / "out";
  fs::path report_path = t.path() / "r.json";
  int rc = cli::run({"clean", input.string(), "--out", out.string(), "--no-verify",
                     "--report", report_path.string(), "--quiet"});
  CHECK(rc == 0);
  auto report = load_report(report_path);
  CHECK_FALSE(report.verified);
  CHECK(report.verification.verdict == CleanOutcome::V::unverified);
}

TEST_CASE("scan finds the planted AWS key and exits 1") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input,
               {{"main.tex", minimal_root("body")},
                {"notes.txt", "key AKIAJ6X2K9Q4R7TPM2WV end\n"}});
  fs::path report_path = t.path() / "findings.jsonl";
  int rc = cli::run({"scan", input.string(), "--report", report_path.string()});
  CHECK(rc == 1);
  std::string jsonl = to_string(read_file(report_path));
  CHECK(jsonl.find("AWS access keys") != std::string::npos);
  CHECK(jsonl.find("\"H\"") != std::string::npos);
  // Redaction is the default: the full key must not appear.
  CHECK(jsonl.find("AKIAJ6X2K9Q4R7TPM2WV") == std::string::npos);
}

TEST_CASE("scan on a clean bundle exits 0") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input, {{"main.tex", minimal_root("nothing to see")}});
  CHECK(cli::run({"scan", input.string(), "--report",
                  (t.path() / "f.jsonl").string()}) == 0);
}

TEST_CASE("verify: metadata-only PDF difference exits 0") {
  TempDir t("cli");
  add_asset(t.path(), "tagged.pdf", "a.pdf");
  add_asset(t.path(), "tagged.pdf", "b.pdf");
  Config c;
  MetadataCleaner cleaner(c);
  cleaner.strip(t.path() / "b.pdf");
  int rc = cli::run({"verify", (t.path() / "a.pdf").string(),
                     (t.path() / "b.pdf").string()});
  CHECK(rc == 0);
}

TEST_CASE("verify: differing bundles exit 1") {
  TempDir t("cli");
  write_bundle(t.path() / "a", {{"main.tex", minimal_root("first version")}});
  write_bundle(t.path() / "b", {{"main.tex", minimal_root("second version")}});
  int rc = cli::run({"verify", (t.path() / "a").string(),
                     (t.path() / "b").string()});
  CHECK(rc == 1);
}

TEST_CASE("usage errors exit 2") {
  CHECK(cli::run({"clean"}) == 2);
  CHECK(cli::run({"frobnicate", "x"}) == 2);
  CHECK(cli::run({}) == 2);
}

TEST_CASE("report subcommand pretty-prints a stored report") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input, {{"main.tex", minimal_root("x % y")}});
  fs::path report_path = t.path() / "r.json";
  CHECK(cli::run({"clean", input.string(), "--out", (t.path() / "out").string(),
                  "--report", report_path.string(), "--quiet"}) == 0);
  CHECK(cli::run({"report", report_path.string()}) == 0);
}

TEST_CASE("timeout flag propagates to the build (fail-closed clean)") {
  TempDir t("cli");
  fs::path input = t.path() / "in";
  write_bundle(input,
               {{"main.tex",
                 "\\documentclass{article}\\def\\loop{\\loop}\\begin{document}"
                 "\\loop\\end{document}\n"}});
  fs::path out = t.path() / "out";
  fs::path report_path = t.path() / "r.json";
  int rc = cli::run({"clean", input.string(), "--out", out.string(), "--timeout",
                     "2", "--report", report_path.string(), "--quiet"});
  CHECK(rc == 2);
  CHECK_FALSE(fs::exists(out / "main.tex"));  // no partial clean
  auto report = load_report(report_path);
  CHECK(report.verification.verdict == CleanOutcome::V::breaks);
  CHECK(report.verification.detail.find("CompileTimeout") != std::string::npos);
}
