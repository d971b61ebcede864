#include "doctest.h"
#include "testsupport.hpp"
#include "texsan/bench.hpp"
#include "texsan/config.hpp"

using namespace texsan;
using testsupport::corpus_dir;
using testsupport::minimal_root;
using testsupport::write_bundle;

namespace {

std::map<int, TestStatus> status_map(const std::vector<TestCaseResult>& rs) {
  std::map<int, TestStatus> m;
  for (const auto& r : rs) m[r.id] = r.status;
  return m;
}

}  // namespace

TEST_CASE("built-in sanitizer passes all nine cleanup tests") {
  Config c;
  Harness harness(c, corpus_dir() / "mwe");
  auto results = harness.run_test_suite(Harness::builtin_plugin());
  REQUIRE(results.size() == 9);
  for (const auto& r : results)
    CHECK_MESSAGE(r.status == TestStatus::pass, "test " << r.id << ": " << r.note);
}

TEST_CASE("naive line-deleting cleaner fails the discriminating tests") {
  Config c;
  Harness harness(c, corpus_dir() / "mwe");
  auto results = harness.run_test_suite(Harness::naive_plugin());
  auto m = status_map(results);
  CHECK(m.at(2) != TestStatus::pass);  // escaped percent
  CHECK(m.at(4) != TestStatus::pass);  // verbatim retention
}

TEST_CASE("missing plugin raises PluginMissing") {
  Config c;
  Harness harness(c, corpus_dir() / "mwe");
  CleanerPlugin ghost;
  ghost.name = "ghost";
  ghost.invoke_cmd = "/nonexistent/cleaner {input_dir} {output_dir}";
  CHECK_THROWS_AS(harness.run_test_suite(ghost), Error);
}

TEST_CASE("a plugin that writes into its input is flagged as crash") {
  Config c;
  Harness harness(c, corpus_dir() / "mwe");
  CleanerPlugin vandal;
  vandal.name = "vandal";
  vandal.invoke_cmd =
      "/bin/sh -c 'chmod -R u+w {input_dir} && echo spoiled >> {input_dir}/main.tex "
      "&& cp -r {input_dir} {output_dir}'";
  auto results = harness.run_test_suite(vandal);
  for (const auto& r : results) CHECK(r.status == TestStatus::crash);
}

TEST_CASE("score_corpus over/under removal histogram") {
  // Fixture: three dangling files; the plugin removes two of them plus one
  // required file -> over=1, under=1.
  TempDir corpus_root("score");
  fs::path bundle = corpus_root.path() / "b1";
  write_bundle(bundle, {{"main.tex", minimal_root("uses \\input{part} only")},
                        {"part.tex", "required part\n"},
                        {"d1.txt", "dangling 1"},
                        {"d2.txt", "dangling 2"},
                        {"d3.txt", "dangling 3"}});
  Config c;
  Harness harness(c, corpus_dir() / "mwe");

  CleanerPlugin faulty;
  faulty.name = "faulty";
  faulty.invoke_cmd =
      "/bin/sh -c 'cp -r {input_dir} {output_dir} && chmod -R u+w {output_dir} && "
      "rm {output_dir}/d1.txt {output_dir}/d2.txt {output_dir}/part.tex'";
  auto summary = harness.score_corpus(faulty, {bundle});
  CHECK(summary.total == 1);
  CHECK(summary.over_removal_hist.at(1) == 1);   // part.tex
  CHECK(summary.under_removal_hist.at(1) == 1);  // d3.txt
  CHECK(summary.breaks == 1);  // removing part.tex breaks the compile
}

TEST_CASE("identity plugin on a clean bundle is neutral with zero histograms") {
  TempDir corpus_root("score");
  fs::path bundle = corpus_root.path() / "b1";
  write_bundle(bundle, {{"main.tex", minimal_root("already clean")}});
  Config c;
  Harness harness(c, corpus_dir() / "mwe");
  CleanerPlugin identity;
  identity.name = "identity";
  identity.invoke_cmd = "/bin/cp -r {input_dir} {output_dir}";
  auto summary = harness.score_corpus(identity, {bundle});
  CHECK(summary.total == 1);
  CHECK(summary.beneficial == 0);
  CHECK(summary.breaks == 0);
  CHECK(summary.neutral == 1);
  CHECK(summary.over_removal_hist.at(0) == 1);
  CHECK(summary.under_removal_hist.at(0) == 1);
}

TEST_CASE("builtin sanitizer scores beneficial with zero under-removal") {
  TempDir corpus_root("score");
  fs::path bundle = corpus_root.path() / "b1";
  write_bundle(bundle, {{"main.tex", minimal_root("text % note")},
                        {"unused.log", "dangling"}});
  Config c;
  Harness harness(c, corpus_dir() / "mwe");
  auto summary = harness.score_corpus(Harness::builtin_plugin(), {bundle});
  CHECK(summary.total == 1);
  CHECK(summary.beneficial == 1);
  CHECK(summary.breaks == 0);
  CHECK(summary.over_removal_hist.at(0) == 1);
  CHECK(summary.under_removal_hist.at(0) == 1);
}

TEST_CASE("plugin table formatting") {
  std::vector<std::pair<std::string, std::vector<TestCaseResult>>> rows;
  std::vector<TestCaseResult> rs;
  for (int i = 1; i <= 9; ++i)
    rs.push_back({i, i % 3 == 0 ? TestStatus::fail : TestStatus::pass, ""});
  rows.emplace_back("demo", rs);
  auto table = Harness::format_results_table(rows);
  CHECK(table.find("demo") != std::string::npos);
  CHECK(table.find(" x ") != std::string::npos);
  CHECK(table.find(" + ") != std::string::npos);
}

TEST_CASE("plugin definitions load from a config file") {
  TempDir t("plug");
  write_file(t.path() / "plugins.conf",
             std::string("plugin.mycleaner.cmd = \"/usr/bin/mycleaner {input_dir} "
                         "{output_dir}\"\nplugin.mycleaner.needs_root = true\n"));
  auto plugins = Harness::load_plugins(t.path() / "plugins.conf");
  REQUIRE(plugins.size() == 1);
  CHECK(plugins[0].name == "mycleaner");
  CHECK(plugins[0].needs_root_hint);
}
