#include "doctest.h"
#include "testsupport.hpp"
#include "texsan/archive.hpp"
#include "texsan/bundle.hpp"

using namespace texsan;
using testsupport::minimal_root;
using testsupport::write_bundle;

TEST_CASE("directory ingest with a single obvious root") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("hello")},
                          {"fig.pdf", "%PDF-1.4 fake"}});
  auto b = ingest(t.path());
  CHECK(b.files.size() == 2);
  REQUIRE(b.roots.size() == 1);
  CHECK(b.roots[0] == "main.tex");
  CHECK_FALSE(b.from_archive);
}

TEST_CASE("readme ignore excludes a file from root detection") {
  TempDir t("bundle");
  write_bundle(t.path(),
               {{"main.tex", minimal_root("x")},
                {"chapter1.tex", minimal_root("y")},
                {"00README.XXX", "chapter1.tex ignore\n"}});
  auto b = ingest(t.path());
  REQUIRE(b.roots.size() == 1);
  CHECK(b.roots[0] == "main.tex");
  REQUIRE(b.readme_directives.size() == 1);
  CHECK(b.readme_directives[0].action == ReadmeDirective::Action::ignore);
  CHECK(b.directive_files == std::vector<std::string>{"00README.XXX"});
}

TEST_CASE("yaml readme dialect") {
  TempDir t("bundle");
  write_bundle(t.path(),
               {{"a.tex", minimal_root("x")},
                {"b.tex", minimal_root("y")},
                {"00README.yaml",
                 "sources:\n  - filename: a.tex\n    usage: toplevelfile\n"
                 "  - filename: b.tex\n    usage: ignore\n"}});
  auto b = ingest(t.path());
  REQUIRE(b.roots.size() == 1);
  CHECK(b.roots[0] == "a.tex");
}

TEST_CASE("unknown readme verbs are preserved and warned about") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("x")},
                          {"fig.ps", "ps"},
                          {"00README.XXX", "fig.ps landscape\n"}});
  auto b = ingest(t.path());
  REQUIRE(b.readme_directives.size() == 1);
  CHECK(b.readme_directives[0].action == ReadmeDirective::Action::other);
  CHECK(b.readme_directives[0].raw_verb == "landscape");
  bool warned = false;
  for (const auto& w : b.warnings)
    if (w.find("landscape") != std::string::npos) warned = true;
  CHECK(warned);
}

TEST_CASE("anc paths are collected") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("x")},
                          {"anc/data.csv", "a,b\n1,2\n"}});
  auto b = ingest(t.path());
  CHECK(b.anc_paths == std::set<std::string>{"anc/data.csv"});
}

TEST_CASE("root detection: included file is not a root") {
  TempDir t("bundle");
  write_bundle(
      t.path(),
      {{"main.tex",
        "\\documentclass{article}\\begin{document}\\input{body}\\end{document}\n"},
       {"body.tex", "plain text\n"}});
  auto b = ingest(t.path());
  CHECK(b.roots == std::vector<std::string>{"main.tex"});
}

TEST_CASE("multi-root bundle keeps both roots") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"a.tex", minimal_root("first")},
                          {"b.tex", minimal_root("second")}});
  auto b = ingest(t.path());
  CHECK(b.roots == std::vector<std::string>{"a.tex", "b.tex"});
}

TEST_CASE("documentstyle marks a root") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", "\\documentstyle{article}\nhello\n"}});
  auto b = ingest(t.path());
  CHECK(b.roots == std::vector<std::string>{"main.tex"});
}

TEST_CASE("a candidate input by another candidate is demoted") {
  TempDir t("bundle");
  write_bundle(
      t.path(),
      {{"main.tex",
        "\\documentclass{article}\\begin{document}\\input{appendix}\\end{document}\n"},
       {"appendix.tex", minimal_root("appendix text")}});
  auto b = ingest(t.path());
  CHECK(b.roots == std::vector<std::string>{"main.tex"});
}

TEST_CASE("no root found") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"notes.txt", "no tex here"}});
  try {
    ingest(t.path());
    FAIL("expected NoRootFound");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_root_found);
  }
}

TEST_CASE("empty bundle") {
  TempDir t("bundle");
  fs::create_directories(t.path() / "sub");
  CHECK_THROWS_AS(ingest(t.path()), Error);
}

TEST_CASE("tar.gz round trip preserves mtimes and content") {
  TempDir t("src");
  std::vector<ArchiveEntry> entries;
  ArchiveEntry e1;
  e1.path = "main.tex";
  e1.data = to_bytes(minimal_root("archived"));
  e1.mtime = 1400000000;
  entries.push_back(e1);
  ArchiveEntry e2;
  e2.path = "sub/extra.txt";
  e2.data = to_bytes("extra");
  e2.mtime = 1400000123;
  entries.push_back(e2);
  fs::path arc = t.path() / "bundle.tar.gz";
  write_tar_gz(arc, entries);

  auto b = ingest(arc);
  CHECK(b.from_archive);
  CHECK(b.files.size() == 2);
  const FileEntry* f = b.find("main.tex");
  REQUIRE(f != nullptr);
  CHECK(f->mtime == 1400000000);
  CHECK(to_string(b.read("sub/extra.txt")) == "extra");
  CHECK(b.roots == std::vector<std::string>{"main.tex"});
}

TEST_CASE("zip round trip") {
  TempDir t("src");
  std::vector<ArchiveEntry> entries;
  ArchiveEntry e;
  e.path = "main.tex";
  e.data = to_bytes(minimal_root("zipped"));
  e.mtime = 1500000000;
  entries.push_back(e);
  fs::path arc = t.path() / "bundle.zip";
  write_zip(arc, entries);
  auto b = ingest(arc);
  CHECK(b.files.size() == 1);
  CHECK(to_string(b.read("main.tex")).find("zipped") != std::string::npos);
  // DOS timestamps have 2-second resolution.
  CHECK(std::abs(b.find("main.tex")->mtime - 1500000000) <= 2);
}

TEST_CASE("plain tar round trip") {
  TempDir t("src");
  std::vector<ArchiveEntry> entries;
  ArchiveEntry e;
  e.path = "main.tex";
  e.data = to_bytes(minimal_root("tarred"));
  e.mtime = 1600000000;
  entries.push_back(e);
  fs::path arc = t.path() / "bundle.tar";
  write_tar(arc, entries);
  auto b = ingest(arc);
  CHECK(b.files.size() == 1);
  CHECK(b.find("main.tex")->mtime == 1600000000);
}

TEST_CASE("corrupt archive is rejected") {
  TempDir t("src");
  fs::path arc = t.path() / "bundle.tar.gz";
  write_file(arc, std::string("\x1f\x8b garbage beyond the magic"));
  CHECK_THROWS_AS(ingest(arc), Error);
}

TEST_CASE("path traversal entries are rejected") {
  TempDir t("src");
  std::vector<ArchiveEntry> entries;
  ArchiveEntry good;
  good.path = "main.tex";
  good.data = to_bytes(minimal_root("x"));
  entries.push_back(good);
  ArchiveEntry evil;
  evil.path = "../evil.txt";
  evil.data = to_bytes("escape");
  entries.push_back(evil);
  fs::path arc = t.path() / "bundle.tar";
  write_tar(arc, entries);
  CHECK_THROWS_AS(ingest(arc), Error);
}

TEST_CASE("ingest is hash-stable across re-emission") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("stable")},
                          {"notes.txt", "dangling notes"}});
  auto a = ingest(t.path());

  TempDir t2("bundle2");
  std::vector<std::pair<std::string, Bytes>> files;
  for (const auto& f : a.files) files.emplace_back(f.path, a.read(f.path));
  emit_bundle(t2.path() / "copy", files);
  auto b = ingest(t2.path() / "copy");
  CHECK(a.content_hash() == b.content_hash());
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    CHECK(a.files[i].path == b.files[i].path);
    CHECK(a.files[i].sha256 == b.files[i].sha256);
  }
}

TEST_CASE("hidden files are inventoried") {
  TempDir t("bundle");
  write_bundle(t.path(), {{"main.tex", minimal_root("x")},
                          {".nfs0001", "nfs remnant"}});
  auto b = ingest(t.path());
  CHECK(b.has(".nfs0001"));
}
