#include <sys/stat.h>

#include "doctest.h"
#include "testsupport.hpp"
#include "texsan/config.hpp"
#include "texsan/filetypes.hpp"
#include "texsan/metadata.hpp"

using namespace texsan;
using testsupport::add_asset;
using testsupport::corpus_dir;

namespace {

std::map<std::string, std::string> record_map(const std::vector<MetadataRecord>& rs) {
  std::map<std::string, std::string> m;
  for (const auto& r : rs) m[r.key] = r.value;
  return m;
}

}  // namespace

TEST_CASE("classifier is deterministic over key/value rules") {
  CHECK(classify_metadata("GPSLatitude", "50/1 46/1 30/1") == SensitiveClass::gps);
  CHECK(classify_metadata("GPSLongitudeRef", "E") == SensitiveClass::gps);
  CHECK(classify_metadata("Producer", "plotmaker 2.1") == SensitiveClass::software);
  CHECK(classify_metadata("Software", "plotmaker") == SensitiveClass::software);
  CHECK(classify_metadata("Artist", "A. Researcher") == SensitiveClass::username);
  CHECK(classify_metadata("Author", "A. Researcher") == SensitiveClass::username);
  CHECK(classify_metadata("Contact", "mail me a@b.io") == SensitiveClass::email);
  CHECK(classify_metadata("Model", "PixelCam X100") == SensitiveClass::hardware);
  CHECK(classify_metadata("ModifyDate", "2024:05:11") == SensitiveClass::timestamp);
  CHECK(classify_metadata("ImageWidth", "24") == SensitiveClass::none);
}

TEST_CASE("jpeg extraction finds GPS records") {
  Config c;
  MetadataCleaner cleaner(c);
  auto records = cleaner.extract(corpus_dir() / "assets" / "gps.jpg");
  int gps = 0;
  for (const auto& r : records)
    if (r.sensitive_class == SensitiveClass::gps) ++gps;
  CHECK(gps >= 2);  // GPSLatitude and GPSLongitude at least
  auto m = record_map(records);
  CHECK(m.count("GPSLatitude") == 1);
  CHECK(m.count("GPSLongitude") == 1);
  CHECK(m.at("Software") == "plotmaker 2.1");
}

TEST_CASE("plain tex files yield no records") {
  Config c;
  MetadataCleaner cleaner(c);
  TempDir t("meta");
  write_file(t.path() / "main.tex", std::string("\\documentclass{article}\n"));
  auto records = cleaner.extract(t.path() / "main.tex");
  CHECK(records.empty());
}

TEST_CASE("pdf extraction sees producer and author") {
  Config c;
  MetadataCleaner cleaner(c);
  auto records = cleaner.extract(corpus_dir() / "assets" / "tagged.pdf");
  auto m = record_map(records);
  CHECK(m.at("Producer") == "plotmaker 2.1");
  CHECK(m.at("Author") == "A. Researcher");
  bool saw_software = false;
  for (const auto& r : records)
    if (r.key == "Producer" && r.sensitive_class == SensitiveClass::software)
      saw_software = true;
  CHECK(saw_software);
}

TEST_CASE("strip removes everything but whitelisted structural keys") {
  Config c;
  MetadataCleaner cleaner(c);
  for (const char* asset : {"gps.jpg", "gps.png", "tagged.pdf"}) {
    TempDir t("meta");
    fs::path f = t.path() / asset;
    add_asset(t.path(), asset, asset);
    auto before = cleaner.extract(f);
    CHECK(!before.empty());
    auto res = cleaner.strip(f);
    CHECK(res.supported);
    CHECK(!res.removed_keys.empty());
    auto after = cleaner.extract(f);
    for (const auto& r : after)
      CHECK_MESSAGE(whitelisted_key(r.key),
                    asset << " still carries " << r.key << "=" << r.value);
  }
}

TEST_CASE("strip preserves the rendering-relevant content digest") {
  Config c;
  MetadataCleaner cleaner(c);
  for (const char* asset : {"gps.jpg", "gps.png", "tagged.pdf"}) {
    TempDir t("meta");
    fs::path f = t.path() / asset;
    add_asset(t.path(), asset, asset);
    auto before = content_digest(read_file(f));
    cleaner.strip(f);
    auto after = content_digest(read_file(f));
    CHECK_MESSAGE(before == after, asset << " content digest changed");
  }
}

TEST_CASE("file with no metadata is unchanged by strip") {
  Config c;
  MetadataCleaner cleaner(c);
  TempDir t("meta");
  add_asset(t.path(), "plain1.png", "fig.png");
  Bytes before = read_file(t.path() / "fig.png");
  auto res = cleaner.strip(t.path() / "fig.png");
  CHECK(res.supported);
  CHECK(res.removed_keys.empty());
  CHECK(read_file(t.path() / "fig.png") == before);
}

TEST_CASE("unsupported type is left unchanged and reported") {
  Config c;
  MetadataCleaner cleaner(c);
  TempDir t("meta");
  write_file(t.path() / "data.bin", std::string("\x00\x01\x02 raw", 8));
  Bytes before = read_file(t.path() / "data.bin");
  auto res = cleaner.strip(t.path() / "data.bin");
  CHECK_FALSE(res.supported);
  CHECK(read_file(t.path() / "data.bin") == before);
}

TEST_CASE("missing backend raises BackendMissing") {
  Config c;
  c.set("metadata.backend_cmd", "/nonexistent/metabackend {op} {file}");
  MetadataCleaner cleaner(c);
  TempDir t("meta");
  add_asset(t.path(), "plain1.png", "fig.png");
  CHECK_THROWS_AS(cleaner.extract(t.path() / "fig.png"), Error);
}

TEST_CASE("timestamp normalization sets every mtime to the epoch") {
  TempDir t("meta");
  write_file(t.path() / "a.tex", std::string("x"));
  write_file(t.path() / "sub/b.txt", std::string("y"));
  const std::int64_t epoch = 946684800;  // 2000-01-01T00:00:00Z
  normalize_timestamps(t.path(), epoch);
  for (auto it = fs::recursive_directory_iterator(t.path());
       it != fs::recursive_directory_iterator(); ++it) {
    struct stat st{};
    REQUIRE(::stat(it->path().c_str(), &st) == 0);
    CHECK(st.st_mtime == epoch);
  }
}
