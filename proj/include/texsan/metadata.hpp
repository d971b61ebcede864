#ifndef TEXSAN_METADATA_HPP
#define TEXSAN_METADATA_HPP

#include <string>
#include <vector>

#include "texsan/bundle.hpp"
#include "texsan/config.hpp"
#include "texsan/util.hpp"

namespace texsan {

enum class SensitiveClass { none, username, software, email, hardware, gps, timestamp };
const char* sensitive_class_name(SensitiveClass c);

struct MetadataRecord {
  std::string file;
  std::string key;
  std::string value;
  SensitiveClass sensitive_class = SensitiveClass::none;
};

/// Deterministic (key, value) -> class mapping.
SensitiveClass classify_metadata(const std::string& key, const std::string& value);

/// Keys that survive stripping: structural properties a renderer needs.
bool whitelisted_key(const std::string& key);

class MetadataCleaner {
 public:
  explicit MetadataCleaner(const Config& config) : config_(config) {}

  /// One record per key/value pair the backend reports. BackendMissing when
  /// no backend can run; a crash on one file degrades to an empty list.
  std::vector<MetadataRecord> extract(const fs::path& file) const;

  struct StripResult {
    bool supported = true;
    std::vector<std::string> removed_keys;
  };
  /// Strips `file` in place via the backend. Unsupported types are left
  /// unchanged and reported.
  StripResult strip(const fs::path& file) const;

  bool backend_available() const;

 private:
  const Config& config_;
};

/// Sets every file mtime under `dir` (or the bundle emit path) to `epoch`.
void normalize_timestamps(const fs::path& dir, std::int64_t epoch);

}  // namespace texsan

#endif
