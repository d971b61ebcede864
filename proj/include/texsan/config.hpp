#ifndef TEXSAN_CONFIG_HPP
#define TEXSAN_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "texsan/util.hpp"

namespace texsan {

/// Flat key/value configuration. File syntax is TOML-style assignments:
/// `key = "value"` with optional [section] headers that prefix keys as
/// `section.key`. Comments start with '#'.
class Config {
 public:
  Config() = default;

  static Config load(const fs::path& file);
  void merge_file(const fs::path& file);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Backend command templates with bundled-tool defaults. Placeholders:
  //   engine:   {main} {outdir}
  //   raster:   {pdf} {dpi}
  //   metadata: {op} {file}
  std::string engine_cmd() const;
  std::string raster_cmd() const;
  std::string metadata_cmd() const;
  /// Path of the access-trace preload shim ("" disables the trace oracle).
  std::string trace_shim() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace texsan

#endif
