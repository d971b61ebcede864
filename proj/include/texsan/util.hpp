#ifndef TEXSAN_UTIL_HPP
#define TEXSAN_UTIL_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace texsan {

namespace fs = std::filesystem;

/// Error codes for operational failures. Domain verdicts (breaks, dangling,
/// ...) are values, not errors; these are the cases where an operation cannot
/// produce a result at all.
enum class Errc {
  binary_input,
  overlapping_edits,
  corrupt_archive,
  empty_bundle,
  no_root_found,
  compile_timeout,
  log_overflow,
  compile_failed,
  tracing_unavailable,
  backend_missing,
  unsupported_type,
  missing_bbl,
  stale_plan,
  write_failure,
  plugin_missing,
  render_failure,
  incomparable,
  usage_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

const char* errc_name(Errc c);

// ---- bytes / strings ----

using Bytes = std::vector<std::uint8_t>;

std::string to_string(const Bytes& b);
Bytes to_bytes(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
/// Replace every "{name}" placeholder; unknown placeholders are left intact.
std::string expand_placeholders(std::string_view tmpl,
                                const std::vector<std::pair<std::string, std::string>>& vars);

// ---- hashing ----

/// SHA-256 of a byte buffer, lowercase hex.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const Bytes& b);
std::string sha256_hex(std::string_view s);

std::string base64_encode(const Bytes& b);
Bytes base64_decode(std::string_view s);

// ---- filesystem ----

Bytes read_file(const fs::path& p);
void write_file(const fs::path& p, const Bytes& b);
void write_file(const fs::path& p, std::string_view s);
void copy_tree(const fs::path& from, const fs::path& to);

/// Temp directory removed on destruction (best effort).
class TempDir {
 public:
  explicit TempDir(std::string_view tag = "texsan");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  void keep() { keep_ = true; }

 private:
  fs::path path_;
  bool keep_ = false;
};

/// Directory of the running executable (for locating sibling tools).
fs::path self_exe_dir();

/// Directory of the binary or shared object containing this library
/// (differs from self_exe_dir when embedded, e.g. in a Python extension).
fs::path self_module_dir();

/// Locates a bundled tool: $TEXSAN_BIN_DIR, then next to the running
/// binary, then next to this library; falls back to the bare name (PATH).
std::string find_bundled_tool(const std::string& name);

/// Epoch seconds formatted as "D:YYYYMMDDHHmmSSZ" (PDF date, UTC).
std::string pdf_date(std::int64_t epoch_seconds);
/// Epoch seconds formatted as ISO-8601 UTC.
std::string iso8601(std::int64_t epoch_seconds);

/// SOURCE_DATE_EPOCH if set and parseable, else current time.
std::int64_t build_epoch_now();

}  // namespace texsan

#endif
