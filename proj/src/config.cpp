#include "texsan/config.hpp"

#include <cstdlib>
#include <fstream>

namespace texsan {

namespace {

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\''))) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

}  // namespace

Config Config::load(const fs::path& file) {
  Config c;
  c.merge_file(file);
  return c;
}

void Config::merge_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::usage_error, "cannot open config file " + file.string());
  std::string line, section;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim(line.substr(0, eq));
    std::string value = unquote(trim(line.substr(eq + 1)));
    if (!section.empty()) key = section + "." + key;
    values_[key] = value;
  }
}

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  char* end = nullptr;
  long long n = std::strtoll(v->c_str(), &end, 10);
  return (end && *end == '\0') ? n : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  char* end = nullptr;
  double d = std::strtod(v->c_str(), &end);
  return (end && *end == '\0') ? d : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto s = to_lower(*v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  return fallback;
}

std::string Config::engine_cmd() const {
  auto v = get("build.engine_cmd");
  if (v) return *v;
  return find_bundled_tool("minitex") +
         " -recorder -interaction=nonstopmode -output-directory={outdir} {main}";
}

std::string Config::raster_cmd() const {
  auto v = get("verify.raster_cmd");
  if (v) return *v;
  return find_bundled_tool("pdfraster") + " --dpi {dpi} {pdf}";
}

std::string Config::metadata_cmd() const {
  auto v = get("metadata.backend_cmd");
  if (v) return *v;
  return find_bundled_tool("metatool") + " {op} {file}";
}

std::string Config::trace_shim() const {
  auto v = get("build.trace_shim");
  if (v) return *v;
  std::string p = find_bundled_tool("libaccesstrace.so");
  return p == "libaccesstrace.so" ? "" : p;
}

}  // namespace texsan
