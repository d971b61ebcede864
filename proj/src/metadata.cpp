#include "texsan/metadata.hpp"

#include <fcntl.h>
#include <sys/stat.h>

#include <regex>

#include "texsan/subprocess.hpp"

namespace texsan {

const char* sensitive_class_name(SensitiveClass c) {
  switch (c) {
    case SensitiveClass::none: return "none";
    case SensitiveClass::username: return "username";
    case SensitiveClass::software: return "software";
    case SensitiveClass::email: return "email";
    case SensitiveClass::hardware: return "hardware";
    case SensitiveClass::gps: return "gps";
    case SensitiveClass::timestamp: return "timestamp";
  }
  return "?";
}

bool whitelisted_key(const std::string& key) {
  static const std::set<std::string> kKeep = {
      "ImageWidth", "ImageHeight", "BitDepth", "ColorType", "ICCProfilePresent"};
  return kKeep.count(key) > 0;
}

SensitiveClass classify_metadata(const std::string& key, const std::string& value) {
  auto k = to_lower(key);
  static const std::regex email_re(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})");
  if (starts_with(k, "gps")) return SensitiveClass::gps;
  if (std::regex_search(value, email_re)) return SensitiveClass::email;
  if (k == "artist" || k == "author" || k == "owner" || k == "ownername" ||
      k.find("username") != std::string::npos)
    return SensitiveClass::username;
  if (k == "make" || k == "model" || k == "lensmodel" || k == "serialnumber" ||
      k.find("hardware") != std::string::npos)
    return SensitiveClass::hardware;
  if (k.find("date") != std::string::npos || k.find("time") != std::string::npos)
    return SensitiveClass::timestamp;
  if (k == "software" || k == "producer" || k == "creator" || k == "creatortool")
    return SensitiveClass::software;
  return SensitiveClass::none;
}

bool MetadataCleaner::backend_available() const {
  auto argv = split_command(
      expand_placeholders(config_.metadata_cmd(), {{"op", "extract"}, {"file", "/"}}));
  if (argv.empty()) return false;
  std::error_code ec;
  if (fs::exists(fs::path(argv[0]), ec)) return true;
  // PATH lookup: probe with a trivial run.
  return !argv[0].empty() && argv[0].find('/') == std::string::npos;
}

std::vector<MetadataRecord> MetadataCleaner::extract(const fs::path& file) const {
  auto cmd = expand_placeholders(config_.metadata_cmd(),
                                 {{"op", "extract"}, {"file", file.string()}});
  auto argv = split_command(cmd);
  if (argv.empty()) throw Error(Errc::backend_missing, "metadata backend not configured");

  RunOptions opts;
  opts.timeout_seconds = 60;
  RunResult res;
  try {
    res = run_process(argv, opts);
  } catch (const Error&) {
    throw Error(Errc::backend_missing, "metadata backend failed to start");
  }
  std::vector<MetadataRecord> out;
  if (res.exit_code == 127)
    throw Error(Errc::backend_missing, "metadata backend not found: " + argv[0]);
  if (res.exit_code != 0) return out;  // unsupported or crashed: empty list

  for (const auto& line : split(res.out, '\n')) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    MetadataRecord r;
    r.file = file.string();
    r.key = line.substr(0, tab);
    r.value = line.substr(tab + 1);
    if (trim(r.value).empty()) continue;
    r.sensitive_class = classify_metadata(r.key, r.value);
    out.push_back(std::move(r));
  }
  return out;
}

MetadataCleaner::StripResult MetadataCleaner::strip(const fs::path& file) const {
  auto cmd = expand_placeholders(config_.metadata_cmd(),
                                 {{"op", "strip"}, {"file", file.string()}});
  auto argv = split_command(cmd);
  RunOptions opts;
  opts.timeout_seconds = 60;
  auto res = run_process(argv, opts);
  StripResult out;
  if (res.exit_code == 127)
    throw Error(Errc::backend_missing, "metadata backend not found: " + argv[0]);
  if (res.exit_code == 3) {
    out.supported = false;  // UnsupportedType: file left unchanged
    return out;
  }
  if (res.exit_code != 0) {
    out.supported = false;
    return out;
  }
  for (const auto& line : split(res.out, '\n'))
    if (!line.empty()) out.removed_keys.push_back(line);
  return out;
}

void normalize_timestamps(const fs::path& dir, std::int64_t epoch) {
  struct timespec times[2];
  times[0].tv_sec = epoch;
  times[0].tv_nsec = 0;
  times[1] = times[0];
  for (auto it = fs::recursive_directory_iterator(dir);
       it != fs::recursive_directory_iterator(); ++it) {
    utimensat(AT_FDCWD, it->path().c_str(), times, 0);
  }
  utimensat(AT_FDCWD, dir.c_str(), times, 0);
}

}  // namespace texsan
