#include "texsan/bundle.hpp"

#include <fcntl.h>
#include <sys/stat.h>

#include <algorithm>
#include <cstring>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>

#include "texsan/archive.hpp"
#include "texsan/ast.hpp"

namespace texsan {

namespace {

/// Normalizes an entry path; rejects anything escaping the bundle root.
std::string normalize_entry(const std::string& raw) {
  fs::path p = fs::path(raw).lexically_normal();
  if (p.is_absolute())
    throw Error(Errc::corrupt_archive, "absolute path in container: " + raw);
  std::string s = p.generic_string();
  if (s == ".." || starts_with(s, "../") || s.find("/../") != std::string::npos)
    throw Error(Errc::corrupt_archive, "path escapes bundle root: " + raw);
  while (starts_with(s, "./")) s = s.substr(2);
  return s;
}

bool is_readme_name(const std::string& path) {
  if (path.find('/') != std::string::npos) return false;  // top level only
  auto lower = to_lower(path);
  return lower == "00readme" || starts_with(lower, "00readme.");
}

ReadmeDirective::Action action_from_verb(const std::string& verb) {
  auto v = to_lower(verb);
  if (v == "include") return ReadmeDirective::Action::include;
  if (v == "ignore") return ReadmeDirective::Action::ignore;
  if (v == "toplevelfile") return ReadmeDirective::Action::toplevelfile;
  return ReadmeDirective::Action::other;
}

std::vector<ReadmeDirective> parse_readme_plain(const std::string& text) {
  std::vector<ReadmeDirective> out;
  for (const auto& raw_line : split(text, '\n')) {
    std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#' || line[0] == '%') continue;
    auto space = line.find_first_of(" \t");
    if (space == std::string::npos) continue;
    ReadmeDirective d;
    d.target = trim(line.substr(0, space));
    d.raw_verb = trim(line.substr(space + 1));
    d.action = action_from_verb(d.raw_verb);
    out.push_back(std::move(d));
  }
  return out;
}

// Minimal YAML subset: entries of the form
//   - filename: main.tex
//     usage: toplevelfile
std::vector<ReadmeDirective> parse_readme_yaml(const std::string& text) {
  std::vector<ReadmeDirective> out;
  ReadmeDirective cur;
  bool have_target = false;
  auto flush = [&] {
    if (have_target) out.push_back(cur);
    cur = ReadmeDirective{};
    have_target = false;
  };
  for (const auto& raw_line : split(text, '\n')) {
    std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    if (starts_with(line, "- ")) {
      flush();
      line = trim(line.substr(2));
    }
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = to_lower(trim(line.substr(0, colon)));
    std::string value = trim(line.substr(colon + 1));
    if (!value.empty() && (value.front() == '"' || value.front() == '\'') &&
        value.size() >= 2 && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    if (key == "filename") {
      cur.target = value;
      have_target = !value.empty();
    } else if (key == "usage") {
      cur.raw_verb = value;
      cur.action = action_from_verb(value);
    }
  }
  flush();
  return out;
}

bool looks_like_yaml(const std::string& name, const std::string& text) {
  auto lower = to_lower(name);
  if (ends_with(lower, ".yaml") || ends_with(lower, ".yml")) return true;
  return text.find("filename:") != std::string::npos;
}

std::string tex_stem_lower(const std::string& path) {
  auto lower = to_lower(path);
  for (const char* ext : {".tex", ".ltx", ".latex"})
    if (ends_with(lower, ext)) return lower.substr(0, lower.size() - strlen(ext));
  return lower;
}

bool is_tex_name(const std::string& path) {
  auto lower = to_lower(path);
  return ends_with(lower, ".tex") || ends_with(lower, ".ltx") ||
         ends_with(lower, ".latex");
}

}  // namespace

const char* readme_action_name(ReadmeDirective::Action a) {
  switch (a) {
    case ReadmeDirective::Action::include: return "include";
    case ReadmeDirective::Action::ignore: return "ignore";
    case ReadmeDirective::Action::toplevelfile: return "toplevelfile";
    case ReadmeDirective::Action::other: return "other";
  }
  return "?";
}

bool SubmissionBundle::has(const std::string& path) const {
  return find(path) != nullptr;
}

const FileEntry* SubmissionBundle::find(const std::string& path) const {
  auto it = std::lower_bound(files.begin(), files.end(), path,
                             [](const FileEntry& e, const std::string& p) {
                               return e.path < p;
                             });
  if (it != files.end() && it->path == path) return &*it;
  return nullptr;
}

Bytes SubmissionBundle::read(const std::string& path) const {
  return read_file(staging / path);
}

std::string SubmissionBundle::content_hash() const {
  std::string acc;
  for (const auto& f : files) acc += f.path + ":" + f.sha256 + "\n";
  return sha256_hex(acc);
}

std::set<std::string> SubmissionBundle::ignored_paths() const {
  std::set<std::string> out;
  for (const auto& d : readme_directives)
    if (d.action == ReadmeDirective::Action::ignore) out.insert(d.target);
  return out;
}

std::set<std::string> SubmissionBundle::readme_included_paths() const {
  std::set<std::string> out;
  for (const auto& d : readme_directives)
    if (d.action == ReadmeDirective::Action::include ||
        d.action == ReadmeDirective::Action::toplevelfile)
      if (d.target_exists) out.insert(d.target);
  return out;
}

SubmissionBundle ingest(const fs::path& origin) {
  SubmissionBundle b;
  b.origin = origin.string();

  std::error_code ec;
  if (fs::is_directory(origin, ec)) {
    b.staging = fs::absolute(origin);
    for (auto it = fs::recursive_directory_iterator(origin);
         it != fs::recursive_directory_iterator(); ++it) {
      if (!it->is_regular_file()) continue;
      FileEntry e;
      e.path = normalize_entry(fs::relative(it->path(), origin).generic_string());
      e.size = it->file_size();
      struct stat st{};
      if (::stat(it->path().c_str(), &st) == 0) e.mtime = st.st_mtime;
      e.sha256 = sha256_hex(read_file(it->path()));
      b.files.push_back(std::move(e));
    }
  } else if (fs::is_regular_file(origin, ec)) {
    if (detect_archive(origin) == ArchiveKind::none)
      throw Error(Errc::corrupt_archive, origin.string() + ": not a supported container");
    b.from_archive = true;
    auto entries = read_archive(origin);
    b.staging_owner = std::make_shared<TempDir>("bundle");
    b.staging = b.staging_owner->path();
    for (auto& e : entries) {
      std::string path = normalize_entry(e.path);
      if (path.empty() || e.is_dir) continue;
      fs::path dst = b.staging / path;
      write_file(dst, e.data);
      struct timespec times[2];
      times[0].tv_sec = e.mtime;
      times[0].tv_nsec = 0;
      times[1] = times[0];
      utimensat(AT_FDCWD, dst.c_str(), times, 0);
      FileEntry fe;
      fe.path = path;
      fe.size = e.data.size();
      fe.mtime = e.mtime;
      fe.sha256 = sha256_hex(e.data);
      b.files.push_back(std::move(fe));
    }
  } else {
    throw Error(Errc::corrupt_archive, origin.string() + ": unreadable origin");
  }

  std::sort(b.files.begin(), b.files.end(),
            [](const FileEntry& x, const FileEntry& y) { return x.path < y.path; });
  b.files.erase(std::unique(b.files.begin(), b.files.end(),
                            [](const FileEntry& x, const FileEntry& y) {
                              return x.path == y.path;
                            }),
                b.files.end());
  if (b.files.empty()) throw Error(Errc::empty_bundle, b.origin + ": no files");

  for (const auto& f : b.files) {
    if (starts_with(f.path, "anc/")) b.anc_paths.insert(f.path);
    if (is_readme_name(f.path)) b.directive_files.push_back(f.path);
  }

  for (const auto& readme : b.directive_files) {
    std::string text = to_string(b.read(readme));
    auto dirs = looks_like_yaml(readme, text) ? parse_readme_yaml(text)
                                              : parse_readme_plain(text);
    for (auto& d : dirs) {
      d.target_exists = b.has(d.target);
      if (!d.target_exists)
        b.warnings.push_back(readme + ": directive targets missing file " + d.target);
      if (d.action == ReadmeDirective::Action::other)
        b.warnings.push_back(readme + ": unrecognized verb '" + d.raw_verb + "' for " +
                             d.target);
      b.readme_directives.push_back(std::move(d));
    }
  }

  b.roots = detect_roots(b);
  return b;
}

std::vector<std::string> detect_roots(const SubmissionBundle& bundle) {
  auto ignored = bundle.ignored_paths();

  std::vector<std::string> candidates;
  std::set<std::string> forced;
  for (const auto& d : bundle.readme_directives)
    if (d.action == ReadmeDirective::Action::toplevelfile && d.target_exists)
      forced.insert(d.target);

  // Candidate roots declare a document class/style.
  std::map<std::string, std::set<std::string>> inputs_of;  // file -> input stems
  for (const auto& f : bundle.files) {
    if (!is_tex_name(f.path) || ignored.count(f.path)) continue;
    auto sf = SourceFile::from_bytes(f.path, bundle.read(f.path));
    if (sf.is_binary()) continue;
    auto r = parse(sf);
    if (r.saw_document_class) candidates.push_back(f.path);

    std::function<void(const AstNode&)> walk = [&](const AstNode& node) {
      if (node.kind == NodeKind::command_use &&
          (node.name == "input" || node.name == "include") && !node.args.empty()) {
        std::string target(sf.bytes.begin() + long(node.args[0].start),
                           sf.bytes.begin() + long(node.args[0].end));
        inputs_of[f.path].insert(tex_stem_lower(trim(target)));
      }
      for (const auto& c : node.children) walk(c);
    };
    walk(r.root);
  }

  // A candidate input by another TeX file is not a root.
  std::set<std::string> result(forced.begin(), forced.end());
  for (const auto& cand : candidates) {
    bool included_elsewhere = false;
    std::string stem = tex_stem_lower(cand);
    for (const auto& [other, stems] : inputs_of) {
      if (other == cand) continue;
      if (stems.count(stem) || stems.count(to_lower(cand))) {
        included_elsewhere = true;
        break;
      }
    }
    if (!included_elsewhere) result.insert(cand);
  }

  std::vector<std::string> roots(result.begin(), result.end());
  std::sort(roots.begin(), roots.end());
  if (roots.empty())
    throw Error(Errc::no_root_found, bundle.origin + ": no compilable entry point");
  return roots;
}

void emit_bundle(const fs::path& dest,
                 const std::vector<std::pair<std::string, Bytes>>& files,
                 std::int64_t mtime_epoch) {
  if (archive_extension(dest)) {
    std::vector<ArchiveEntry> entries;
    for (const auto& [path, data] : files) {
      ArchiveEntry e;
      e.path = path;
      e.data = data;
      e.mtime = mtime_epoch >= 0 ? mtime_epoch : std::time(nullptr);
      entries.push_back(std::move(e));
    }
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    write_archive(dest, entries);
    return;
  }
  fs::create_directories(dest);
  for (const auto& [path, data] : files) {
    fs::path p = dest / path;
    write_file(p, data);
    if (mtime_epoch >= 0) {
      struct timespec times[2];
      times[0].tv_sec = mtime_epoch;
      times[0].tv_nsec = 0;
      times[1] = times[0];
      utimensat(AT_FDCWD, p.c_str(), times, 0);
    }
  }
}

}  // namespace texsan
