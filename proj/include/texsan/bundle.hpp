#ifndef TEXSAN_BUNDLE_HPP
#define TEXSAN_BUNDLE_HPP

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "texsan/util.hpp"

namespace texsan {

struct FileEntry {
  std::string path;  // normalized, forward slashes, relative to bundle root
  std::uint64_t size = 0;
  std::int64_t mtime = 0;
  std::string sha256;
};

struct ReadmeDirective {
  enum class Action { include, ignore, toplevelfile, other };
  std::string target;
  Action action = Action::other;
  std::string raw_verb;  // verbatim verb, kept for `other`
  bool target_exists = false;
};

const char* readme_action_name(ReadmeDirective::Action a);

struct SubmissionBundle {
  std::string origin;
  bool from_archive = false;
  std::vector<FileEntry> files;  // sorted by path, unique
  std::vector<std::string> roots;
  std::vector<ReadmeDirective> readme_directives;
  std::set<std::string> anc_paths;
  std::vector<std::string> directive_files;  // the 00README file(s) themselves
  std::vector<std::string> warnings;

  /// Directory holding the materialized files (the origin itself for
  /// directories, an extraction dir for archives).
  fs::path staging;
  std::shared_ptr<TempDir> staging_owner;

  bool has(const std::string& path) const;
  const FileEntry* find(const std::string& path) const;
  Bytes read(const std::string& path) const;
  /// Hash over the sorted (path, content hash) inventory.
  std::string content_hash() const;
  /// Paths the 00README marks as ignored (excluded from compilation).
  std::set<std::string> ignored_paths() const;
  std::set<std::string> readme_included_paths() const;
};

/// Ingest a directory, .tar(.gz) or .zip submission. Parses 00README
/// directives and detects root TeX files.
SubmissionBundle ingest(const fs::path& origin);

/// Root detection on an already-ingested bundle: every TeX file declaring a
/// document class/style, minus files input by another candidate, honoring
/// readme directives. Throws NoRootFound.
std::vector<std::string> detect_roots(const SubmissionBundle& bundle);

/// Writes a bundle snapshot (path -> bytes) as a directory or archive,
/// depending on the destination's extension.
void emit_bundle(const fs::path& dest,
                 const std::vector<std::pair<std::string, Bytes>>& files,
                 std::int64_t mtime_epoch = -1);

}  // namespace texsan

#endif
