#ifndef TEXSAN_ARCHIVE_HPP
#define TEXSAN_ARCHIVE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "texsan/util.hpp"

namespace texsan {

struct ArchiveEntry {
  std::string path;
  Bytes data;
  std::int64_t mtime = 0;
  bool is_dir = false;
};

enum class ArchiveKind { none, tar, tar_gz, zip };

/// Sniffs the container format from magic bytes (not the file name).
ArchiveKind detect_archive(const fs::path& file);

/// Reads a .tar, .tar.gz or .zip container. Throws CorruptArchive.
std::vector<ArchiveEntry> read_archive(const fs::path& file);

void write_tar(const fs::path& file, const std::vector<ArchiveEntry>& entries);
void write_tar_gz(const fs::path& file, const std::vector<ArchiveEntry>& entries);
void write_zip(const fs::path& file, const std::vector<ArchiveEntry>& entries);

/// Picks the writer from the file extension (.tar/.tar.gz/.tgz/.zip).
void write_archive(const fs::path& file, const std::vector<ArchiveEntry>& entries);
bool archive_extension(const fs::path& file);

Bytes gzip_decompress(const Bytes& in);
Bytes gzip_compress(const Bytes& in);

}  // namespace texsan

#endif
