#ifndef TEXSAN_FILETYPES_HPP
#define TEXSAN_FILETYPES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "texsan/util.hpp"

namespace texsan {

enum class FileType { png, jpeg, pdf, text, other };

FileType sniff_file_type(const Bytes& bytes);

struct PngChunk {
  std::string type;
  std::size_t offset = 0;  // of the length field
  std::size_t length = 0;  // data length
  const std::uint8_t* data = nullptr;
};

/// Iterates PNG chunks; returns false if the signature or layout is broken.
bool png_chunks(const Bytes& bytes, std::vector<PngChunk>* out);

struct JpegSegment {
  std::uint8_t marker = 0;     // e.g. 0xE1 for APP1
  std::size_t offset = 0;      // of the 0xFF byte
  std::size_t total_size = 0;  // marker + length + payload
  const std::uint8_t* payload = nullptr;
  std::size_t payload_size = 0;
};

/// Segments up to (and excluding) SOS; scan data follows SOS.
bool jpeg_segments(const Bytes& bytes, std::vector<JpegSegment>* out,
                   std::size_t* scan_offset);

/// Digest of the rendering-relevant content of an image/PDF payload:
/// metadata-only edits leave it unchanged, pixel/content edits change it.
std::string content_digest(const Bytes& bytes);

}  // namespace texsan

#endif
