#include "texsan/filetypes.hpp"

#include <algorithm>
#include <cstring>
#include <string_view>

namespace texsan {

namespace {

const std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

}  // namespace

FileType sniff_file_type(const Bytes& b) {
  if (b.size() >= 8 && std::memcmp(b.data(), kPngSig, 8) == 0) return FileType::png;
  if (b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF)
    return FileType::jpeg;
  if (b.size() >= 5 && std::memcmp(b.data(), "%PDF-", 5) == 0) return FileType::pdf;
  if (std::find(b.begin(), b.end(), std::uint8_t(0)) == b.end()) return FileType::text;
  return FileType::other;
}

bool png_chunks(const Bytes& b, std::vector<PngChunk>* out) {
  if (b.size() < 8 || std::memcmp(b.data(), kPngSig, 8) != 0) return false;
  std::size_t off = 8;
  while (off + 12 <= b.size()) {
    std::uint32_t len = be32(b.data() + off);
    if (off + 12 + len > b.size()) return false;
    PngChunk c;
    c.offset = off;
    c.length = len;
    c.type.assign(reinterpret_cast<const char*>(b.data() + off + 4), 4);
    c.data = b.data() + off + 8;
    out->push_back(c);
    off += 12 + len;
    if (c.type == "IEND") break;
  }
  return true;
}

bool jpeg_segments(const Bytes& b, std::vector<JpegSegment>* out,
                   std::size_t* scan_offset) {
  *scan_offset = 0;
  if (b.size() < 4 || b[0] != 0xFF || b[1] != 0xD8) return false;
  std::size_t off = 2;
  while (off + 4 <= b.size()) {
    if (b[off] != 0xFF) return false;
    std::uint8_t marker = b[off + 1];
    if (marker == 0xD8 || marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) {
      off += 2;  // standalone markers
      continue;
    }
    std::size_t seg_len = (std::size_t(b[off + 2]) << 8) | b[off + 3];
    if (seg_len < 2 || off + 2 + seg_len > b.size()) return false;
    JpegSegment s;
    s.marker = marker;
    s.offset = off;
    s.total_size = 2 + seg_len;
    s.payload = b.data() + off + 4;
    s.payload_size = seg_len - 2;
    out->push_back(s);
    off += 2 + seg_len;
    if (marker == 0xDA) {  // SOS: entropy-coded data follows
      *scan_offset = off;
      return true;
    }
  }
  return true;
}

std::string content_digest(const Bytes& b) {
  switch (sniff_file_type(b)) {
    case FileType::png: {
      std::vector<PngChunk> chunks;
      if (!png_chunks(b, &chunks)) break;
      std::string acc;
      for (const auto& c : chunks) {
        // Rendering-relevant chunks only; textual/metadata chunks excluded.
        if (c.type == "tEXt" || c.type == "zTXt" || c.type == "iTXt" ||
            c.type == "tIME" || c.type == "eXIf")
          continue;
        acc += c.type;
        acc += sha256_hex(c.data, c.length);
      }
      return sha256_hex(acc);
    }
    case FileType::jpeg: {
      std::vector<JpegSegment> segs;
      std::size_t scan = 0;
      if (!jpeg_segments(b, &segs, &scan)) break;
      std::string acc;
      for (const auto& s : segs) {
        bool metadata_seg = s.marker == 0xE1 || s.marker == 0xED || s.marker == 0xFE;
        if (metadata_seg) continue;
        acc += char(s.marker);
        acc += sha256_hex(s.payload, s.payload_size);
      }
      if (scan) acc += sha256_hex(b.data() + scan, b.size() - scan);
      return sha256_hex(acc);
    }
    case FileType::pdf: {
      // Digest stream payloads except metadata streams; the document info
      // dictionary never participates.
      std::string acc;
      std::string_view hay(reinterpret_cast<const char*>(b.data()), b.size());
      std::size_t pos = 0;
      while (true) {
        std::size_t s = hay.find("stream", pos);
        if (s == std::string_view::npos) break;
        std::size_t data_start = s + 6;
        if (data_start < hay.size() && hay[data_start] == '\r') ++data_start;
        if (data_start < hay.size() && hay[data_start] == '\n') ++data_start;
        std::size_t e = hay.find("endstream", data_start);
        if (e == std::string_view::npos) break;
        std::size_t dict_from = s > 512 ? s - 512 : 0;
        auto dict = hay.substr(dict_from, s - dict_from);
        bool metadata_stream = dict.rfind("/Metadata") != std::string_view::npos ||
                               dict.rfind("/XML") != std::string_view::npos;
        if (!metadata_stream)
          acc += sha256_hex(hay.data() + data_start, e - data_start);
        pos = e + 9;
      }
      return sha256_hex(acc);
    }
    default:
      break;
  }
  return sha256_hex(b);
}

}  // namespace texsan
