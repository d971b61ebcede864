// metatool: metadata extraction and stripping for PNG, JPEG and PDF files.
//
//   metatool extract FILE   -> "key<TAB>value" lines on stdout
//   metatool strip FILE     -> rewrites FILE in place (temp file + rename),
//                              prints removed keys one per line
//
// Exit codes: 0 ok, 2 usage, 3 unsupported file type, 4 I/O error.
//
// Structural keys (ImageWidth, ImageHeight, BitDepth, ColorType,
// ICCProfilePresent) survive stripping; everything else is removed. PDF
// stripping blanks the document information strings and any XMP metadata
// stream payload in place so byte offsets (and rendering) stay intact.

#include <cstdint>
#include <cstring>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "texsan/filetypes.hpp"
#include "texsan/util.hpp"

using namespace texsan;

namespace {

using KV = std::vector<std::pair<std::string, std::string>>;

std::string printable(const std::string& s) {
  std::string out;
  for (unsigned char c : s) out += (c >= 32 && c < 127) ? char(c) : '?';
  return out;
}

// ---- EXIF (TIFF container) ----

struct TiffReader {
  const std::uint8_t* p;
  std::size_t n;
  bool le = true;

  std::uint16_t u16(std::size_t off) const {
    if (off + 2 > n) return 0;
    return le ? std::uint16_t(p[off] | (p[off + 1] << 8))
              : std::uint16_t((p[off] << 8) | p[off + 1]);
  }
  std::uint32_t u32(std::size_t off) const {
    if (off + 4 > n) return 0;
    return le ? (std::uint32_t(p[off]) | (std::uint32_t(p[off + 1]) << 8) |
                 (std::uint32_t(p[off + 2]) << 16) | (std::uint32_t(p[off + 3]) << 24))
              : ((std::uint32_t(p[off]) << 24) | (std::uint32_t(p[off + 1]) << 16) |
                 (std::uint32_t(p[off + 2]) << 8) | std::uint32_t(p[off + 3]));
  }
};

const char* exif_tag_name(std::uint16_t tag, bool gps) {
  if (gps) {
    switch (tag) {
      case 0x0001: return "GPSLatitudeRef";
      case 0x0002: return "GPSLatitude";
      case 0x0003: return "GPSLongitudeRef";
      case 0x0004: return "GPSLongitude";
      case 0x0005: return "GPSAltitudeRef";
      case 0x0006: return "GPSAltitude";
      default: return nullptr;
    }
  }
  switch (tag) {
    case 0x010E: return "ImageDescription";
    case 0x010F: return "Make";
    case 0x0110: return "Model";
    case 0x0131: return "Software";
    case 0x0132: return "ModifyDate";
    case 0x013B: return "Artist";
    case 0x8298: return "Copyright";
    case 0x9003: return "DateTimeOriginal";
    case 0xA434: return "LensModel";
    default: return nullptr;
  }
}

void parse_exif_ifd(const TiffReader& t, std::size_t ifd_off, bool gps, KV* out) {
  std::uint16_t count = t.u16(ifd_off);
  if (count > 512) return;
  for (std::uint16_t i = 0; i < count; ++i) {
    std::size_t e = ifd_off + 2 + std::size_t(i) * 12;
    std::uint16_t tag = t.u16(e);
    std::uint16_t type = t.u16(e + 2);
    std::uint32_t num = t.u32(e + 4);

    if (!gps && tag == 0x8825) {  // GPS IFD pointer
      parse_exif_ifd(t, t.u32(e + 8), true, out);
      continue;
    }
    if (!gps && tag == 0x8769) {  // EXIF sub-IFD pointer
      parse_exif_ifd(t, t.u32(e + 8), false, out);
      continue;
    }
    const char* name = exif_tag_name(tag, gps);
    if (!name) continue;

    std::string value;
    if (type == 2) {  // ASCII
      std::size_t len = num;
      std::size_t off = len <= 4 ? e + 8 : t.u32(e + 8);
      if (off + len <= t.n) {
        value.assign(reinterpret_cast<const char*>(t.p + off),
                     len ? len - 1 : 0);  // NUL-terminated
      }
    } else if (type == 5 || type == 10) {  // RATIONAL
      std::size_t off = t.u32(e + 8);
      for (std::uint32_t k = 0; k < num && k < 4; ++k) {
        std::uint32_t a = t.u32(off + 8 * k), b = t.u32(off + 8 * k + 4);
        if (!value.empty()) value += " ";
        value += std::to_string(a) + "/" + std::to_string(b ? b : 1);
      }
    } else if (type == 3) {  // SHORT
      value = std::to_string(t.u16(e + 8));
    } else if (type == 4) {  // LONG
      value = std::to_string(t.u32(e + 8));
    }
    if (!value.empty()) out->emplace_back(name, printable(value));
  }
}

void parse_exif_blob(const std::uint8_t* p, std::size_t n, KV* out) {
  if (n < 8) return;
  TiffReader t{p, n, true};
  if (p[0] == 'M' && p[1] == 'M') t.le = false;
  else if (!(p[0] == 'I' && p[1] == 'I')) return;
  if (t.u16(2) != 42) return;
  parse_exif_ifd(t, t.u32(4), false, out);
}

// ---- PNG ----

bool png_structural(KV* out, const Bytes& b) {
  std::vector<PngChunk> chunks;
  if (!png_chunks(b, &chunks)) return false;
  for (const auto& c : chunks) {
    if (c.type == "IHDR" && c.length >= 13) {
      auto be = [&](std::size_t i) {
        return (std::uint32_t(c.data[i]) << 24) | (std::uint32_t(c.data[i + 1]) << 16) |
               (std::uint32_t(c.data[i + 2]) << 8) | std::uint32_t(c.data[i + 3]);
      };
      out->emplace_back("ImageWidth", std::to_string(be(0)));
      out->emplace_back("ImageHeight", std::to_string(be(4)));
      out->emplace_back("BitDepth", std::to_string(c.data[8]));
      out->emplace_back("ColorType", std::to_string(c.data[9]));
    }
    if (c.type == "iCCP") out->emplace_back("ICCProfilePresent", "1");
  }
  return true;
}

KV png_extract(const Bytes& b) {
  KV out;
  if (!png_structural(&out, b)) return out;
  std::vector<PngChunk> chunks;
  png_chunks(b, &chunks);
  for (const auto& c : chunks) {
    if (c.type == "tEXt") {
      std::string all(reinterpret_cast<const char*>(c.data), c.length);
      auto nul = all.find('\0');
      if (nul != std::string::npos)
        out.emplace_back(printable(all.substr(0, nul)), printable(all.substr(nul + 1)));
    } else if (c.type == "iTXt") {
      std::string all(reinterpret_cast<const char*>(c.data), c.length);
      auto nul = all.find('\0');
      if (nul != std::string::npos) {
        // keyword \0 compression(2) \0lang \0translated \0 text
        std::string key = all.substr(0, nul);
        auto rest = all.substr(nul + 1);
        if (rest.size() > 2 && rest[0] == 0) {
          auto l2 = rest.find('\0', 2);
          if (l2 != std::string::npos) {
            auto l3 = rest.find('\0', l2 + 1);
            if (l3 != std::string::npos)
              out.emplace_back(printable(key), printable(rest.substr(l3 + 1)));
          }
        }
      }
    } else if (c.type == "tIME" && c.length >= 7) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d",
                    (c.data[0] << 8) | c.data[1], c.data[2], c.data[3], c.data[4],
                    c.data[5], c.data[6]);
      out.emplace_back("ModifyDate", buf);
    } else if (c.type == "eXIf") {
      parse_exif_blob(c.data, c.length, &out);
    }
  }
  return out;
}

Bytes png_strip(const Bytes& b, std::vector<std::string>* removed) {
  std::vector<PngChunk> chunks;
  if (!png_chunks(b, &chunks)) return b;
  Bytes out(b.begin(), b.begin() + 8);
  for (const auto& c : chunks) {
    bool drop = c.type == "tEXt" || c.type == "zTXt" || c.type == "iTXt" ||
                c.type == "tIME" || c.type == "eXIf";
    if (drop) {
      if (c.type == "tEXt" || c.type == "iTXt") {
        std::string all(reinterpret_cast<const char*>(c.data), c.length);
        auto nul = all.find('\0');
        removed->push_back(nul != std::string::npos ? printable(all.substr(0, nul))
                                                    : c.type);
      } else if (c.type == "tIME") {
        removed->push_back("ModifyDate");
      } else {
        KV kv;
        parse_exif_blob(c.data, c.length, &kv);
        if (kv.empty()) removed->push_back("eXIf");
        for (auto& [k, v] : kv) {
          (void)v;
          removed->push_back(k);
        }
      }
      continue;
    }
    out.insert(out.end(), b.begin() + long(c.offset),
               b.begin() + long(c.offset + 12 + c.length));
  }
  return out;
}

// ---- JPEG ----

KV jpeg_extract(const Bytes& b) {
  KV out;
  std::vector<JpegSegment> segs;
  std::size_t scan = 0;
  if (!jpeg_segments(b, &segs, &scan)) return out;
  for (const auto& s : segs) {
    if (s.marker >= 0xC0 && s.marker <= 0xCF && s.marker != 0xC4 && s.marker != 0xC8 &&
        s.marker != 0xCC && s.payload_size >= 5) {
      out.emplace_back("BitDepth", std::to_string(s.payload[0]));
      out.emplace_back("ImageHeight",
                       std::to_string((s.payload[1] << 8) | s.payload[2]));
      out.emplace_back("ImageWidth",
                       std::to_string((s.payload[3] << 8) | s.payload[4]));
    }
    if (s.marker == 0xE1 && s.payload_size > 6 &&
        std::memcmp(s.payload, "Exif\0\0", 6) == 0) {
      parse_exif_blob(s.payload + 6, s.payload_size - 6, &out);
    } else if (s.marker == 0xE1 && s.payload_size > 4 &&
               std::memcmp(s.payload, "http", 4) == 0) {
      out.emplace_back("XMPPresent", "1");
    } else if (s.marker == 0xFE) {
      out.emplace_back("Comment",
                       printable(std::string(reinterpret_cast<const char*>(s.payload),
                                             s.payload_size)));
    } else if (s.marker == 0xE2 && s.payload_size > 11 &&
               std::memcmp(s.payload, "ICC_PROFILE", 11) == 0) {
      out.emplace_back("ICCProfilePresent", "1");
    }
  }
  return out;
}

Bytes jpeg_strip(const Bytes& b, std::vector<std::string>* removed) {
  std::vector<JpegSegment> segs;
  std::size_t scan = 0;
  if (!jpeg_segments(b, &segs, &scan) || scan == 0) return b;
  Bytes out = {0xFF, 0xD8};
  for (const auto& s : segs) {
    bool drop = false;
    if (s.marker == 0xE1) {
      drop = true;
      if (s.payload_size > 6 && std::memcmp(s.payload, "Exif\0\0", 6) == 0) {
        KV kv;
        parse_exif_blob(s.payload + 6, s.payload_size - 6, &kv);
        if (kv.empty()) removed->push_back("Exif");
        for (auto& [k, v] : kv) {
          (void)v;
          removed->push_back(k);
        }
      } else {
        removed->push_back("XMP");
      }
    } else if (s.marker == 0xED) {
      drop = true;
      removed->push_back("PhotoshopIRB");
    } else if (s.marker == 0xFE) {
      drop = true;
      removed->push_back("Comment");
    }
    if (!drop)
      out.insert(out.end(), b.begin() + long(s.offset),
                 b.begin() + long(s.offset + s.total_size));
  }
  out.insert(out.end(), b.begin() + long(scan), b.end());
  return out;
}

// ---- PDF ----

const char* kPdfInfoKeys[] = {"Title",    "Author",   "Subject",  "Keywords",
                              "Creator",  "Producer", "CreationDate", "ModDate",
                              "Trapped"};

KV pdf_extract(const Bytes& b) {
  KV out;
  std::string text(b.begin(), b.end());
  for (const char* key : kPdfInfoKeys) {
    std::string pat = std::string("/") + key;
    std::size_t pos = 0;
    while ((pos = text.find(pat, pos)) != std::string::npos) {
      std::size_t i = pos + pat.size();
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
      if (i < text.size() && text[i] == '(') {
        std::size_t j = i + 1;
        std::string value;
        int depth = 1;
        while (j < text.size()) {
          char c = text[j];
          if (c == '\\' && j + 1 < text.size()) {
            value += text[j + 1];
            j += 2;
            continue;
          }
          if (c == '(') ++depth;
          if (c == ')') {
            if (--depth == 0) break;
          }
          value += c;
          ++j;
        }
        if (!trim(value).empty()) out.emplace_back(key, printable(value));
      }
      pos += pat.size();
    }
  }
  if (text.find("/Metadata") != std::string::npos &&
      text.find("<?xpacket") != std::string::npos)
    out.emplace_back("XMPPresent", "1");
  return out;
}

Bytes pdf_strip(const Bytes& b, std::vector<std::string>* removed) {
  Bytes out = b;
  std::string text(b.begin(), b.end());
  // Blank info string values in place (byte offsets must not move).
  for (const char* key : kPdfInfoKeys) {
    std::string pat = std::string("/") + key;
    std::size_t pos = 0;
    while ((pos = text.find(pat, pos)) != std::string::npos) {
      std::size_t i = pos + pat.size();
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
      if (i < text.size() && text[i] == '(') {
        std::size_t j = i + 1;
        int depth = 1;
        bool any = false;
        while (j < text.size()) {
          char c = text[j];
          if (c == '\\' && j + 1 < text.size()) {
            out[j] = ' ';
            out[j + 1] = ' ';
            any = true;
            j += 2;
            continue;
          }
          if (c == '(') ++depth;
          if (c == ')') {
            if (--depth == 0) break;
          }
          if (!std::isspace(std::uint8_t(c))) any = true;
          out[j] = ' ';
          ++j;
        }
        if (any) removed->push_back(key);
      }
      pos += pat.size();
    }
  }
  // Blank XMP packet payloads.
  std::size_t pos = 0;
  while ((pos = text.find("<?xpacket begin", pos)) != std::string::npos) {
    std::size_t end = text.find("<?xpacket end", pos);
    if (end == std::string::npos) break;
    std::size_t close = text.find("?>", end);
    if (close == std::string::npos) break;
    for (std::size_t i = pos; i < close + 2; ++i)
      if (!std::isspace(std::uint8_t(text[i]))) out[i] = ' ';
    removed->push_back("XMP");
    pos = close + 2;
  }
  return out;
}

int do_extract(const fs::path& file) {
  Bytes b = read_file(file);
  KV kv;
  switch (sniff_file_type(b)) {
    case FileType::png: kv = png_extract(b); break;
    case FileType::jpeg: kv = jpeg_extract(b); break;
    case FileType::pdf: kv = pdf_extract(b); break;
    default: return 3;
  }
  for (const auto& [k, v] : kv) std::cout << k << "\t" << v << "\n";
  return 0;
}

int do_strip(const fs::path& file) {
  Bytes b = read_file(file);
  std::vector<std::string> removed;
  Bytes out;
  switch (sniff_file_type(b)) {
    case FileType::png: out = png_strip(b, &removed); break;
    case FileType::jpeg: out = jpeg_strip(b, &removed); break;
    case FileType::pdf: out = pdf_strip(b, &removed); break;
    default: return 3;
  }
  fs::path tmp = file;
  tmp += ".metatool.tmp";
  write_file(tmp, out);
  fs::rename(tmp, file);
  for (const auto& k : removed) std::cout << k << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: metatool extract|strip FILE\n";
    return 2;
  }
  std::string op = argv[1];
  fs::path file = argv[2];
  try {
    if (op == "extract") return do_extract(file);
    if (op == "strip") return do_strip(file);
    std::cerr << "metatool: unknown operation " << op << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "metatool: " << e.what() << "\n";
    return 4;
  }
}
