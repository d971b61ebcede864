#include "texsan/archive.hpp"

#include <zlib.h>

#include <cstring>
#include <ctime>

namespace texsan {

namespace {

[[noreturn]] void corrupt(const std::string& why) {
  throw Error(Errc::corrupt_archive, why);
}

Bytes zlib_inflate(const Bytes& in, int window_bits) {
  z_stream zs{};
  if (inflateInit2(&zs, window_bits) != Z_OK) corrupt("inflateInit failed");
  Bytes out;
  out.reserve(in.size() * 3);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = uInt(in.size());
  std::uint8_t buf[65536];
  int rc = Z_OK;
  do {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      corrupt("inflate failed");
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) corrupt("truncated compressed stream");
  return out;
}

Bytes zlib_deflate(const Bytes& in, int window_bits) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, window_bits, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error(Errc::write_failure, "deflateInit failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = uInt(in.size());
  Bytes out;
  std::uint8_t buf[65536];
  int rc;
  do {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    rc = deflate(&zs, Z_FINISH);
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
  } while (rc != Z_STREAM_END);
  deflateEnd(&zs);
  return out;
}

// ---- tar ----

std::uint64_t parse_octal(const char* p, std::size_t len) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < len && p[i]; ++i) {
    if (p[i] == ' ') continue;
    if (p[i] < '0' || p[i] > '7') break;
    v = v * 8 + std::uint64_t(p[i] - '0');
  }
  return v;
}

std::vector<ArchiveEntry> read_tar_bytes(const Bytes& data) {
  std::vector<ArchiveEntry> entries;
  std::size_t off = 0;
  std::string pending_longname;
  while (off + 512 <= data.size()) {
    const char* hdr = reinterpret_cast<const char*>(data.data() + off);
    bool all_zero = true;
    for (int i = 0; i < 512; ++i)
      if (hdr[i]) { all_zero = false; break; }
    if (all_zero) break;

    std::string name(hdr, strnlen(hdr, 100));
    std::string prefix(hdr + 345, strnlen(hdr + 345, 155));
    std::uint64_t size = parse_octal(hdr + 124, 12);
    std::int64_t mtime = std::int64_t(parse_octal(hdr + 136, 12));
    char type = hdr[156];
    off += 512;
    if (off + size > data.size()) corrupt("tar entry exceeds file size");

    std::size_t blocks = (size + 511) / 512;
    if (type == 'L') {  // GNU long name
      pending_longname.assign(reinterpret_cast<const char*>(data.data() + off),
                              std::size_t(size));
      while (!pending_longname.empty() && pending_longname.back() == '\0')
        pending_longname.pop_back();
      off += blocks * 512;
      continue;
    }

    ArchiveEntry e;
    e.path = !pending_longname.empty()
                 ? pending_longname
                 : (prefix.empty() ? name : prefix + "/" + name);
    pending_longname.clear();
    e.mtime = mtime;
    if (type == '5' || (!e.path.empty() && e.path.back() == '/')) {
      e.is_dir = true;
      while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
    } else if (type == '0' || type == '\0') {
      e.data.assign(data.begin() + long(off), data.begin() + long(off + size));
    } else {
      off += blocks * 512;  // links, fifos etc. are skipped
      continue;
    }
    entries.push_back(std::move(e));
    off += blocks * 512;
  }
  return entries;
}

void write_octal(char* dst, std::size_t len, std::uint64_t v) {
  std::snprintf(dst, len, "%0*llo", int(len - 1), static_cast<unsigned long long>(v));
}

Bytes make_tar_bytes(const std::vector<ArchiveEntry>& entries) {
  Bytes out;
  for (const auto& e : entries) {
    char hdr[512];
    std::memset(hdr, 0, sizeof(hdr));
    std::string name = e.path + (e.is_dir ? "/" : "");
    if (name.size() > 100) {
      // GNU longname record
      char lh[512];
      std::memset(lh, 0, sizeof(lh));
      std::strcpy(lh, "././@LongLink");
      write_octal(lh + 100, 8, 0644);
      write_octal(lh + 108, 8, 0);
      write_octal(lh + 116, 8, 0);
      write_octal(lh + 124, 12, name.size() + 1);
      write_octal(lh + 136, 12, 0);
      lh[156] = 'L';
      std::memcpy(lh + 257, "ustar  ", 8);
      std::memset(lh + 148, ' ', 8);
      unsigned sum = 0;
      for (unsigned char c : lh) sum += c;
      write_octal(lh + 148, 7, sum);
      out.insert(out.end(), lh, lh + 512);
      Bytes nm(name.begin(), name.end());
      nm.push_back(0);
      nm.resize((nm.size() + 511) / 512 * 512, 0);
      out.insert(out.end(), nm.begin(), nm.end());
      name = name.substr(0, 100);
    }
    std::memcpy(hdr, name.data(), std::min<std::size_t>(name.size(), 100));
    write_octal(hdr + 100, 8, e.is_dir ? 0755 : 0644);
    write_octal(hdr + 108, 8, 0);
    write_octal(hdr + 116, 8, 0);
    write_octal(hdr + 124, 12, e.is_dir ? 0 : e.data.size());
    write_octal(hdr + 136, 12, std::uint64_t(e.mtime < 0 ? 0 : e.mtime));
    hdr[156] = e.is_dir ? '5' : '0';
    std::memcpy(hdr + 257, "ustar  ", 8);
    std::memset(hdr + 148, ' ', 8);
    unsigned sum = 0;
    for (unsigned char c : hdr) sum += c;
    write_octal(hdr + 148, 7, sum);
    out.insert(out.end(), hdr, hdr + 512);
    if (!e.is_dir) {
      out.insert(out.end(), e.data.begin(), e.data.end());
      out.resize((out.size() + 511) / 512 * 512, 0);
    }
  }
  out.resize(out.size() + 1024, 0);
  return out;
}

// ---- zip ----

std::int64_t dos_to_unix(std::uint16_t dos_time, std::uint16_t dos_date) {
  std::tm tm{};
  tm.tm_year = ((dos_date >> 9) & 0x7f) + 80;
  tm.tm_mon = ((dos_date >> 5) & 0x0f) - 1;
  tm.tm_mday = dos_date & 0x1f;
  tm.tm_hour = (dos_time >> 11) & 0x1f;
  tm.tm_min = (dos_time >> 5) & 0x3f;
  tm.tm_sec = (dos_time & 0x1f) * 2;
  return timegm(&tm);
}

void unix_to_dos(std::int64_t t, std::uint16_t* dos_time, std::uint16_t* dos_date) {
  std::time_t tt = t;
  std::tm tm{};
  gmtime_r(&tt, &tm);
  if (tm.tm_year < 80) tm.tm_year = 80;
  *dos_date = std::uint16_t(((tm.tm_year - 80) << 9) | ((tm.tm_mon + 1) << 5) |
                            tm.tm_mday);
  *dos_time = std::uint16_t((tm.tm_hour << 11) | (tm.tm_min << 5) | (tm.tm_sec / 2));
}

std::uint16_t rd16(const std::uint8_t* p) { return std::uint16_t(p[0] | (p[1] << 8)); }
std::uint32_t rd32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}
void wr16(Bytes& b, std::uint16_t v) {
  b.push_back(std::uint8_t(v & 0xff));
  b.push_back(std::uint8_t(v >> 8));
}
void wr32(Bytes& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
}

std::vector<ArchiveEntry> read_zip_bytes(const Bytes& data) {
  // Locate the end-of-central-directory record.
  if (data.size() < 22) corrupt("zip too small");
  std::size_t eocd = std::string::npos;
  std::size_t scan_limit = data.size() >= 66000 ? data.size() - 66000 : 0;
  for (std::size_t i = data.size() - 22; ; --i) {
    if (data[i] == 'P' && data[i + 1] == 'K' && data[i + 2] == 5 && data[i + 3] == 6) {
      eocd = i;
      break;
    }
    if (i == scan_limit) break;
  }
  if (eocd == std::string::npos) corrupt("zip: no central directory");
  std::uint16_t count = rd16(data.data() + eocd + 10);
  std::uint32_t cd_off = rd32(data.data() + eocd + 16);

  std::vector<ArchiveEntry> entries;
  std::size_t p = cd_off;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (p + 46 > data.size() || rd32(data.data() + p) != 0x02014b50)
      corrupt("zip: bad central directory entry");
    std::uint16_t method = rd16(data.data() + p + 10);
    std::uint16_t mtime = rd16(data.data() + p + 12);
    std::uint16_t mdate = rd16(data.data() + p + 14);
    std::uint32_t csize = rd32(data.data() + p + 20);
    std::uint32_t usize = rd32(data.data() + p + 24);
    std::uint16_t namelen = rd16(data.data() + p + 28);
    std::uint16_t extralen = rd16(data.data() + p + 30);
    std::uint16_t commentlen = rd16(data.data() + p + 32);
    std::uint32_t lho = rd32(data.data() + p + 42);
    if (p + 46 + namelen > data.size()) corrupt("zip: truncated name");
    std::string name(reinterpret_cast<const char*>(data.data() + p + 46), namelen);
    p += 46 + namelen + extralen + commentlen;

    if (lho + 30 > data.size() || rd32(data.data() + lho) != 0x04034b50)
      corrupt("zip: bad local header");
    std::uint16_t lnamelen = rd16(data.data() + lho + 26);
    std::uint16_t lextralen = rd16(data.data() + lho + 28);
    std::size_t doff = lho + 30 + lnamelen + lextralen;
    if (doff + csize > data.size()) corrupt("zip: truncated data");

    ArchiveEntry e;
    e.path = name;
    e.mtime = dos_to_unix(mtime, mdate);
    if (!name.empty() && name.back() == '/') {
      e.is_dir = true;
      while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
    } else if (method == 0) {
      e.data.assign(data.begin() + long(doff), data.begin() + long(doff + csize));
    } else if (method == 8) {
      Bytes comp(data.begin() + long(doff), data.begin() + long(doff + csize));
      e.data = zlib_inflate(comp, -15);
      if (e.data.size() != usize) corrupt("zip: size mismatch after inflate");
    } else {
      corrupt("zip: unsupported compression method");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

Bytes make_zip_bytes(const std::vector<ArchiveEntry>& entries) {
  Bytes out;
  struct CdInfo {
    std::string name;
    std::uint32_t crc, size, offset;
    std::uint16_t dtime, ddate;
    bool is_dir;
  };
  std::vector<CdInfo> cds;
  for (const auto& e : entries) {
    CdInfo cd;
    cd.name = e.path + (e.is_dir ? "/" : "");
    cd.is_dir = e.is_dir;
    cd.offset = std::uint32_t(out.size());
    cd.size = std::uint32_t(e.data.size());
    cd.crc = e.is_dir ? 0
                      : std::uint32_t(::crc32(0, e.data.data(), uInt(e.data.size())));
    unix_to_dos(e.mtime, &cd.dtime, &cd.ddate);
    wr32(out, 0x04034b50);
    wr16(out, 20);
    wr16(out, 0);
    wr16(out, 0);  // stored
    wr16(out, cd.dtime);
    wr16(out, cd.ddate);
    wr32(out, cd.crc);
    wr32(out, cd.size);
    wr32(out, cd.size);
    wr16(out, std::uint16_t(cd.name.size()));
    wr16(out, 0);
    out.insert(out.end(), cd.name.begin(), cd.name.end());
    out.insert(out.end(), e.data.begin(), e.data.end());
    cds.push_back(cd);
  }
  std::uint32_t cd_start = std::uint32_t(out.size());
  for (const auto& cd : cds) {
    wr32(out, 0x02014b50);
    wr16(out, 20);
    wr16(out, 20);
    wr16(out, 0);
    wr16(out, 0);
    wr16(out, cd.dtime);
    wr16(out, cd.ddate);
    wr32(out, cd.crc);
    wr32(out, cd.size);
    wr32(out, cd.size);
    wr16(out, std::uint16_t(cd.name.size()));
    wr16(out, 0);
    wr16(out, 0);
    wr16(out, 0);
    wr16(out, 0);
    wr32(out, cd.is_dir ? 0x10 : 0);
    wr32(out, cd.offset);
    out.insert(out.end(), cd.name.begin(), cd.name.end());
  }
  std::uint32_t cd_size = std::uint32_t(out.size()) - cd_start;
  wr32(out, 0x06054b50);
  wr16(out, 0);
  wr16(out, 0);
  wr16(out, std::uint16_t(cds.size()));
  wr16(out, std::uint16_t(cds.size()));
  wr32(out, cd_size);
  wr32(out, cd_start);
  wr16(out, 0);
  return out;
}

}  // namespace

Bytes gzip_decompress(const Bytes& in) { return zlib_inflate(in, 15 + 16); }
Bytes gzip_compress(const Bytes& in) { return zlib_deflate(in, 15 + 16); }

ArchiveKind detect_archive(const fs::path& file) {
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) return ArchiveKind::none;
  Bytes head = read_file(file);
  if (head.size() >= 2 && head[0] == 0x1f && head[1] == 0x8b) return ArchiveKind::tar_gz;
  if (head.size() >= 4 && head[0] == 'P' && head[1] == 'K' &&
      (head[2] == 3 || head[2] == 5) && (head[3] == 4 || head[3] == 6))
    return ArchiveKind::zip;
  if (head.size() >= 265 && std::memcmp(head.data() + 257, "ustar", 5) == 0)
    return ArchiveKind::tar;
  return ArchiveKind::none;
}

std::vector<ArchiveEntry> read_archive(const fs::path& file) {
  Bytes data = read_file(file);
  if (data.size() >= 2 && data[0] == 0x1f && data[1] == 0x8b)
    return read_tar_bytes(gzip_decompress(data));
  if (data.size() >= 2 && data[0] == 'P' && data[1] == 'K')
    return read_zip_bytes(data);
  if (data.size() >= 265 && std::memcmp(data.data() + 257, "ustar", 5) == 0)
    return read_tar_bytes(data);
  corrupt(file.string() + ": unrecognized container format");
}

void write_tar(const fs::path& file, const std::vector<ArchiveEntry>& entries) {
  write_file(file, make_tar_bytes(entries));
}

void write_tar_gz(const fs::path& file, const std::vector<ArchiveEntry>& entries) {
  write_file(file, gzip_compress(make_tar_bytes(entries)));
}

void write_zip(const fs::path& file, const std::vector<ArchiveEntry>& entries) {
  write_file(file, make_zip_bytes(entries));
}

bool archive_extension(const fs::path& file) {
  auto name = to_lower(file.filename().string());
  return ends_with(name, ".tar") || ends_with(name, ".tar.gz") ||
         ends_with(name, ".tgz") || ends_with(name, ".zip");
}

void write_archive(const fs::path& file, const std::vector<ArchiveEntry>& entries) {
  auto name = to_lower(file.filename().string());
  if (ends_with(name, ".tar.gz") || ends_with(name, ".tgz"))
    write_tar_gz(file, entries);
  else if (ends_with(name, ".zip"))
    write_zip(file, entries);
  else if (ends_with(name, ".tar"))
    write_tar(file, entries);
  else
    throw Error(Errc::usage_error, "unknown archive extension: " + file.string());
}

}  // namespace texsan
