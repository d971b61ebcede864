// pdfraster: rasterizes PDF pages to a stream of binary PPM (P6) images on
// stdout, one per page, at a fixed dpi.
//
// This is the bundled rendering backend for pixel comparison. It covers the
// PDF subset the bundled engine emits (classic xref, uncompressed or Flate
// content streams, Tj/TJ text with a monospaced base font, rect fills).
// Glyphs are drawn as deterministic per-character 5x7 patterns: the output
// is for pixel diffing, not reading — any two renders of the same content
// are byte-identical, and any text change moves pixels. A real backend
// (pdftoppm, pdfium) can be swapped in via verify.raster_cmd.

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "texsan/util.hpp"

using namespace texsan;

namespace {

struct Obj;
using ObjPtr = std::shared_ptr<Obj>;

struct Ref {
  int num = 0;
};

struct Obj {
  enum Kind { null, boolean, number, string, name, array, dict, stream, ref } kind =
      null;
  bool b = false;
  double num_v = 0;
  std::string str;  // string or name text
  std::vector<ObjPtr> arr;
  std::map<std::string, ObjPtr> map;
  Bytes stream_data;
  int ref_num = 0;
};

class PdfFile {
 public:
  explicit PdfFile(Bytes data) : d_(std::move(data)) { parse_all_objects(); }

  ObjPtr resolve(const ObjPtr& o) const {
    if (o && o->kind == Obj::ref) {
      auto it = objects_.find(o->ref_num);
      if (it != objects_.end()) return it->second;
      return std::make_shared<Obj>();
    }
    return o;
  }

  ObjPtr get(const ObjPtr& dict, const std::string& key) const {
    if (!dict || dict->kind != Obj::dict) return nullptr;
    auto it = dict->map.find(key);
    if (it == dict->map.end()) return nullptr;
    return resolve(it->second);
  }

  ObjPtr root() const {
    for (const auto& [n, o] : objects_) {
      (void)n;
      if (o->kind == Obj::dict || o->kind == Obj::stream) {
        auto t = o->map.find("Type");
        if (t != o->map.end() && t->second->kind == Obj::name &&
            t->second->str == "Catalog")
          return o;
      }
    }
    throw Error(Errc::render_failure, "no document catalog");
  }

  std::vector<ObjPtr> pages() const {
    std::vector<ObjPtr> out;
    auto cat = root();
    auto pages_root = get(cat, "Pages");
    if (!pages_root) throw Error(Errc::render_failure, "no page tree");
    collect_pages(pages_root, out, 0);
    return out;
  }

  Bytes content_of(const ObjPtr& page) const {
    Bytes out;
    auto contents = get(page, "Contents");
    if (!contents) return out;
    std::vector<ObjPtr> streams;
    if (contents->kind == Obj::array) {
      for (const auto& r : contents->arr) streams.push_back(resolve(r));
    } else {
      streams.push_back(contents);
    }
    for (const auto& s : streams) {
      if (!s || s->kind != Obj::stream) continue;
      Bytes data = s->stream_data;
      auto filter = get(s, "Filter");
      if (filter && filter->kind == Obj::name && filter->str == "FlateDecode")
        data = inflate_bytes(data);
      out.insert(out.end(), data.begin(), data.end());
      out.push_back('\n');
    }
    return out;
  }

  std::array<double, 4> media_box(const ObjPtr& page) const {
    ObjPtr node = page;
    for (int depth = 0; node && depth < 32; ++depth) {
      auto mb = get(node, "MediaBox");
      if (mb && mb->kind == Obj::array && mb->arr.size() == 4) {
        std::array<double, 4> box{};
        for (int i = 0; i < 4; ++i) box[std::size_t(i)] = resolve(mb->arr[std::size_t(i)])->num_v;
        return box;
      }
      node = get(node, "Parent");
    }
    return {0, 0, 612, 792};
  }

 private:
  Bytes d_;
  std::map<int, ObjPtr> objects_;

  void collect_pages(const ObjPtr& node, std::vector<ObjPtr>& out, int depth) const {
    if (!node || depth > 64) return;
    auto type = get(node, "Type");
    if (type && type->kind == Obj::name && type->str == "Page") {
      out.push_back(node);
      return;
    }
    auto kids = get(node, "Kids");
    if (kids && kids->kind == Obj::array)
      for (const auto& k : kids->arr) collect_pages(resolve(k), out, depth + 1);
  }

  static Bytes inflate_bytes(const Bytes& in) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw Error(Errc::render_failure, "inflateInit");
    Bytes out;
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
        throw Error(Errc::render_failure, "bad Flate stream");
      }
      out.insert(out.end(), buf, buf + sizeof(buf) - zs.avail_out);
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
  }

  // --- object-level lexer ---

  std::size_t pos_ = 0;

  int peek() const { return pos_ < d_.size() ? d_[pos_] : -1; }
  int take() { return pos_ < d_.size() ? d_[pos_++] : -1; }

  void skip_ws() {
    while (pos_ < d_.size()) {
      std::uint8_t c = d_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == 0) {
        ++pos_;
      } else if (c == '%') {
        while (pos_ < d_.size() && d_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool match(const char* kw) {
    std::size_t len = std::strlen(kw);
    if (pos_ + len <= d_.size() && std::memcmp(d_.data() + pos_, kw, len) == 0) {
      pos_ += len;
      return true;
    }
    return false;
  }

  ObjPtr parse_value() {
    skip_ws();
    auto o = std::make_shared<Obj>();
    int c = peek();
    if (c < 0) return o;
    if (match("<<")) {
      o->kind = Obj::dict;
      while (true) {
        skip_ws();
        if (match(">>")) break;
        if (peek() != '/') { take(); continue; }
        take();
        std::string key;
        while (pos_ < d_.size() && !std::isspace(d_[pos_]) && d_[pos_] != '/' &&
               d_[pos_] != '[' && d_[pos_] != ']' && d_[pos_] != '<' &&
               d_[pos_] != '>' && d_[pos_] != '(')
          key += char(d_[pos_++]);
        o->map[key] = parse_value();
      }
      skip_ws();
      if (match("stream")) {
        if (peek() == '\r') take();
        if (peek() == '\n') take();
        std::size_t len = 0;
        auto it = o->map.find("Length");
        if (it != o->map.end()) {
          ObjPtr lv = it->second;
          if (lv->kind == Obj::ref) {
            auto found = objects_.find(lv->ref_num);
            if (found != objects_.end()) lv = found->second;
          }
          len = std::size_t(lv->num_v);
        }
        if (pos_ + len > d_.size()) len = d_.size() - pos_;
        o->stream_data.assign(d_.begin() + long(pos_), d_.begin() + long(pos_ + len));
        pos_ += len;
        skip_ws();
        match("endstream");
        o->kind = Obj::stream;
      }
      return o;
    }
    if (c == '[') {
      take();
      o->kind = Obj::array;
      while (true) {
        skip_ws();
        if (peek() == ']') { take(); break; }
        if (peek() < 0) break;
        o->arr.push_back(parse_value());
      }
      return o;
    }
    if (c == '/') {
      take();
      o->kind = Obj::name;
      while (pos_ < d_.size() && !std::isspace(d_[pos_]) && d_[pos_] != '/' &&
             d_[pos_] != '[' && d_[pos_] != ']' && d_[pos_] != '<' && d_[pos_] != '>' &&
             d_[pos_] != '(')
        o->str += char(d_[pos_++]);
      return o;
    }
    if (c == '(') {
      take();
      o->kind = Obj::string;
      int depth = 1;
      while (pos_ < d_.size()) {
        char ch = char(d_[pos_++]);
        if (ch == '\\' && pos_ < d_.size()) {
          o->str += char(d_[pos_++]);
          continue;
        }
        if (ch == '(') ++depth;
        if (ch == ')') {
          if (--depth == 0) break;
        }
        o->str += ch;
      }
      return o;
    }
    if (match("true")) { o->kind = Obj::boolean; o->b = true; return o; }
    if (match("false")) { o->kind = Obj::boolean; o->b = false; return o; }
    if (match("null")) return o;
    if (c == '<') {  // hex string
      take();
      o->kind = Obj::string;
      while (pos_ < d_.size() && d_[pos_] != '>') o->str += char(d_[pos_++]);
      take();
      return o;
    }
    // Number or reference.
    std::size_t save = pos_;
    std::string tok;
    while (pos_ < d_.size() &&
           (std::isdigit(d_[pos_]) || d_[pos_] == '.' || d_[pos_] == '-' ||
            d_[pos_] == '+'))
      tok += char(d_[pos_++]);
    if (tok.empty()) { take(); return o; }
    // Lookahead for "gen R".
    std::size_t after_num = pos_;
    skip_ws();
    std::string gen;
    while (pos_ < d_.size() && std::isdigit(d_[pos_])) gen += char(d_[pos_++]);
    skip_ws();
    if (!gen.empty() && peek() == 'R' &&
        tok.find('.') == std::string::npos && tok.find('-') == std::string::npos) {
      take();
      o->kind = Obj::ref;
      o->ref_num = std::atoi(tok.c_str());
      return o;
    }
    pos_ = after_num;
    (void)save;
    o->kind = Obj::number;
    o->num_v = std::atof(tok.c_str());
    return o;
  }

  void parse_all_objects() {
    // Sequential scan for "N G obj" headers; ignores the xref table.
    pos_ = 0;
    while (pos_ < d_.size()) {
      skip_ws();
      std::size_t mark = pos_;
      std::string num;
      while (pos_ < d_.size() && std::isdigit(d_[pos_])) num += char(d_[pos_++]);
      if (num.empty()) {
        if (match("trailer")) { parse_value(); continue; }
        if (match("xref")) continue;
        if (match("startxref")) continue;
        if (pos_ >= d_.size()) break;
        ++pos_;
        continue;
      }
      skip_ws();
      std::string gen;
      while (pos_ < d_.size() && std::isdigit(d_[pos_])) gen += char(d_[pos_++]);
      skip_ws();
      if (!gen.empty() && match("obj")) {
        int n = std::atoi(num.c_str());
        objects_[n] = parse_value();
        skip_ws();
        match("endobj");
      } else {
        pos_ = mark + num.size();
      }
    }
  }
};

// ---- raster model ----

struct Matrix {
  // [a b 0; c d 0; e f 1]
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;
  Matrix mul(const Matrix& m) const {  // this * m
    return {a * m.a + b * m.c,       a * m.b + b * m.d,      c * m.a + d * m.c,
            c * m.b + d * m.d,       e * m.a + f * m.c + m.e, e * m.b + f * m.d + m.f};
  }
  void apply(double x, double y, double* ox, double* oy) const {
    *ox = a * x + c * y + e;
    *oy = b * x + d * y + f;
  }
};

struct Bitmap {
  int w = 0, h = 0;
  std::vector<std::uint8_t> gray;  // 255 white, 0 black
  void init(int width, int height) {
    w = width;
    h = height;
    gray.assign(std::size_t(w) * std::size_t(h), 255);
  }
  void fill_device_rect(double x0, double y0, double x1, double y1) {
    if (x1 < x0) std::swap(x0, x1);
    if (y1 < y0) std::swap(y0, y1);
    int ix0 = int(std::llround(x0)), ix1 = int(std::llround(x1));
    int iy0 = int(std::llround(y0)), iy1 = int(std::llround(y1));
    ix0 = std::max(0, ix0);
    iy0 = std::max(0, iy0);
    ix1 = std::min(w, ix1);
    iy1 = std::min(h, iy1);
    for (int y = iy0; y < iy1; ++y)
      for (int x = ix0; x < ix1; ++x) gray[std::size_t(y) * std::size_t(w) + std::size_t(x)] = 0;
  }
};

// Deterministic 5x7 per-character pattern.
std::uint64_t glyph_bits(unsigned char c) {
  std::uint64_t z = (std::uint64_t(c) + 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z = z ^ (z >> 31);
  return z | 0x1;  // never empty
}

class Renderer {
 public:
  Renderer(Bitmap* bmp, double dpi, double page_h)
      : bmp_(bmp), scale_(dpi / 72.0), page_h_(page_h) {}

  void run(const Bytes& content) {
    std::vector<ObjPtr> stack;
    std::size_t i = 0;
    std::string tok;
    auto flush_operand = [&](ObjPtr v) { stack.push_back(std::move(v)); };

    while (i <= content.size()) {
      int c = i < content.size() ? content[i] : -1;
      bool delim = c < 0 || std::isspace(c) || c == '(' || c == '[' || c == '/' ||
                   c == '<';
      if (!delim) {
        tok += char(c);
        ++i;
        continue;
      }
      if (!tok.empty()) {
        if ((std::isdigit(std::uint8_t(tok[0])) || tok[0] == '-' || tok[0] == '.' ||
             tok[0] == '+')) {
          auto o = std::make_shared<Obj>();
          o->kind = Obj::number;
          o->num_v = std::atof(tok.c_str());
          flush_operand(o);
        } else {
          op(tok, stack);
          stack.clear();
        }
        tok.clear();
      }
      if (c < 0) break;
      if (std::isspace(c)) { ++i; continue; }
      if (c == '(') {
        ++i;
        auto o = std::make_shared<Obj>();
        o->kind = Obj::string;
        int depth = 1;
        while (i < content.size()) {
          char ch = char(content[i++]);
          if (ch == '\\' && i < content.size()) {
            char esc = char(content[i++]);
            switch (esc) {
              case 'n': o->str += '\n'; break;
              case 'r': o->str += '\r'; break;
              case 't': o->str += '\t'; break;
              case 'b': o->str += '\b'; break;
              case 'f': o->str += '\f'; break;
              case '(': case ')': case '\\': o->str += esc; break;
              default: {
                if (esc >= '0' && esc <= '7') {
                  int v = esc - '0';
                  for (int k = 0; k < 2 && i < content.size() && content[i] >= '0' &&
                                  content[i] <= '7';
                       ++k)
                    v = v * 8 + (content[i++] - '0');
                  o->str += char(v);
                } else {
                  o->str += esc;
                }
              }
            }
            continue;
          }
          if (ch == '(') ++depth;
          if (ch == ')') {
            if (--depth == 0) break;
          }
          o->str += ch;
        }
        flush_operand(o);
        continue;
      }
      if (c == '[') {
        ++i;
        auto o = std::make_shared<Obj>();
        o->kind = Obj::array;
        // Parse numbers and strings until ']'.
        std::string inner_tok;
        while (i < content.size() && content[i] != ']') {
          char ch = char(content[i]);
          if (ch == '(') {
            auto s = std::make_shared<Obj>();
            s->kind = Obj::string;
            ++i;
            int depth = 1;
            while (i < content.size()) {
              char c2 = char(content[i++]);
              if (c2 == '\\' && i < content.size()) { s->str += char(content[i++]); continue; }
              if (c2 == '(') ++depth;
              if (c2 == ')') { if (--depth == 0) break; }
              s->str += c2;
            }
            o->arr.push_back(s);
            continue;
          }
          if (std::isspace(std::uint8_t(ch))) {
            if (!inner_tok.empty()) {
              auto nobj = std::make_shared<Obj>();
              nobj->kind = Obj::number;
              nobj->num_v = std::atof(inner_tok.c_str());
              o->arr.push_back(nobj);
              inner_tok.clear();
            }
            ++i;
            continue;
          }
          inner_tok += ch;
          ++i;
        }
        if (!inner_tok.empty()) {
          auto nobj = std::make_shared<Obj>();
          nobj->kind = Obj::number;
          nobj->num_v = std::atof(inner_tok.c_str());
          o->arr.push_back(nobj);
        }
        if (i < content.size()) ++i;  // ']'
        flush_operand(o);
        continue;
      }
      if (c == '/') {
        ++i;
        auto o = std::make_shared<Obj>();
        o->kind = Obj::name;
        while (i < content.size() && !std::isspace(content[i]) && content[i] != '/' &&
               content[i] != '[' && content[i] != '(')
          o->str += char(content[i++]);
        flush_operand(o);
        continue;
      }
      if (c == '<') {
        // inline dict or hex string: skip to matching '>>' or '>'
        ++i;
        if (i < content.size() && content[i] == '<') {
          int depth = 1;
          ++i;
          while (i + 1 < content.size() && depth > 0) {
            if (content[i] == '<' && content[i + 1] == '<') { ++depth; i += 2; continue; }
            if (content[i] == '>' && content[i + 1] == '>') { --depth; i += 2; continue; }
            ++i;
          }
        } else {
          while (i < content.size() && content[i] != '>') ++i;
          if (i < content.size()) ++i;
        }
        continue;
      }
      ++i;
    }
  }

 private:
  Bitmap* bmp_;
  double scale_;
  double page_h_;

  Matrix ctm_;
  std::vector<Matrix> gs_stack_;
  Matrix tm_, tlm_;
  double font_size_ = 10;
  double leading_ = 0;
  std::vector<std::array<double, 4>> rects_;

  double num(const std::vector<ObjPtr>& st, std::size_t idx_from_end) const {
    std::size_t i = st.size() - idx_from_end;
    return st[i]->num_v;
  }

  void device_rect(double x, double y_up, double w, double h) {
    // y_up is the PDF (bottom-left origin) coordinate after CTM.
    double x0 = x * scale_;
    double x1 = (x + w) * scale_;
    double y0 = (page_h_ - (y_up + h)) * scale_;
    double y1 = (page_h_ - y_up) * scale_;
    bmp_->fill_device_rect(x0, y0, x1, y1);
  }

  void draw_glyph(unsigned char ch, double x, double y) {
    if (ch == ' ') return;
    std::uint64_t bits = glyph_bits(ch);
    double gw = 0.6 * font_size_;
    double gh = 0.7 * font_size_;
    double cw = gw / 5.0, chh = gh / 7.0;
    for (int row = 0; row < 7; ++row) {
      for (int col = 0; col < 5; ++col) {
        if ((bits >> (row * 5 + col)) & 1) {
          double gx = x + col * cw;
          double gy = y + (6 - row) * chh;  // row 0 at the top of the glyph
          device_rect(gx, gy, cw, chh);
        }
      }
    }
  }

  void show_text(const std::string& s) {
    for (unsigned char ch : s) {
      double x, y;
      Matrix trm = tm_.mul(ctm_);
      x = trm.e;
      y = trm.f;
      draw_glyph(ch, x, y);
      Matrix adv{1, 0, 0, 1, 0.6 * font_size_, 0};
      tm_ = adv.mul(tm_);
    }
  }

  void op(const std::string& o, std::vector<ObjPtr>& st) {
    if (o == "q") {
      gs_stack_.push_back(ctm_);
    } else if (o == "Q") {
      if (!gs_stack_.empty()) {
        ctm_ = gs_stack_.back();
        gs_stack_.pop_back();
      }
    } else if (o == "cm" && st.size() >= 6) {
      Matrix m{num(st, 6), num(st, 5), num(st, 4), num(st, 3), num(st, 2), num(st, 1)};
      ctm_ = m.mul(ctm_);
    } else if (o == "BT") {
      tm_ = Matrix{};
      tlm_ = Matrix{};
    } else if (o == "ET") {
    } else if (o == "Tf" && st.size() >= 1) {
      font_size_ = num(st, 1);
    } else if (o == "Tm" && st.size() >= 6) {
      tm_ = Matrix{num(st, 6), num(st, 5), num(st, 4),
                   num(st, 3), num(st, 2), num(st, 1)};
      tlm_ = tm_;
    } else if ((o == "Td" || o == "TD") && st.size() >= 2) {
      if (o == "TD") leading_ = -num(st, 1);
      Matrix m{1, 0, 0, 1, num(st, 2), num(st, 1)};
      tlm_ = m.mul(tlm_);
      tm_ = tlm_;
    } else if (o == "TL" && st.size() >= 1) {
      leading_ = num(st, 1);
    } else if (o == "T*") {
      Matrix m{1, 0, 0, 1, 0, -leading_};
      tlm_ = m.mul(tlm_);
      tm_ = tlm_;
    } else if (o == "Tj" && !st.empty() && st.back()->kind == Obj::string) {
      show_text(st.back()->str);
    } else if (o == "'" && !st.empty() && st.back()->kind == Obj::string) {
      Matrix m{1, 0, 0, 1, 0, -leading_};
      tlm_ = m.mul(tlm_);
      tm_ = tlm_;
      show_text(st.back()->str);
    } else if (o == "TJ" && !st.empty() && st.back()->kind == Obj::array) {
      for (const auto& el : st.back()->arr) {
        if (el->kind == Obj::string) {
          show_text(el->str);
        } else if (el->kind == Obj::number) {
          Matrix adv{1, 0, 0, 1, -el->num_v / 1000.0 * font_size_, 0};
          tm_ = adv.mul(tm_);
        }
      }
    } else if (o == "re" && st.size() >= 4) {
      rects_.push_back({num(st, 4), num(st, 3), num(st, 2), num(st, 1)});
    } else if (o == "f" || o == "f*" || o == "F" || o == "b" || o == "B") {
      for (const auto& r : rects_) {
        double x0, y0, x1, y1;
        ctm_.apply(r[0], r[1], &x0, &y0);
        ctm_.apply(r[0] + r[2], r[1] + r[3], &x1, &y1);
        device_rect(std::min(x0, x1), std::min(y0, y1), std::abs(x1 - x0),
                    std::abs(y1 - y0));
      }
      rects_.clear();
    } else if (o == "n" || o == "W" || o == "h" || o == "S") {
      rects_.clear();
    }
    // Color and remaining operators are intentionally ignored.
  }
};

}  // namespace

int main(int argc, char** argv) {
  double dpi = 150;
  std::string file;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--dpi" && i + 1 < argc) {
      dpi = std::atof(argv[++i]);
    } else if (starts_with(a, "--dpi=")) {
      dpi = std::atof(a.c_str() + 6);
    } else if (!a.empty() && a[0] == '-') {
      std::cerr << "pdfraster: unknown option " << a << "\n";
      return 2;
    } else {
      file = a;
    }
  }
  if (file.empty() || dpi < 72 || dpi > 600) {
    std::cerr << "usage: pdfraster [--dpi N] file.pdf   (72 <= dpi <= 600)\n";
    return 2;
  }

  try {
    PdfFile pdf(read_file(file));
    auto pages = pdf.pages();
    if (pages.empty()) throw Error(Errc::render_failure, "no pages");
    for (const auto& page : pages) {
      auto box = pdf.media_box(page);
      double pw = box[2] - box[0], ph = box[3] - box[1];
      int w = int(std::ceil(pw * dpi / 72.0));
      int h = int(std::ceil(ph * dpi / 72.0));
      Bitmap bmp;
      bmp.init(w, h);
      Renderer r(&bmp, dpi, ph);
      r.run(pdf.content_of(page));
      std::printf("P6\n%d %d\n255\n", w, h);
      std::string row;
      row.resize(std::size_t(w) * 3);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          std::uint8_t g = bmp.gray[std::size_t(y) * std::size_t(w) + std::size_t(x)];
          row[std::size_t(x) * 3] = char(g);
          row[std::size_t(x) * 3 + 1] = char(g);
          row[std::size_t(x) * 3 + 2] = char(g);
        }
        std::fwrite(row.data(), 1, row.size(), stdout);
      }
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "pdfraster: " << e.what() << "\n";
    return 3;
  }
}
