// minitex: a small, deterministic TeX-subset engine with pdflatex-compatible
// command line and recorder output (PWD/INPUT/OUTPUT .fls files).
//
// It exists so that builds, dangling-file detection and pixel comparison can
// run hermetically; any real LaTeX toolchain can be substituted through the
// build.engine_cmd configuration key. The layout model is intentionally
// plain (monospaced glyphs, fixed page grid) but the token-level semantics
// that sanitization relies on (comment and newline handling, space
// collapsing, conditionals, macro argument discarding, verbatim opacity)
// follow TeX.

#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "texsan/filetypes.hpp"
#include "texsan/util.hpp"

using namespace texsan;

namespace {

// ---- page geometry (pt) ----
constexpr double kPageW = 612, kPageH = 792;
constexpr double kMargin = 72;
constexpr double kFontSize = 10, kCharW = 6, kLineH = 12, kParSkip = 6;
constexpr int kCols = int((kPageW - 2 * kMargin) / kCharW);  // 78

const std::set<std::string>& verbatim_envs() {
  static const std::set<std::string> v = {"verbatim",  "verbatim*",
                                          "lstlisting", "minted",
                                          "alltt",      "filecontents",
                                          "filecontents*"};
  return v;
}

const std::set<std::string>& primitive_ifs() {
  static const std::set<std::string> s = {
      "if",       "ifx",     "ifnum",   "ifdim",    "ifodd",    "ifvmode",
      "ifhmode",  "ifmmode", "ifinner", "ifvoid",   "ifhbox",   "ifvbox",
      "ifeof",    "iftrue",  "iffalse", "ifcase",   "ifdefined", "ifcsname",
      "ifincsname", "iffontchar"};
  return s;
}

struct Macro {
  int argc = 0;
  bool has_optional = false;
  std::string default_opt;
  std::string body;
};

struct PageItem {
  enum Kind { text_line, rect } kind = text_line;
  double x = 0, y = 0;        // text baseline or rect origin
  std::string text;           // text_line
  double w = 0, h = 0;        // rect
};

struct Page {
  std::vector<PageItem> items;
};

struct Source {
  std::string data;
  std::size_t pos = 0;
};

struct Token {
  enum Kind { ch, space, par, cs, eof } kind = eof;
  char c = 0;
  std::string name;
};

class Engine {
 public:
  Engine(fs::path root, fs::path outdir, bool recorder, std::string jobname = "")
      : root_(std::move(root)), outdir_(std::move(outdir)), recorder_(recorder) {
    jobname_ = jobname.empty() ? root_.stem().string() : std::move(jobname);
    epoch_ = build_epoch_now();
  }

  int run() {
    log_open();
    log("This is minitex, Version 0.3");
    read_aux();

    std::string root_text;
    if (!input_file(root_.string(), &root_text)) {
      log("! I can't find file `" + root_.string() + "'.");
      log_close();
      return 1;
    }
    push_source(root_text);
    main_loop();
    finish();
    log_close();
    return errors_ ? 1 : 0;
  }

 private:
  fs::path root_, outdir_;
  bool recorder_;
  std::string jobname_;
  std::int64_t epoch_;
  bool errors_ = false;
  bool stopped_ = false;

  std::vector<Source> stack_;
  enum class LineState { N, M, S };
  LineState state_ = LineState::N;

  std::map<std::string, Macro> macros_;
  std::map<std::string, bool> flags_;
  std::set<std::string> builtin_names_;
  std::vector<std::string> graphics_paths_{""};

  // aux state
  std::map<std::string, std::string> labels_prev_;
  std::map<std::string, std::string> labels_now_;
  std::vector<std::string> citations_;
  bool aux_existed_ = false;

  // recorder
  std::vector<std::string> rec_inputs_, rec_outputs_;
  std::ofstream log_stream_;

  // typesetting
  bool in_document_ = false;
  std::vector<Page> pages_;
  double cursor_y_ = kPageH - kMargin;
  std::string line_;
  bool pending_space_ = false;
  bool fresh_par_ = true;
  int sect_[3] = {0, 0, 0};
  int label_counter_ = 0;
  std::string title_, author_, date_;
  bool capturing_ = false;
  std::string capture_;
  int item_depth_ = 0;
  int enum_counter_ = 0;

  // ---- logging / recorder ----

  void log_open() {
    fs::create_directories(outdir_);
    log_stream_.open(outdir_ / (jobname_ + ".log"), std::ios::trunc);
    rec_outputs_.push_back((outdir_ / (jobname_ + ".log")).string());
  }

  void log(const std::string& msg) {
    if (log_stream_) {
      log_stream_ << msg << "\n";
      log_stream_.flush();
    }
  }

  void log_close() {
    if (log_stream_) log_stream_.close();
    if (recorder_) {
      std::ofstream fls(outdir_ / (jobname_ + ".fls"), std::ios::trunc);
      fls << "PWD " << fs::current_path().string() << "\n";
      for (const auto& p : rec_inputs_) fls << "INPUT " << p << "\n";
      for (const auto& p : rec_outputs_) fls << "OUTPUT " << p << "\n";
    }
  }

  bool input_file(const std::string& name, std::string* out) {
    std::ifstream in(name, std::ios::binary);
    if (!in) return false;
    std::stringstream ss;
    ss << in.rdbuf();
    *out = ss.str();
    rec_inputs_.push_back(name);
    return true;
  }

  // ---- character stream ----

  void push_source(std::string data) { stack_.push_back({std::move(data), 0}); }

  void pop_exhausted() {
    while (!stack_.empty() && stack_.back().pos >= stack_.back().data.size())
      stack_.pop_back();
  }

  int raw_next() {
    pop_exhausted();
    if (stack_.empty()) return -1;
    return std::uint8_t(stack_.back().data[stack_.back().pos++]);
  }

  int raw_peek() {
    pop_exhausted();
    if (stack_.empty()) return -1;
    return std::uint8_t(stack_.back().data[stack_.back().pos]);
  }

  void raw_unget() {
    // Valid immediately after raw_next() on the same source.
    if (!stack_.empty() && stack_.back().pos > 0) --stack_.back().pos;
  }

  Token next_token() {
    while (true) {
      int ci = raw_next();
      if (ci < 0) return {};
      char c = char(ci);
      if (c == '%') {
        while (true) {
          int k = raw_next();
          if (k < 0 || k == '\n') break;
        }
        state_ = LineState::N;
        continue;
      }
      if (c == '\n') {
        LineState prev = state_;
        state_ = LineState::N;
        if (prev == LineState::M) return {Token::space, ' ', ""};
        if (prev == LineState::N) return {Token::par, 0, ""};
        continue;  // state S: swallowed
      }
      if (c == ' ' || c == '\t') {
        if (state_ == LineState::M) {
          state_ = LineState::S;
          return {Token::space, ' ', ""};
        }
        continue;
      }
      if (c == '\\') {
        int p = raw_peek();
        if (p >= 0 && (std::isalpha(p))) {
          std::string name;
          while (true) {
            int k = raw_next();
            if (k < 0) break;
            if (std::isalpha(k)) {
              name += char(k);
            } else {
              raw_unget();
              break;
            }
          }
          state_ = LineState::S;
          return {Token::cs, 0, name};
        }
        if (p < 0) return {Token::ch, '\\', ""};
        raw_next();
        state_ = LineState::M;
        return {Token::cs, char(p), std::string(1, char(p))};
      }
      state_ = LineState::M;
      return {Token::ch, c, ""};
    }
  }

  // Reads one undelimited macro argument: a balanced group's content, a
  // control sequence, or a single character.
  std::string read_group() {
    // Skip filler (spaces, comments, newlines that produce nothing).
    while (true) {
      int p = raw_peek();
      if (p == ' ' || p == '\t' || p == '\n') {
        if (p == '\n' && state_ == LineState::N) break;  // \par would begin
        raw_next();
        if (p == '\n') state_ = LineState::N;
        continue;
      }
      if (p == '%') {
        raw_next();
        while (true) {
          int k = raw_next();
          if (k < 0 || k == '\n') break;
        }
        state_ = LineState::N;
        continue;
      }
      break;
    }
    int p = raw_peek();
    if (p < 0) return "";
    if (p == '{') {
      raw_next();
      std::string out;
      int depth = 1;
      while (true) {
        int k = raw_next();
        if (k < 0) break;
        char c = char(k);
        if (c == '\\') {
          out += c;
          int k2 = raw_next();
          if (k2 >= 0) out += char(k2);
          continue;
        }
        if (c == '%') {
          while (true) {
            int k2 = raw_next();
            if (k2 < 0 || k2 == '\n') break;
          }
          continue;
        }
        if (c == '{') ++depth;
        if (c == '}') {
          if (--depth == 0) break;
        }
        out += c;
      }
      state_ = LineState::M;
      return out;
    }
    if (p == '\\') {
      raw_next();
      int q = raw_peek();
      if (q >= 0 && std::isalpha(q)) {
        std::string name = "\\";
        while (true) {
          int k = raw_next();
          if (k < 0) break;
          if (std::isalpha(k)) name += char(k);
          else {
            raw_unget();
            break;
          }
        }
        state_ = LineState::S;
        return name;
      }
      raw_next();
      state_ = LineState::M;
      return std::string("\\") + char(q);
    }
    raw_next();
    state_ = LineState::M;
    return std::string(1, char(p));
  }

  std::optional<std::string> read_optional() {
    // [..] if present.
    while (true) {
      int p = raw_peek();
      if (p == ' ' || p == '\t') {
        raw_next();
        continue;
      }
      break;
    }
    if (raw_peek() != '[') return std::nullopt;
    raw_next();
    std::string out;
    while (true) {
      int k = raw_next();
      if (k < 0 || k == ']') break;
      out += char(k);
    }
    state_ = LineState::M;
    return out;
  }

  // ---- typesetting ----

  void emit_char(char c) {
    if (capturing_) {
      if (pending_space_ && !capture_.empty()) capture_ += ' ';
      pending_space_ = false;
      capture_ += c;
      return;
    }
    if (!in_document_) return;
    if (pending_space_) {
      pending_space_ = false;
      if (!line_.empty()) {
        if (int(line_.size()) + 1 >= kCols) {
          flush_line();
        } else {
          line_ += ' ';
        }
      }
    }
    if (int(line_.size()) >= kCols) flush_line();
    line_ += c;
    fresh_par_ = false;
  }

  void emit_space() { pending_space_ = true; }

  void emit_par() {
    if (capturing_) {
      pending_space_ = true;
      return;
    }
    if (!in_document_ || fresh_par_) return;
    flush_line();
    cursor_y_ -= kParSkip;
    fresh_par_ = true;
    pending_space_ = false;
  }

  void flush_line() {
    if (capturing_) return;
    if (!line_.empty()) {
      ensure_page(kLineH);
      cursor_y_ -= kLineH;
      PageItem it;
      it.kind = PageItem::text_line;
      it.x = kMargin;
      it.y = cursor_y_;
      it.text = line_;
      pages_.back().items.push_back(std::move(it));
      line_.clear();
    }
    pending_space_ = false;
  }

  void emit_line(const std::string& text) {
    flush_line();
    line_ = text;
    flush_line();
    fresh_par_ = true;
  }

  void vskip(double pts) {
    if (!in_document_ || capturing_) return;
    flush_line();
    cursor_y_ -= pts;
  }

  void ensure_page(double need) {
    if (pages_.empty() || cursor_y_ - need < kMargin) {
      pages_.emplace_back();
      cursor_y_ = kPageH - kMargin;
    }
  }

  void page_break() {
    flush_line();
    if (!pages_.empty() && !pages_.back().items.empty())
      cursor_y_ = kMargin;  // forces a fresh page on next output
  }

  void draw_figure(const std::string& digest, double w, double h) {
    if (!in_document_ || capturing_) return;
    flush_line();
    ensure_page(h + 4);
    cursor_y_ -= h + 2;
    double x0 = kMargin, y0 = cursor_y_;
    auto add_rect = [&](double x, double y, double rw, double rh) {
      PageItem it;
      it.kind = PageItem::rect;
      it.x = x;
      it.y = y;
      it.w = rw;
      it.h = rh;
      pages_.back().items.push_back(it);
    };
    // Frame.
    add_rect(x0, y0, w, 1);
    add_rect(x0, y0 + h - 1, w, 1);
    add_rect(x0, y0, 1, h);
    add_rect(x0 + w - 1, y0, 1, h);
    // 8x8 content pattern from the digest.
    double cw = w / 8.0, chh = h / 8.0;
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        unsigned nibble_index = unsigned(i * 8 + j);
        char hex = digest[nibble_index % digest.size()];
        int v = hex <= '9' ? hex - '0' : (hex - 'a' + 10);
        if (v & 1) add_rect(x0 + j * cw + 1, y0 + i * chh + 1, cw - 2, chh - 2);
      }
    }
    cursor_y_ -= 2;
    fresh_par_ = true;
  }

  std::string render_fragment(const std::string& src) {
    auto saved_stack = std::move(stack_);
    auto saved_state = state_;
    bool saved_cap = capturing_;
    std::string saved_buf = std::move(capture_);
    bool saved_pending = pending_space_;

    stack_.clear();
    push_source(src);
    state_ = LineState::M;
    capturing_ = true;
    capture_.clear();
    pending_space_ = false;
    while (!stopped_) {
      Token t = next_token();
      if (t.kind == Token::eof) break;
      exec(t);
    }
    std::string out = std::move(capture_);

    stack_ = std::move(saved_stack);
    state_ = saved_state;
    capturing_ = saved_cap;
    capture_ = std::move(saved_buf);
    pending_space_ = saved_pending;
    return out;
  }

  // ---- conditionals ----

  bool is_if_name(const std::string& name) const {
    if (primitive_ifs().count(name)) return true;
    return name.size() > 2 && name.compare(0, 2, "if") == 0 &&
           flags_.count(name.substr(2)) > 0;
  }

  // Token-level skip to \else (when take_else) or \fi, TeX style: counts
  // conditional openers; no environment awareness.
  // Returns true if stopped at \else at depth 0.
  bool skip_branch(bool stop_at_else) {
    int depth = 0;
    while (true) {
      int ci = raw_next();
      if (ci < 0) return false;
      char c = char(ci);
      if (c == '%') {
        while (true) {
          int k = raw_next();
          if (k < 0 || k == '\n') break;
        }
        continue;
      }
      if (c != '\\') continue;
      int p = raw_peek();
      if (p < 0) return false;
      if (!std::isalpha(p)) {
        raw_next();
        continue;
      }
      std::string name;
      while (true) {
        int k = raw_next();
        if (k < 0) break;
        if (std::isalpha(k)) name += char(k);
        else {
          raw_unget();
          break;
        }
      }
      if (is_if_name(name)) {
        ++depth;
      } else if (name == "fi") {
        if (depth == 0) {
          state_ = LineState::S;  // just consumed a control word
          return false;
        }
        --depth;
      } else if (name == "else" && stop_at_else && depth == 0) {
        state_ = LineState::S;
        return true;
      }
    }
  }

  void run_conditional(bool value) {
    if (value) return;  // body processed normally until \else / \fi
    bool hit_else = skip_branch(true);
    (void)hit_else;  // at \else the else-branch is processed normally
  }

  // Comparand for \if: character code, 32 for space runs, 256 for
  // unexpandable control sequences; macros expand first.
  int next_cmp_code() {
    for (int guard = 0; guard < 64; ++guard) {
      Token t = next_token();
      switch (t.kind) {
        case Token::ch: return t.c;
        case Token::space: return 32;
        case Token::par: return 32;
        case Token::cs: {
          auto it = macros_.find(t.name);
          if (it != macros_.end() && it->second.argc == 0 &&
              !it->second.has_optional) {
            push_source(it->second.body);
            continue;
          }
          return 256;
        }
        case Token::eof: return -1;
      }
    }
    return 256;
  }

  long read_number() {
    while (raw_peek() == ' ') raw_next();
    bool neg = false;
    if (raw_peek() == '-') {
      neg = true;
      raw_next();
    }
    long v = 0;
    while (raw_peek() >= '0' && raw_peek() <= '9') v = v * 10 + (raw_next() - '0');
    return neg ? -v : v;
  }

  void exec_conditional(const std::string& name) {
    if (name == "iftrue") return run_conditional(true);
    if (name == "iffalse") return run_conditional(false);
    if (name == "if") {
      int a = next_cmp_code();
      int b = next_cmp_code();
      return run_conditional(a == b);
    }
    if (name == "ifx") {
      Token a = next_token(), b = next_token();
      bool eq = a.kind == b.kind && a.name == b.name && a.c == b.c;
      return run_conditional(eq);
    }
    if (name == "ifnum") {
      long a = read_number();
      while (raw_peek() == ' ') raw_next();
      int rel = raw_next();
      long b = read_number();
      bool v = rel == '<' ? a < b : rel == '>' ? a > b : a == b;
      return run_conditional(v);
    }
    if (name == "ifdefined") {
      Token t = next_token();
      bool defined = t.kind == Token::cs &&
                     (macros_.count(t.name) || builtin_names_.count(t.name) ||
                      is_if_name(t.name));
      return run_conditional(defined);
    }
    if (name == "ifcsname") {
      std::string acc;
      while (true) {
        Token t = next_token();
        if (t.kind == Token::eof) break;
        if (t.kind == Token::cs && t.name == "endcsname") break;
        if (t.kind == Token::ch) acc += t.c;
      }
      return run_conditional(macros_.count(acc) > 0);
    }
    if (name.size() > 2 && name.compare(0, 2, "if") == 0 &&
        flags_.count(name.substr(2))) {
      return run_conditional(flags_[name.substr(2)]);
    }
    // ifmmode, ifdim, ... : not modeled, take the false branch.
    run_conditional(false);
  }

  // ---- file resolution ----

  std::optional<std::string> resolve_input(const std::string& raw,
                                           const std::vector<std::string>& exts) {
    std::string name = trim(raw);
    for (const auto& dir : graphics_paths_) {
      for (const auto& ext : exts) {
        std::string candidate = dir + name + ext;
        std::error_code ec;
        if (fs::exists(candidate, ec) && fs::is_regular_file(candidate, ec))
          return candidate;
      }
    }
    return std::nullopt;
  }

  void do_input(const std::string& name) {
    auto resolved = resolve_input(name, {"", ".tex"});
    std::string text;
    if (!resolved || !input_file(*resolved, &text)) {
      log("! I can't find file `" + name + "'.");
      errors_ = true;
      return;
    }
    log("(" + *resolved + ")");
    push_source(text);
  }

  // ---- environments ----

  void begin_env(const std::string& env) {
    if (env == "document") {
      in_document_ = true;
      ensure_page(0);
      if (!title_.empty()) {
        // \maketitle may still follow; nothing rendered here.
      }
      return;
    }
    if (env == "comment") {
      skip_comment_env(env);
      return;
    }
    if (verbatim_envs().count(env)) {
      literal_env(env);
      return;
    }
    if (env == "itemize" || env == "enumerate" || env == "description") {
      ++item_depth_;
      enum_counter_ = 0;
      emit_par();
      return;
    }
    if (env == "thebibliography") {
      read_group();  // widest-label argument
      vskip(kParSkip);
      emit_line("References");
      return;
    }
    if (env == "figure" || env == "table" || env == "center" ||
        env == "abstract" || env == "equation" || env == "align" ||
        env == "tabular" || env == "quote") {
      if (env == "tabular") read_group();  // column spec
      emit_par();
      return;
    }
    // Unknown environment: contents are processed normally.
  }

  void end_env(const std::string& env) {
    if (env == "document") {
      stopped_ = true;
      return;
    }
    if (env == "itemize" || env == "enumerate" || env == "description") {
      if (item_depth_ > 0) --item_depth_;
      emit_par();
      return;
    }
    if (env == "figure" || env == "table" || env == "center" ||
        env == "abstract" || env == "equation" || env == "align" ||
        env == "tabular" || env == "quote" || env == "thebibliography") {
      emit_par();
      return;
    }
  }

  // Skips a comment environment line-wise: everything through the line
  // containing \end{env} (inclusive) vanishes.
  void skip_comment_env(const std::string& env) {
    std::string closer = "\\end{" + env + "}";
    std::string window;
    while (true) {
      int k = raw_next();
      if (k < 0) return;
      window += char(k);
      if (window.size() > closer.size() + 2) window.erase(0, 1);
      if (window.find(closer) != std::string::npos) break;
    }
    while (true) {  // consume the rest of the closing line
      int k = raw_next();
      if (k < 0 || k == '\n') break;
    }
    state_ = LineState::N;
  }

  void literal_env(const std::string& env) {
    std::string closer = "\\end{" + env + "}";
    std::string body;
    while (true) {
      int k = raw_next();
      if (k < 0) break;
      body += char(k);
      if (body.size() >= closer.size() &&
          body.compare(body.size() - closer.size(), closer.size(), closer) == 0) {
        body.erase(body.size() - closer.size());
        break;
      }
    }
    emit_par();
    // Verbatim lines are typeset raw, monospaced, no wrapping semantics.
    std::size_t start = 0;
    if (!body.empty() && body[0] == '\n') start = 1;
    std::string cur;
    for (std::size_t i = start; i < body.size(); ++i) {
      if (body[i] == '\n') {
        emit_line(cur);
        cur.clear();
      } else {
        cur += body[i];
      }
    }
    if (!cur.empty()) emit_line(cur);
    emit_par();
    state_ = LineState::M;
  }

  // ---- command dispatch ----

  void exec(const Token& t) {
    switch (t.kind) {
      case Token::ch: {
        char c = t.c;
        if (c == '{' || c == '}' || c == '$') return;
        if (c == '~') return emit_space();
        if (c == '&') {
          emit_space();
          return;
        }
        return emit_char(c);
      }
      case Token::space: return emit_space();
      case Token::par: return emit_par();
      case Token::cs: return exec_cs(t);
      case Token::eof: return;
    }
  }

  void exec_cs(const Token& t) {
    const std::string& name = t.name;

    // Control symbols.
    if (name.size() == 1 && !std::isalpha(std::uint8_t(name[0]))) {
      char c = name[0];
      switch (c) {
        case '\\': flush_line(); return;
        case '%': case '$': case '&': case '#': case '_': case '{': case '}':
          return emit_char(c);
        case ' ': case '\n': return emit_space();
        case ',': case ';': case ':': case '!': case '-': case '/':
          return;  // spacing refinements
        case '(': case ')': case '[': case ']':
          return;  // math delimiters
        case '\'': case '`': case '^': case '"': case '~': case '=': case '.':
          return;  // accents: the base letter follows in the stream
        case '@': return;
        default: return;
      }
    }

    if (is_if_name(name)) return exec_conditional(name);

    // Flag assignments from \newif.
    for (const char* suffix : {"true", "false"}) {
      std::size_t sl = std::strlen(suffix);
      if (name.size() > sl && name.compare(name.size() - sl, sl, suffix) == 0) {
        std::string flag = name.substr(0, name.size() - sl);
        if (flags_.count(flag)) {
          flags_[flag] = (sl == 4);
          return;
        }
      }
    }

    if (name == "begin") return begin_env(trim(read_group()));
    if (name == "end") return end_env(trim(read_group()));
    if (name == "par") return emit_par();
    if (name == "fi" || name == "else" || name == "or") {
      if (name == "else") skip_branch(false);  // taken-branch end: skip to \fi
      return;
    }

    if (name == "newif") {
      Token f = next_token();
      if (f.kind == Token::cs && f.name.size() > 2 && f.name.compare(0, 2, "if") == 0)
        flags_[f.name.substr(2)] = false;
      return;
    }

    if (name == "newcommand" || name == "renewcommand" || name == "providecommand" ||
        name == "DeclareRobustCommand") {
      if (raw_peek() == '*') raw_next();
      std::string target = read_group();
      if (starts_with(target, "\\")) target = target.substr(1);
      Macro m;
      if (auto n = read_optional()) m.argc = std::atoi(n->c_str());
      if (auto d = read_optional()) {
        m.has_optional = true;
        m.default_opt = *d;
      }
      m.body = read_group();
      if (name == "providecommand" && macros_.count(target)) return;
      if (!target.empty()) macros_[target] = m;
      return;
    }
    if (name == "def" || name == "gdef" || name == "edef" || name == "xdef") {
      Token target = next_token();
      if (target.kind != Token::cs) return;
      Macro m;
      // Parameter text up to the body group.
      while (true) {
        int p = raw_peek();
        if (p < 0 || p == '{') break;
        int k = raw_next();
        if (k == '#') {
          int d = raw_peek();
          if (d >= '1' && d <= '9') {
            raw_next();
            m.argc = std::max(m.argc, d - '0');
          }
        }
      }
      m.body = read_group();
      macros_[target.name] = m;
      return;
    }
    if (name == "let") {
      Token a = next_token();
      while (raw_peek() == '=') raw_next();
      Token b = next_token();
      if (a.kind == Token::cs && b.kind == Token::cs && macros_.count(b.name))
        macros_[a.name] = macros_[b.name];
      return;
    }

    if (name == "input" || name == "include") {
      if (name == "include") page_break();
      std::string arg;
      if (raw_peek() == '{') {
        arg = read_group();
      } else {
        while (raw_peek() == ' ') raw_next();
        while (true) {
          int p = raw_peek();
          if (p < 0 || p == ' ' || p == '\n' || p == '\t' || p == '\\' || p == '%' ||
              p == '{' || p == '}')
            break;
          arg += char(raw_next());
        }
      }
      return do_input(arg);
    }
    if (name == "InputIfFileExists") {
      std::string file = read_group();
      std::string then_branch = read_group();
      std::string else_branch = read_group();
      if (resolve_input(file, {"", ".tex"})) {
        push_source(then_branch);
        do_input(file);
      } else {
        push_source(else_branch);
      }
      return;
    }
    if (name == "IfFileExists") {
      std::string file = read_group();
      std::string then_branch = read_group();
      std::string else_branch = read_group();
      std::error_code ec;
      push_source(fs::exists(trim(file), ec) ? then_branch : else_branch);
      return;
    }

    if (name == "usepackage" || name == "RequirePackage" || name == "documentclass" ||
        name == "documentstyle" || name == "LoadClass") {
      read_optional();
      std::string arg = read_group();
      bool is_class = name == "documentclass" || name == "documentstyle" ||
                      name == "LoadClass";
      for (auto& pkg : split(arg, ',')) {
        std::string base = trim(pkg);
        if (base.empty()) continue;
        auto resolved = resolve_input(base, {is_class ? ".cls" : ".sty"});
        if (resolved) do_input(base + (is_class ? ".cls" : ".sty"));
      }
      return;
    }

    if (name == "graphicspath") {
      std::string arg = read_group();
      graphics_paths_.assign(1, "");
      std::string cur;
      int depth = 0;
      for (char c : arg) {
        if (c == '{') { ++depth; continue; }
        if (c == '}') {
          if (!cur.empty()) graphics_paths_.push_back(cur);
          cur.clear();
          --depth;
          continue;
        }
        if (depth > 0) cur += c;
      }
      return;
    }

    if (name == "includegraphics") {
      auto opt = read_optional();
      std::string arg = read_group();
      auto resolved = resolve_input(arg, {"", ".png", ".pdf", ".jpg", ".jpeg"});
      if (!resolved) {
        log("! Missing graphics file `" + arg + "'.");
        errors_ = true;
        return;
      }
      std::string text;
      input_file(*resolved, &text);
      Bytes data(text.begin(), text.end());
      double w = 100, h = 75;
      if (opt) {
        auto pos = opt->find("width=");
        if (pos != std::string::npos) {
          double v = std::atof(opt->c_str() + pos + 6);
          if (v > 1) {
            w = v;
            h = v * 0.75;
          }
        }
      }
      draw_figure(content_digest(data), w, h);
      return;
    }

    if (name == "bibliography") {
      std::string arg = read_group();
      std::vector<std::string> candidates = {jobname_ + ".bbl"};
      for (auto& part : split(arg, ','))
        candidates.push_back(trim(part) + ".bbl");
      for (const auto& c : candidates) {
        std::error_code ec;
        if (fs::exists(c, ec)) {
          std::string text;
          input_file(c, &text);
          push_source(text);
          return;
        }
      }
      log("No file " + candidates.front() + ".");
      return;
    }
    if (name == "bibliographystyle") {
      read_group();
      return;
    }
    if (name == "bibitem") {
      auto opt = read_optional();
      std::string key = read_group();
      flush_line();
      emit_char('[');
      for (char c : (opt ? *opt : key)) emit_char(c);
      emit_char(']');
      emit_space();
      return;
    }
    if (name == "cite") {
      read_optional();
      std::string keys = read_group();
      citations_.push_back(keys);
      emit_char('[');
      for (char c : keys) emit_char(c);
      emit_char(']');
      return;
    }
    if (name == "label") {
      std::string key = trim(read_group());
      labels_now_[key] = current_ref_value();
      return;
    }
    if (name == "ref" || name == "pageref" || name == "eqref" || name == "autoref" ||
        name == "cref" || name == "Cref") {
      std::string key = trim(read_group());
      auto it = labels_prev_.find(key);
      std::string text = it != labels_prev_.end() ? it->second : "??";
      for (char c : text) emit_char(c);
      return;
    }

    if (name == "section" || name == "subsection" || name == "subsubsection" ||
        name == "chapter" || name == "paragraph") {
      if (raw_peek() == '*') raw_next();
      std::string title = render_fragment(read_group());
      int level = name == "section" || name == "chapter" ? 0
                  : name == "subsection"                 ? 1
                                                         : 2;
      ++sect_[level];
      for (int i = level + 1; i < 3; ++i) sect_[i] = 0;
      ++label_counter_;
      std::string num = std::to_string(sect_[0]);
      for (int i = 1; i <= level; ++i) num += "." + std::to_string(sect_[i]);
      vskip(kParSkip);
      emit_line(num + "  " + title);
      vskip(2);
      return;
    }

    if (name == "title") { title_ = render_fragment(read_group()); return; }
    if (name == "author") { author_ = render_fragment(read_group()); return; }
    if (name == "date") { date_ = render_fragment(read_group()); return; }
    if (name == "maketitle") {
      emit_line(title_.empty() ? "(untitled)" : title_);
      if (!author_.empty()) emit_line(author_);
      emit_line(date_.empty() ? today() : date_);
      vskip(kParSkip);
      return;
    }
    if (name == "today") {
      for (char c : today()) emit_char(c);
      return;
    }

    if (name == "item") {
      flush_line();
      auto opt = read_optional();
      std::string marker = opt ? *opt : "*";
      for (char c : marker) emit_char(c);
      emit_char(' ');
      fresh_par_ = false;
      return;
    }

    if (name == "footnote") {
      std::string note = render_fragment(read_group());
      emit_char('(');
      for (char c : note) emit_char(c);
      emit_char(')');
      return;
    }

    if (name == "textbf" || name == "textit" || name == "texttt" || name == "emph" ||
        name == "textsc" || name == "textrm" || name == "textsf" || name == "mbox" ||
        name == "text" || name == "underline" || name == "caption") {
      // Styling is not rendered; contents pass through with TeX tokenization.
      if (raw_peek() == '{') push_source(read_group());
      return;
    }

    if (name == "verb") {
      int delim = raw_next();
      if (delim == '*') delim = raw_next();
      std::string body;
      while (true) {
        int k = raw_next();
        if (k < 0 || k == delim || k == '\n') break;
        body += char(k);
      }
      for (char c : body) emit_char(c);
      return;
    }

    if (name == "newpage" || name == "clearpage" || name == "pagebreak") {
      page_break();
      return;
    }
    if (name == "vspace" || name == "vskip") {
      std::string amt = name == "vspace" ? read_group() : "";
      double v = std::atof(amt.c_str());
      vskip(v > 0 ? v : kParSkip);
      return;
    }
    if (name == "hspace") { read_group(); emit_space(); return; }
    if (name == "bigskip") return vskip(12);
    if (name == "medskip") return vskip(6);
    if (name == "smallskip") return vskip(3);
    if (name == "hline" || name == "midrule" || name == "toprule" ||
        name == "bottomrule") {
      emit_line("----------");
      return;
    }

    if (name == "message" || name == "typeout") {
      log(read_group());
      return;
    }
    if (name == "openin") {
      // \openin<number>=<file name terminated by space or EOL>
      read_number();
      while (raw_peek() == '=' || raw_peek() == ' ') raw_next();
      std::string fname;
      while (true) {
        int p = raw_peek();
        if (p < 0 || p == ' ' || p == '\n' || p == '\t' || p == '\\' || p == '%')
          break;
        fname += char(raw_next());
      }
      std::string text;
      if (!fname.empty() && !input_file(fname, &text))
        log("! I can't find file `" + fname + "'.");
      return;
    }
    if (name == "closein" || name == "read") {
      read_number();
      return;
    }

    if (name == "newlabel") {  // aux replay
      std::string key = read_group();
      std::string val = read_group();
      labels_prev_[trim(key)] = val;
      return;
    }
    if (name == "citation") {
      read_group();
      return;
    }
    if (name == "relax" || name == "noindent" || name == "centering" ||
        name == "raggedright" || name == "small" || name == "large" ||
        name == "Large" || name == "normalsize" || name == "itshape" ||
        name == "bfseries" || name == "ttfamily" || name == "selectfont" ||
        name == "tableofcontents" || name == "listoffigures" ||
        name == "makeatletter" || name == "makeatother" || name == "sloppy" ||
        name == "frenchspacing" || name == "flushbottom" || name == "raggedbottom") {
      return;
    }
    if (name == "setlength" || name == "setcounter" || name == "addtolength") {
      read_group();
      read_group();
      return;
    }
    if (name == "newenvironment") {
      // Registered but not modeled: consume the three groups.
      read_group();
      read_optional();
      read_group();
      read_group();
      return;
    }

    // User macro?
    auto it = macros_.find(name);
    if (it != macros_.end()) {
      const Macro& m = it->second;
      std::vector<std::string> args;
      int first = 0;
      if (m.has_optional && m.argc > 0) {
        auto o = read_optional();
        args.push_back(o ? *o : m.default_opt);
        first = 1;
      }
      for (int i = first; i < m.argc; ++i) args.push_back(read_group());
      std::string expansion;
      expansion.reserve(m.body.size());
      for (std::size_t i = 0; i < m.body.size(); ++i) {
        char c = m.body[i];
        if (c == '#' && i + 1 < m.body.size()) {
          char d = m.body[i + 1];
          if (d == '#') {
            expansion += '#';
            ++i;
            continue;
          }
          if (d >= '1' && d <= '9') {
            int idx = d - '1';
            if (idx < int(args.size())) expansion += args[std::size_t(idx)];
            ++i;
            continue;
          }
        }
        expansion += c;
      }
      pop_exhausted();
      push_source(expansion);
      return;
    }

    // Unknown control sequence: logged, otherwise ignored (nonstopmode).
    log("Undefined control sequence \\" + name + " (ignored).");
  }

  std::string current_ref_value() {
    if (sect_[0] == 0) return std::to_string(++label_counter_);
    std::string num = std::to_string(sect_[0]);
    if (sect_[1]) num += "." + std::to_string(sect_[1]);
    return num;
  }

  std::string today() const {
    static const char* months[] = {"January",   "February", "March",    "April",
                                   "May",       "June",     "July",     "August",
                                   "September", "October",  "November", "December"};
    std::time_t t = epoch_;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s %d, %d", months[tm.tm_mon], tm.tm_mday,
                  tm.tm_year + 1900);
    return buf;
  }

  void main_loop() {
    while (!stopped_) {
      Token t = next_token();
      if (t.kind == Token::eof) break;
      exec(t);
    }
  }

  // ---- aux ----

  void read_aux() {
    fs::path aux = outdir_ / (jobname_ + ".aux");
    std::error_code ec;
    if (!fs::exists(aux, ec)) return;
    std::string text;
    if (!input_file(aux.string(), &text)) return;
    aux_existed_ = true;
    macros_["auxmark"] = Macro{};  // visible to \ifdefined\auxmark
    push_source(text);
    while (true) {
      Token t = next_token();
      if (t.kind == Token::eof) break;
      if (t.kind == Token::cs) exec_cs_aux(t);
    }
    stack_.clear();
  }

  void exec_cs_aux(const Token& t) {
    if (t.name == "newlabel") {
      std::string key = read_group();
      std::string val = read_group();
      labels_prev_[trim(key)] = val;
    }
  }

  void write_aux() {
    fs::path aux = outdir_ / (jobname_ + ".aux");
    std::ofstream out(aux, std::ios::trunc);
    out << "\\relax\n";
    out << "\\gdef\\auxmark{1}\n";
    for (const auto& [k, v] : labels_now_) out << "\\newlabel{" << k << "}{" << v << "}\n";
    for (const auto& c : citations_) out << "\\citation{" << c << "}\n";
    rec_outputs_.push_back(aux.string());
  }

  // ---- PDF output ----

  static std::string escape_pdf(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
      if (c == '(' || c == ')' || c == '\\') {
        out += '\\';
        out += char(c);
      } else if (c < 32 || c > 126) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "\\%03o", c);
        out += buf;
      } else {
        out += char(c);
      }
    }
    return out;
  }

  void write_pdf() {
    if (pages_.empty()) pages_.emplace_back();

    std::vector<std::string> objects;
    auto obj = [&](const std::string& body) {
      objects.push_back(body);
      return objects.size();  // 1-based object number
    };

    std::size_t npages = pages_.size();
    // Object layout: 1 catalog, 2 pages, 3 font, 4 info, then per page:
    // 5+2i content, 6+2i page.
    std::string kids;
    for (std::size_t i = 0; i < npages; ++i)
      kids += std::to_string(6 + 2 * i) + " 0 R ";

    obj("<< /Type /Catalog /Pages 2 0 R >>");
    obj("<< /Type /Pages /Kids [ " + kids + "] /Count " + std::to_string(npages) +
        " >>");
    obj("<< /Type /Font /Subtype /Type1 /BaseFont /Courier >>");
    obj("<< /Producer (minitex 0.3) /CreationDate (" + pdf_date(epoch_) + ") >>");

    for (const auto& page : pages_) {
      std::string cs;
      for (const auto& it : page.items) {
        char buf[160];
        if (it.kind == PageItem::text_line) {
          std::snprintf(buf, sizeof(buf), "BT /F1 %g Tf 1 0 0 1 %.2f %.2f Tm (",
                        kFontSize, it.x, it.y);
          cs += buf;
          cs += escape_pdf(it.text);
          cs += ") Tj ET\n";
        } else {
          std::snprintf(buf, sizeof(buf), "%.2f %.2f %.2f %.2f re f\n", it.x, it.y,
                        it.w, it.h);
          cs += buf;
        }
      }
      std::size_t content_num =
          obj("<< /Length " + std::to_string(cs.size()) + " >>\nstream\n" + cs +
              "endstream");
      obj("<< /Type /Page /Parent 2 0 R /MediaBox [0 0 " + std::to_string(int(kPageW)) +
          " " + std::to_string(int(kPageH)) + "] /Resources << /Font << /F1 3 0 R >> >> /Contents " +
          std::to_string(content_num) + " 0 R >>");
    }

    std::string pdf = "%PDF-1.4\n";
    std::vector<std::size_t> offsets;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      offsets.push_back(pdf.size());
      pdf += std::to_string(i + 1) + " 0 obj\n" + objects[i] + "\nendobj\n";
    }
    std::size_t xref_off = pdf.size();
    pdf += "xref\n0 " + std::to_string(objects.size() + 1) + "\n";
    pdf += "0000000000 65535 f \n";
    for (auto off : offsets) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%010zu 00000 n \n", off);
      pdf += buf;
    }
    pdf += "trailer\n<< /Size " + std::to_string(objects.size() + 1) +
           " /Root 1 0 R /Info 4 0 R >>\nstartxref\n" + std::to_string(xref_off) +
           "\n%%EOF\n";

    fs::path out = outdir_ / (jobname_ + ".pdf");
    write_file(out, to_bytes(pdf));
    rec_outputs_.push_back(out.string());
    log("Output written on " + out.string() + " (" + std::to_string(pages_.size()) +
        " pages).");
  }

  void finish() {
    flush_line();
    write_aux();
    write_pdf();
  }
};

}  // namespace

int main(int argc, char** argv) {
  bool recorder = false;
  std::string outdir = ".";
  std::string jobname;
  std::string file;

  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "-recorder" || a == "--recorder") {
      recorder = true;
    } else if (starts_with(a, "-interaction") || starts_with(a, "--interaction")) {
      // batch behavior is the only mode
    } else if (starts_with(a, "-output-directory=")) {
      outdir = a.substr(std::string("-output-directory=").size());
    } else if (a == "-output-directory" && i + 1 < argc) {
      outdir = argv[++i];
    } else if (starts_with(a, "-jobname=")) {
      jobname = a.substr(9);
    } else if (a == "-halt-on-error" || a == "-file-line-error") {
      // accepted for compatibility
    } else if (!a.empty() && a[0] == '-') {
      std::cerr << "minitex: unknown option " << a << "\n";
      return 2;
    } else {
      file = a;
    }
  }
  if (file.empty()) {
    std::cerr << "usage: minitex [-recorder] [-interaction=MODE] "
                 "[-output-directory=DIR] file.tex\n";
    return 2;
  }
  std::error_code ec;
  if (!fs::exists(file, ec) && fs::exists(file + ".tex", ec)) file += ".tex";

  Engine engine{fs::path(file), fs::path(outdir), recorder, jobname};
  return engine.run();
}
