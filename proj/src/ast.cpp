#include "texsan/ast.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <string_view>

namespace texsan {

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::text: return "text";
    case NodeKind::line_comment: return "line_comment";
    case NodeKind::environment: return "environment";
    case NodeKind::conditional: return "conditional";
    case NodeKind::command_definition: return "command_definition";
    case NodeKind::command_use: return "command_use";
    case NodeKind::escaped_char: return "escaped_char";
    case NodeKind::error: return "error";
  }
  return "?";
}

std::vector<std::string> default_verbatim_envs() {
  return {"verbatim", "verbatim*", "lstlisting", "minted",
          "alltt",    "filecontents", "filecontents*"};
}

namespace {

bool is_letter(std::uint8_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_env_name_char(std::uint8_t c) {
  return is_letter(c) || (c >= '0' && c <= '9') || c == '*' || c == '@' || c == '_';
}

bool valid_utf8(const Bytes& b) {
  std::size_t i = 0;
  while (i < b.size()) {
    std::uint8_t c = b[i];
    int extra;
    if (c < 0x80) extra = 0;
    else if ((c & 0xE0) == 0xC0) extra = 1;
    else if ((c & 0xF0) == 0xE0) extra = 2;
    else if ((c & 0xF8) == 0xF0) extra = 3;
    else return false;
    if (i + extra >= b.size() && extra > 0) return false;
    for (int k = 1; k <= extra; ++k)
      if ((b[i + k] & 0xC0) != 0x80) return false;
    i += extra + 1;
  }
  return true;
}

// TeX's built-in conditional primitives (what a skipping scanner balances
// against \fi).
const std::set<std::string>& primitive_conditionals() {
  static const std::set<std::string> s = {
      "if",        "ifx",        "ifnum",   "ifdim",  "ifodd",    "ifvmode",
      "ifhmode",   "ifmmode",    "ifinner", "ifvoid", "ifhbox",   "ifvbox",
      "ifeof",     "iftrue",     "iffalse", "ifcase", "ifdefined",
      "ifcsname",  "ifincsname", "iffontchar"};
  return s;
}

struct KnownArgs {
  int groups = 0;
  bool optional = false;
  bool unbraced_ok = false;  // `\input foo` style
};

const std::map<std::string, KnownArgs>& known_arg_commands() {
  static const std::map<std::string, KnownArgs> m = {
      {"input", {1, false, true}},
      {"include", {1, false, false}},
      {"InputIfFileExists", {3, false, false}},
      {"IfFileExists", {3, false, false}},
      {"usepackage", {1, true, false}},
      {"RequirePackage", {1, true, false}},
      {"documentclass", {1, true, false}},
      {"documentstyle", {1, true, false}},
      {"LoadClass", {1, true, false}},
      {"bibliography", {1, false, false}},
      {"bibliographystyle", {1, false, false}},
      {"includegraphics", {1, true, false}},
      {"graphicspath", {1, false, false}},
      {"lstinputlisting", {1, true, false}},
      {"verbatiminput", {1, false, false}},
      {"label", {1, false, false}},
      {"ref", {1, false, false}},
      {"cite", {1, true, false}},
      {"excludecomment", {1, false, false}},
      {"includecomment", {1, false, false}},
      {"import", {2, false, false}},
      {"subimport", {2, false, false}},
  };
  return m;
}

enum class Stop { eof, env_end, group_close, cond_fi };

class Parser {
 public:
  Parser(const Bytes& bytes, const ParseOptions& opts) : b_(bytes), opts_(opts) {
    line_starts_.push_back(0);
    for (std::size_t i = 0; i < b_.size(); ++i)
      if (b_[i] == '\n') line_starts_.push_back(i + 1);
    if (opts.verbatim_envs.empty()) {
      auto dv = default_verbatim_envs();
      verbatim_.insert(dv.begin(), dv.end());
    } else {
      verbatim_.insert(opts.verbatim_envs.begin(), opts.verbatim_envs.end());
    }
    comment_envs_ = opts.comment_envs;
    comment_envs_.insert("comment");
    macros_ = opts.seed_macros;
    flags_ = opts.seed_flags;
  }

  ParseResult run() {
    ParseResult res;
    res.root.kind = NodeKind::text;
    parse_nodes(res.root, Stop::eof, "");
    res.root.span = make_span(0, b_.size());
    res.status = errors_.empty() ? ParseStatus::ok : ParseStatus::partial;
    res.errors = errors_;
    res.macros = macros_;
    res.newif_flags = flags_;
    res.flag_assigns = flag_assigns_;
    res.comment_envs = comment_envs_;
    res.saw_document_class = saw_document_class_;
    res.end_document_pos = end_document_pos_;
    return res;
  }

 private:
  const Bytes& b_;
  const ParseOptions& opts_;
  std::size_t pos_ = 0;
  std::vector<std::size_t> line_starts_;
  std::set<std::string> verbatim_;
  std::set<std::string> comment_envs_;
  MacroTable macros_;
  std::set<std::string> flags_;
  std::vector<FlagAssign> flag_assigns_;
  std::vector<Span> errors_;
  int depth_ = 0;
  int cond_depth_ = 0;
  int def_depth_ = 0;
  bool in_document_ = false;
  bool saw_document_class_ = false;
  std::size_t end_document_pos_ = AstNode::npos;
  bool unterminated_ = false;

  std::size_t n() const { return b_.size(); }
  std::uint8_t at(std::size_t i) const { return b_[i]; }
  bool eof() const { return pos_ >= n(); }

  std::uint32_t line_of(std::size_t off) const {
    auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), off);
    return std::uint32_t(it - line_starts_.begin());
  }

  Span make_span(std::size_t s, std::size_t e) const { return Span{s, e, line_of(s)}; }

  void record_error(std::size_t s, std::size_t e) { errors_.push_back(make_span(s, e)); }

  AstNode leaf(NodeKind k, std::size_t s, std::size_t e, std::string name = "") {
    AstNode node;
    node.kind = k;
    node.span = make_span(s, e);
    node.name = std::move(name);
    return node;
  }

  void append_text(AstNode& parent, std::size_t s, std::size_t e) {
    if (s >= e) return;
    if (!parent.children.empty()) {
      AstNode& last = parent.children.back();
      if (last.kind == NodeKind::text && last.is_leaf() && last.span.end == s) {
        last.span.end = e;
        return;
      }
    }
    parent.children.push_back(leaf(NodeKind::text, s, e));
  }

  std::string peek_control_word(std::size_t start, std::size_t* end_out) const {
    std::size_t i = start + 1;
    if (i >= n() || !is_letter(at(i))) {
      *end_out = std::min(start + 2, n());
      return "";
    }
    std::size_t e = i;
    while (e < n() && is_letter(at(e))) ++e;
    *end_out = e;
    return std::string(b_.begin() + long(i), b_.begin() + long(e));
  }

  std::size_t skip_spaces(std::size_t i) const {
    while (i < n() && (at(i) == ' ' || at(i) == '\t')) ++i;
    return i;
  }

  bool read_braced_name(std::size_t i, std::string* name, std::size_t* end) const {
    i = skip_spaces(i);
    if (i >= n() || at(i) != '{') return false;
    std::size_t j = i + 1;
    std::string out;
    while (j < n() && is_env_name_char(at(j))) out += char(at(j++));
    if (j >= n() || at(j) != '}' || out.empty()) return false;
    *name = out;
    *end = j + 1;
    return true;
  }

  // Balanced-group scan used as a pre-check; the authoritative extent comes
  // from the recursive parse.
  std::size_t scan_group(std::size_t i) const {
    if (i >= n() || at(i) != '{') return AstNode::npos;
    int depth = 0;
    std::size_t j = i;
    while (j < n()) {
      std::uint8_t c = at(j);
      if (c == '\\') {
        j += 2;
        continue;
      }
      if (c == '%') {
        while (j < n() && at(j) != '\n') ++j;
        continue;
      }
      if (c == '{') ++depth;
      if (c == '}') {
        if (--depth == 0) return j + 1;
      }
      ++j;
    }
    return AstNode::npos;
  }

  std::size_t scan_bracket(std::size_t i) const {
    if (i >= n() || at(i) != '[') return AstNode::npos;
    std::size_t j = i + 1;
    while (j < n()) {
      std::uint8_t c = at(j);
      if (c == '\\') {
        j += 2;
        continue;
      }
      if (c == ']') return j + 1;
      ++j;
    }
    return AstNode::npos;
  }

  bool is_conditional_word(const std::string& w) const {
    if (primitive_conditionals().count(w)) return true;
    return w.size() > 2 && w.compare(0, 2, "if") == 0 && flags_.count(w.substr(2)) > 0;
  }

  // ---- main loops ----

  void parse_nodes(AstNode& parent, Stop stop, const std::string& env_name) {
    int group_depth = 0;
    std::size_t text_start = pos_;
    auto flush_text = [&](std::size_t upto) { append_text(parent, text_start, upto); };

    while (!eof()) {
      std::uint8_t c = at(pos_);
      if (c == '%') {
        flush_text(pos_);
        std::size_t s = pos_;
        while (pos_ < n() && at(pos_) != '\n') ++pos_;
        parent.children.push_back(leaf(NodeKind::line_comment, s, pos_));
        text_start = pos_;
        continue;
      }
      if (c == '{' || c == '}') {
        if (stop == Stop::group_close) {
          if (c == '{') {
            ++group_depth;
          } else if (group_depth == 0) {
            flush_text(pos_);
            return;  // caller consumes '}'
          } else {
            --group_depth;
          }
        }
        ++pos_;
        continue;
      }
      if (c != '\\') {
        ++pos_;
        continue;
      }

      std::size_t word_end = 0;
      std::string word = peek_control_word(pos_, &word_end);
      if (word.empty()) {
        flush_text(pos_);
        std::size_t s = pos_;
        pos_ = word_end;
        parent.children.push_back(
            leaf(NodeKind::escaped_char, s, pos_,
                 std::string(b_.begin() + long(s) + 1, b_.begin() + long(pos_))));
        text_start = pos_;
        continue;
      }

      if (stop == Stop::env_end && word == "end") {
        std::string name;
        std::size_t e = 0;
        if (read_braced_name(word_end, &name, &e) && name == env_name) {
          flush_text(pos_);
          return;  // caller consumes \end{name}
        }
      }
      if (stop == Stop::cond_fi && (word == "fi" || word == "else" || word == "or")) {
        flush_text(pos_);
        if (word == "fi") return;  // caller consumes
        std::size_t s = pos_;
        if (word == "else" && parent.else_pos == AstNode::npos) parent.else_pos = s;
        pos_ = word_end;
        parent.children.push_back(leaf(NodeKind::command_use, s, pos_, word));
        text_start = pos_;
        continue;
      }

      flush_text(pos_);
      AstNode node = parse_control(word, word_end);
      text_start = pos_;
      parent.children.push_back(std::move(node));
    }
    flush_text(pos_);
    if (stop != Stop::eof) unterminated_ = true;
  }

  AstNode parse_control(const std::string& word, std::size_t word_end) {
    std::size_t start = pos_;

    if (word == "begin") return parse_environment(start, word_end);

    if (word == "end") {
      std::string name;
      std::size_t e = word_end;
      if (read_braced_name(word_end, &name, &e)) pos_ = e;
      else pos_ = word_end;
      record_error(start, pos_);
      return leaf(NodeKind::error, start, pos_, "stray-end");
    }

    if (word == "verb") {
      std::size_t i = word_end;
      if (i < n() && at(i) == '*') ++i;
      if (i < n()) {
        std::uint8_t delim = at(i);
        std::size_t j = i + 1;
        while (j < n() && at(j) != delim && at(j) != '\n') ++j;
        if (j < n() && at(j) == delim) {
          pos_ = j + 1;
          return leaf(NodeKind::command_use, start, pos_, "verb");
        }
        pos_ = j;
        record_error(start, pos_);
        return leaf(NodeKind::error, start, pos_, "verb");
      }
      pos_ = word_end;
      return leaf(NodeKind::command_use, start, pos_, word);
    }

    if (word == "newif") {
      std::size_t i = skip_spaces(word_end);
      std::size_t flag_end = 0;
      std::string flag_word =
          (i < n() && at(i) == '\\') ? peek_control_word(i, &flag_end) : "";
      if (flag_word.size() > 2 && flag_word.compare(0, 2, "if") == 0) {
        std::string flag = flag_word.substr(2);
        flags_.insert(flag);
        pos_ = flag_end;
        return leaf(NodeKind::command_definition, start, pos_, flag);
      }
      pos_ = word_end;
      return leaf(NodeKind::command_use, start, pos_, word);
    }

    if (is_conditional_word(word)) return parse_conditional(word, start, word_end);

    if (word == "fi" || word == "else" || word == "or") {
      pos_ = word_end;
      record_error(start, pos_);
      return leaf(NodeKind::error, start, pos_, "stray-" + word);
    }

    if (word == "newcommand" || word == "renewcommand" || word == "providecommand" ||
        word == "DeclareRobustCommand") {
      return parse_newcommand(word, start, word_end);
    }
    if (word == "def" || word == "gdef" || word == "edef" || word == "xdef") {
      return parse_def(start, word_end);
    }

    // \newif flag assignments (\footrue / \foofalse).
    for (const char* suffix : {"true", "false"}) {
      std::size_t sl = std::strlen(suffix);
      if (word.size() > sl && ends_with(word, suffix)) {
        std::string flag = word.substr(0, word.size() - sl);
        if (flags_.count(flag)) {
          FlagAssign fa;
          fa.flag = flag;
          fa.value = (sl == 4);  // "true"
          fa.span = make_span(start, word_end);
          fa.dynamic_context = cond_depth_ > 0 || def_depth_ > 0;
          fa.in_preamble = !in_document_;
          flag_assigns_.push_back(fa);
          pos_ = word_end;
          return leaf(NodeKind::command_use, start, pos_, word);
        }
      }
    }

    if (word == "documentclass" || word == "documentstyle") saw_document_class_ = true;

    auto known = known_arg_commands().find(word);
    if (known != known_arg_commands().end())
      return parse_known_command(word, known->second, start, word_end);

    auto mi = macros_.find(word);
    if (mi != macros_.end() && mi->second.arg_count > 0 && !mi->second.complex)
      return parse_macro_use(word, mi->second, start, word_end);

    pos_ = word_end;
    return leaf(NodeKind::command_use, start, pos_, word);
  }

  AstNode parse_environment(std::size_t start, std::size_t word_end) {
    std::string name;
    std::size_t header_end = 0;
    if (!read_braced_name(word_end, &name, &header_end)) {
      pos_ = word_end;
      return leaf(NodeKind::command_use, start, pos_, "begin");
    }

    if (verbatim_.count(name) || comment_envs_.count(name))
      return parse_literal_environment(name, start, header_end);

    if (depth_ >= opts_.max_depth) {
      pos_ = header_end;
      record_error(start, pos_);
      return leaf(NodeKind::error, start, pos_, name);
    }

    AstNode node;
    node.kind = NodeKind::environment;
    node.name = name;
    node.children.push_back(leaf(NodeKind::text, start, header_end));
    pos_ = header_end;

    bool was_in_document = in_document_;
    if (name == "document") in_document_ = true;
    ++depth_;
    unterminated_ = false;
    parse_nodes(node, Stop::env_end, name);
    bool bad = unterminated_;
    unterminated_ = false;
    --depth_;
    in_document_ = was_in_document;

    if (!bad) {
      std::size_t end_start = pos_;
      std::size_t we = 0;
      peek_control_word(pos_, &we);
      std::string ename;
      std::size_t e = we;
      if (!read_braced_name(we, &ename, &e)) e = we;
      pos_ = e;
      node.children.push_back(leaf(NodeKind::text, end_start, pos_));
      node.span = make_span(start, pos_);
      if (name == "document") end_document_pos_ = pos_;
      return node;
    }
    node.kind = NodeKind::error;
    node.span = make_span(start, pos_);
    record_error(start, pos_);
    return node;
  }

  AstNode parse_literal_environment(const std::string& name, std::size_t start,
                                    std::size_t header_end) {
    std::string closer = "\\end{" + name + "}";
    std::string_view hay(reinterpret_cast<const char*>(b_.data()), n());
    std::size_t found = hay.find(closer, header_end);

    AstNode node;
    node.name = name;
    node.children.push_back(leaf(NodeKind::text, start, header_end));
    if (found == std::string_view::npos) {
      if (header_end < n())
        node.children.push_back(leaf(NodeKind::text, header_end, n()));
      pos_ = n();
      node.kind = NodeKind::error;
      node.span = make_span(start, pos_);
      record_error(start, pos_);
      return node;
    }
    if (found > header_end)
      node.children.push_back(leaf(NodeKind::text, header_end, found));
    pos_ = found + closer.size();
    node.children.push_back(leaf(NodeKind::text, found, pos_));
    node.kind = NodeKind::environment;
    node.span = make_span(start, pos_);
    return node;
  }

  AstNode parse_conditional(const std::string& word, std::size_t start,
                            std::size_t word_end) {
    if (depth_ >= opts_.max_depth) {
      pos_ = word_end;
      record_error(start, pos_);
      return leaf(NodeKind::error, start, pos_, word);
    }
    AstNode node;
    node.kind = NodeKind::conditional;
    node.name = word;
    node.children.push_back(leaf(NodeKind::command_use, start, word_end, word));
    pos_ = word_end;

    ++depth_;
    ++cond_depth_;
    unterminated_ = false;
    parse_nodes(node, Stop::cond_fi, "");
    bool bad = unterminated_;
    unterminated_ = false;
    --cond_depth_;
    --depth_;

    if (!bad) {
      std::size_t fi_start = pos_;
      std::size_t we = 0;
      peek_control_word(pos_, &we);
      node.fi_pos = fi_start;
      pos_ = we;
      node.children.push_back(leaf(NodeKind::command_use, fi_start, pos_, "fi"));
      node.span = make_span(start, pos_);
      return node;
    }
    node.kind = NodeKind::error;
    node.span = make_span(start, pos_);
    record_error(start, pos_);
    return node;
  }

  static void scan_body_params(const Bytes& b, std::size_t s, std::size_t e,
                               MacroInfo* info) {
    for (std::size_t i = s; i + 1 < e; ++i) {
      if (b[i] != '#') continue;
      if (b[i + 1] == '#') {
        info->complex = true;
        ++i;
        continue;
      }
      if (b[i + 1] >= '1' && b[i + 1] <= '9') {
        int idx = b[i + 1] - '1';
        if (idx < int(info->used.size())) info->used[std::size_t(idx)] = true;
      }
    }
  }

  void register_macro(const std::string& name, const MacroInfo& info) {
    auto it = macros_.find(name);
    if (it == macros_.end()) {
      macros_[name] = info;
      return;
    }
    MacroInfo& prev = it->second;
    if (prev.arg_count != info.arg_count || prev.has_optional != info.has_optional) {
      prev.complex = true;
      return;
    }
    prev.complex = prev.complex || info.complex;
    for (std::size_t i = 0; i < prev.used.size() && i < info.used.size(); ++i)
      prev.used[i] = prev.used[i] || info.used[i];
  }

  // Parses the body group at `body_open`, registers the macro from the body
  // extent the parser actually consumed, and returns the definition node.
  AstNode finish_definition(const std::string& target, MacroInfo info,
                            std::size_t start, std::size_t body_open) {
    AstNode node;
    node.kind = NodeKind::command_definition;
    node.name = target;
    node.children.push_back(leaf(NodeKind::text, start, body_open + 1));
    pos_ = body_open + 1;
    ++def_depth_;
    ++depth_;
    unterminated_ = false;
    parse_nodes(node, Stop::group_close, "");
    bool bad = unterminated_;
    unterminated_ = false;
    --depth_;
    --def_depth_;

    std::size_t body_end = pos_;
    if (!bad && pos_ < n() && at(pos_) == '}') {
      ++pos_;
      node.children.push_back(leaf(NodeKind::text, pos_ - 1, pos_));
    } else {
      node.kind = NodeKind::error;
      record_error(start, pos_);
      info.complex = true;
    }
    info.used.assign(std::size_t(info.arg_count), false);
    scan_body_params(b_, body_open + 1, body_end, &info);
    register_macro(target, info);
    node.span = make_span(start, pos_);
    return node;
  }

  AstNode parse_newcommand(const std::string& word, std::size_t start,
                           std::size_t word_end) {
    std::size_t i = word_end;
    if (i < n() && at(i) == '*') ++i;
    i = skip_spaces(i);

    std::string target;
    if (i < n() && at(i) == '{') {
      std::size_t close = scan_group(i);
      if (close == AstNode::npos) return fallback_use(word, start, word_end);
      std::size_t j = skip_spaces(i + 1);
      std::size_t we = 0;
      if (j < n() && at(j) == '\\') target = peek_control_word(j, &we);
      if (target.empty() || skip_spaces(we) != close - 1)
        return fallback_use(word, start, word_end);
      i = close;
    } else if (i < n() && at(i) == '\\') {
      std::size_t we = 0;
      target = peek_control_word(i, &we);
      if (target.empty()) return fallback_use(word, start, word_end);
      i = we;
    } else {
      return fallback_use(word, start, word_end);
    }

    i = skip_spaces(i);
    int argc = 0;
    bool has_optional = false;
    if (i < n() && at(i) == '[') {
      std::size_t close = scan_bracket(i);
      if (close == AstNode::npos) return fallback_use(word, start, word_end);
      std::string count = trim(std::string(b_.begin() + long(i) + 1,
                                           b_.begin() + long(close) - 1));
      if (count.size() == 1 && count[0] >= '0' && count[0] <= '9')
        argc = count[0] - '0';
      else
        return fallback_use(word, start, word_end);
      i = skip_spaces(close);
      if (i < n() && at(i) == '[') {
        std::size_t dclose = scan_bracket(i);
        if (dclose == AstNode::npos) return fallback_use(word, start, word_end);
        has_optional = true;
        i = skip_spaces(dclose);
      }
    }

    if (i >= n() || at(i) != '{') return fallback_use(word, start, word_end);

    MacroInfo info;
    info.arg_count = argc;
    info.has_optional = has_optional;
    return finish_definition(target, info, start, i);
  }

  AstNode parse_def(std::size_t start, std::size_t word_end) {
    std::size_t i = skip_spaces(word_end);
    if (i >= n() || at(i) != '\\') return fallback_use("def", start, word_end);
    std::size_t we = 0;
    std::string target = peek_control_word(i, &we);
    if (target.empty()) return fallback_use("def", start, word_end);
    i = we;

    int argc = 0;
    bool sequential = true;
    std::size_t scan = i;
    while (scan < n() && at(scan) != '{') {
      std::uint8_t c = at(scan);
      if (c == '#') {
        if (scan + 1 < n() && at(scan + 1) >= '1' && at(scan + 1) <= '9') {
          int idx = at(scan + 1) - '0';
          if (idx != argc + 1) sequential = false;
          argc = std::max(argc, idx);
          scan += 2;
          continue;
        }
        sequential = false;
        ++scan;
        continue;
      }
      if (c == ' ' || c == '\t') {
        ++scan;
        continue;
      }
      sequential = false;  // delimited parameter text
      ++scan;
    }
    if (scan >= n()) return fallback_use("def", start, word_end);

    MacroInfo info;
    info.arg_count = argc;
    info.complex = !sequential;
    return finish_definition(target, info, start, scan);
  }

  AstNode fallback_use(const std::string& word, std::size_t start,
                       std::size_t word_end) {
    pos_ = word_end;
    return leaf(NodeKind::command_use, start, pos_, word);
  }

  AstNode parse_known_command(const std::string& word, const KnownArgs& ka,
                              std::size_t start, std::size_t word_end) {
    std::size_t i = word_end;
    AstNode node;
    node.kind = NodeKind::command_use;
    node.name = word;

    if (ka.optional) {
      std::size_t j = skip_spaces(i);
      if (j < n() && at(j) == '[') {
        std::size_t close = scan_bracket(j);
        if (close != AstNode::npos) {
          node.has_opt_arg = true;
          node.opt_arg = make_span(j + 1, close - 1);
          i = close;
        }
      }
    }
    for (int g = 0; g < ka.groups; ++g) {
      std::size_t j = skip_spaces(i);
      if (j < n() && at(j) == '{') {
        std::size_t close = scan_group(j);
        if (close == AstNode::npos) break;
        node.args.push_back(make_span(j + 1, close - 1));
        i = close;
        continue;
      }
      if (g == 0 && ka.unbraced_ok && j < n()) {
        std::size_t e = j;
        while (e < n() && !std::isspace(at(e)) && at(e) != '\\' && at(e) != '%' &&
               at(e) != '{' && at(e) != '}')
          ++e;
        if (e > j) {
          node.args.push_back(make_span(j, e));
          i = e;
        }
      }
      break;
    }
    pos_ = i;
    node.span = make_span(start, pos_);

    if (word == "excludecomment" && !node.args.empty())
      comment_envs_.insert(arg_text(node.args[0]));
    else if (word == "includecomment" && !node.args.empty())
      comment_envs_.erase(arg_text(node.args[0]));
    return node;
  }

  std::string arg_text(const Span& s) const {
    return trim(std::string(b_.begin() + long(s.start), b_.begin() + long(s.end)));
  }

  AstNode parse_macro_use(const std::string& word, const MacroInfo& info,
                          std::size_t start, std::size_t word_end) {
    if (depth_ >= opts_.max_depth) return fallback_use(word, start, word_end);
    AstNode node;
    node.kind = NodeKind::command_use;
    node.name = word;
    node.children.push_back(leaf(NodeKind::command_use, start, word_end, word));
    pos_ = word_end;

    int total = info.arg_count;
    int consumed = 0;
    if (info.has_optional && total > 0) {
      std::size_t j = skip_spaces(pos_);
      if (j < n() && at(j) == '[') {
        std::size_t close = scan_bracket(j);
        if (close != AstNode::npos) {
          append_text(node, pos_, close);
          node.has_opt_arg = true;
          node.opt_arg = make_span(j + 1, close - 1);
          node.args.push_back(node.opt_arg);
          pos_ = close;
        }
      }
      if (!node.has_opt_arg) node.args.push_back(make_span(pos_, pos_));  // defaulted
      consumed = 1;
    }

    for (; consumed < total; ++consumed) {
      // Filler between arguments: whitespace and comments.
      while (true) {
        std::size_t f = pos_;
        while (f < n() &&
               (at(f) == ' ' || at(f) == '\t' || at(f) == '\n' || at(f) == '\r'))
          ++f;
        if (f < n() && at(f) == '%') {
          append_text(node, pos_, f);
          std::size_t s = f;
          while (f < n() && at(f) != '\n') ++f;
          node.children.push_back(leaf(NodeKind::line_comment, s, f));
          pos_ = f;
          continue;
        }
        append_text(node, pos_, f);
        pos_ = f;
        break;
      }
      std::size_t j = pos_;
      if (j >= n()) break;
      if (at(j) == '{') {
        if (scan_group(j) == AstNode::npos) break;
        append_text(node, pos_, j + 1);
        pos_ = j + 1;
        ++depth_;
        unterminated_ = false;
        parse_nodes(node, Stop::group_close, "");
        bool bad = unterminated_;
        unterminated_ = false;
        --depth_;
        if (bad || pos_ >= n() || at(pos_) != '}') break;
        node.args.push_back(make_span(j + 1, pos_));
        ++pos_;
        append_text(node, pos_ - 1, pos_);
        continue;
      }
      if (at(j) == '\\') {
        std::size_t we = 0;
        std::string w = peek_control_word(j, &we);
        append_text(node, pos_, j);
        node.args.push_back(make_span(j, we));
        pos_ = we;
        node.children.push_back(leaf(NodeKind::command_use, j, we, w));
        continue;
      }
      append_text(node, pos_, j + 1);
      node.args.push_back(make_span(j, j + 1));
      pos_ = j + 1;
    }
    node.span = make_span(start, pos_);
    return node;
  }
};

}  // namespace

SourceFile SourceFile::from_bytes(std::string path, Bytes bytes) {
  SourceFile f;
  f.path = std::move(path);
  bool binary = std::find(bytes.begin(), bytes.end(), std::uint8_t(0)) != bytes.end();
  f.bytes = std::move(bytes);
  if (binary) {
    f.parse_status = ParseStatus::binary;
    f.encoding = "binary";
    return f;
  }
  f.encoding = valid_utf8(f.bytes) ? "utf-8" : "latin-1";
  f.parse_status = ParseStatus::ok;
  return f;
}

ParseResult parse(const SourceFile& file, const ParseOptions& opts) {
  if (file.is_binary()) throw Error(Errc::binary_input, file.path + ": binary input");
  Parser p(file.bytes, opts);
  return p.run();
}

Bytes serialize(const Bytes& original, std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.span.start < b.span.start; });
  for (std::size_t i = 0; i < edits.size(); ++i) {
    const Span& s = edits[i].span;
    if (s.start > s.end || s.end > original.size())
      throw Error(Errc::overlapping_edits, "edit out of bounds");
    if (i > 0 && edits[i - 1].span.end > s.start)
      throw Error(Errc::overlapping_edits, "edits overlap");
  }
  Bytes out = original;
  for (auto it = edits.rbegin(); it != edits.rend(); ++it) {
    out.erase(out.begin() + long(it->span.start), out.begin() + long(it->span.end));
    out.insert(out.begin() + long(it->span.start), it->replacement.begin(),
               it->replacement.end());
  }
  return out;
}

Bytes serialize(const SourceFile& file, std::vector<Edit> edits) {
  return serialize(file.bytes, std::move(edits));
}

void collect_leaves(const AstNode& node, std::vector<const AstNode*>& out) {
  if (node.is_leaf()) {
    if (!node.span.empty() || node.kind != NodeKind::text) out.push_back(&node);
    return;
  }
  for (const auto& c : node.children) collect_leaves(c, out);
}

}  // namespace texsan
