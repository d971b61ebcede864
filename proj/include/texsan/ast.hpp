#ifndef TEXSAN_AST_HPP
#define TEXSAN_AST_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "texsan/util.hpp"

namespace texsan {

/// Byte range [start, end) plus the 1-based line of start.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::uint32_t line = 1;

  std::size_t length() const { return end - start; }
  bool empty() const { return end == start; }
  bool contains(std::size_t pos) const { return pos >= start && pos < end; }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  friend bool operator==(const Span& a, const Span& b) {
    return a.start == b.start && a.end == b.end;
  }
};

enum class NodeKind {
  text,
  line_comment,
  environment,
  conditional,
  command_definition,
  command_use,
  escaped_char,
  error,
};

const char* node_kind_name(NodeKind k);

struct AstNode {
  NodeKind kind = NodeKind::text;
  Span span;
  std::string name;  // environment or command name, where applicable
  std::vector<AstNode> children;

  // command_use: argument content spans (inside the braces / brackets).
  std::vector<Span> args;
  bool has_opt_arg = false;
  Span opt_arg;

  // conditional: offset of the `\else` token, or npos when absent.
  static constexpr std::size_t npos = std::size_t(-1);
  std::size_t else_pos = npos;
  std::size_t fi_pos = npos;  // offset of the matching `\fi`, npos if unterminated

  bool is_leaf() const { return children.empty(); }
};

enum class ParseStatus { ok, partial, binary };

struct SourceFile {
  std::string path;
  Bytes bytes;
  std::string encoding;  // "utf-8" or "latin-1"
  ParseStatus parse_status = ParseStatus::ok;

  /// Detects encoding and binary content. Never throws on malformed text.
  static SourceFile from_bytes(std::string path, Bytes bytes);
  bool is_binary() const { return parse_status == ParseStatus::binary; }
};

/// What the parser learned about a user-defined command.
struct MacroInfo {
  int arg_count = 0;
  bool has_optional = false;      // first argument is an optional [..]
  std::vector<bool> used;         // per argument: referenced in any body
  bool complex = false;           // delimited params, ## tricks, conflicting defs
  bool cleanable(std::size_t arg_index) const {
    return !complex && arg_index < used.size() && !used[arg_index];
  }
};

using MacroTable = std::map<std::string, MacroInfo>;

/// A `\newif` flag assignment (`\footrue` / `\foofalse`).
struct FlagAssign {
  std::string flag;
  bool value = false;
  Span span;
  bool dynamic_context = false;  // inside a conditional or a macro body
  bool in_preamble = false;      // before \begin{document}
};

struct ParseOptions {
  std::vector<std::string> verbatim_envs;  // empty = default list
  std::set<std::string> comment_envs;      // extra comment-like environments
  MacroTable seed_macros;
  std::set<std::string> seed_flags;        // \newif flags known from other files
  int max_depth = 128;
};

std::vector<std::string> default_verbatim_envs();

struct ParseResult {
  AstNode root;
  ParseStatus status = ParseStatus::ok;
  std::vector<Span> errors;
  MacroTable macros;                       // seed plus definitions found here
  std::set<std::string> newif_flags;       // all flags known after this file
  std::vector<FlagAssign> flag_assigns;
  std::set<std::string> comment_envs;      // includes \excludecomment registrations
  bool saw_document_class = false;
  std::size_t end_document_pos = AstNode::npos;  // offset just past \end{document}
};

/// Parse TeX text into a structural tree. Malformed input degrades to error
/// nodes; the tree always covers the whole file.
ParseResult parse(const SourceFile& file, const ParseOptions& opts = {});

/// One edit: replace the bytes of `span` with `replacement`.
struct Edit {
  Span span;
  Bytes replacement;
};

/// Apply edits right-to-left. With an empty edit list the output is
/// byte-identical to the input. Throws OverlappingEdits.
Bytes serialize(const Bytes& original, std::vector<Edit> edits);
Bytes serialize(const SourceFile& file, std::vector<Edit> edits);

/// Test support: collect leaf nodes in document order.
void collect_leaves(const AstNode& node, std::vector<const AstNode*>& out);

}  // namespace texsan

#endif
