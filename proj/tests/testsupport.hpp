#ifndef TEXSAN_TESTSUPPORT_HPP
#define TEXSAN_TESTSUPPORT_HPP

#include <random>
#include <string>
#include <vector>

#include "texsan/ast.hpp"
#include "texsan/util.hpp"

namespace testsupport {

inline texsan::fs::path corpus_dir() { return texsan::fs::path(TEXSAN_CORPUS_DIR); }
inline texsan::fs::path bin_dir() { return texsan::fs::path(TEXSAN_BIN_DIR); }

inline texsan::SourceFile src(std::string text, std::string path = "test.tex") {
  return texsan::SourceFile::from_bytes(std::move(path), texsan::to_bytes(text));
}

/// Checks that leaves partition the file: concatenating leaf spans in order
/// reconstructs every byte exactly once.
inline bool leaves_cover(const texsan::AstNode& root, std::size_t file_len) {
  std::vector<const texsan::AstNode*> leaves;
  texsan::collect_leaves(root, leaves);
  std::size_t cursor = 0;
  for (const auto* l : leaves) {
    if (l->span.start != cursor) return false;
    if (l->span.end < l->span.start) return false;
    cursor = l->span.end;
  }
  return cursor == file_len;
}

/// Random TeX-like text generator for fuzzing the parser.
inline std::string fuzz_tex(std::mt19937& rng, int max_len = 400) {
  static const std::vector<std::string> pieces = {
      "hello ",     "a\\%b",       "% note\n", "\\begin{verbatim}",
      "\\end{verbatim}", "\\begin{itemize}", "\\end{itemize}", "\\iffalse ",
      "\\fi ",      "\\else ",     "{",        "}",
      "\\newcommand{\\x}[1]{#1}",  "\\x{y}",   "\\def\\y{z}",
      "\\input{a}", "$x^2$",       "\n\n",     "\\\\",
      "\\verb|%|",  "\\begin{comment}", "\\end{comment}", "~",
      "\\if0 ",     "\\newif\\ifq ", "\\qtrue ", "\\documentclass{article}",
      "\\begin{document}", "\\end{document}", "text % trail\n", "\\unknowncmd ",
      "\\&",        "#1",          "[opt]",    "\\begin{",
      "\\end{x}",   "%\n",         "\\",       "\xc3\xa9",
  };
  std::uniform_int_distribution<int> len_dist(0, max_len / 8);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::string out;
  int parts = len_dist(rng);
  for (int i = 0; i < parts; ++i) out += pieces[pick(rng)];
  return out;
}

/// Writes a map of path -> content as a bundle directory.
inline void write_bundle(const texsan::fs::path& dir,
                         const std::vector<std::pair<std::string, std::string>>& files) {
  for (const auto& [path, content] : files)
    texsan::write_file(dir / path, content);
}

/// Copies a committed asset into a bundle.
inline void add_asset(const texsan::fs::path& dir, const std::string& asset,
                      const std::string& as) {
  texsan::write_file(dir / as, texsan::read_file(corpus_dir() / "assets" / asset));
}

inline std::string minimal_root(const std::string& body) {
  return "\\documentclass{article}\n\\begin{document}\n" + body +
         "\n\\end{document}\n";
}

}  // namespace testsupport

#endif
