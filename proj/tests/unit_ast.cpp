#include <random>

#include "doctest.h"
#include "testsupport.hpp"
#include "texsan/ast.hpp"

using namespace texsan;
using testsupport::leaves_cover;
using testsupport::src;

namespace {

const AstNode* find_kind(const AstNode& node, NodeKind k) {
  if (node.kind == k) return &node;
  for (const auto& c : node.children)
    if (const auto* f = find_kind(c, k)) return f;
  return nullptr;
}

int count_kind(const AstNode& node, NodeKind k) {
  int n = node.kind == k ? 1 : 0;
  for (const auto& c : node.children) n += count_kind(c, k);
  return n;
}

}  // namespace

TEST_CASE("escaped percent is never a comment") {
  auto f = src("a \\% b % c\n");
  auto r = parse(f);
  CHECK(r.status == ParseStatus::ok);
  CHECK(leaves_cover(r.root, f.bytes.size()));

  const auto* esc = find_kind(r.root, NodeKind::escaped_char);
  REQUIRE(esc != nullptr);
  CHECK(esc->name == "%");
  CHECK(esc->span.start == 2);
  CHECK(esc->span.end == 4);

  const auto* com = find_kind(r.root, NodeKind::line_comment);
  REQUIRE(com != nullptr);
  CHECK(com->span.start == 7);
  CHECK(com->span.end == 10);  // "% c", newline excluded
  CHECK(count_kind(r.root, NodeKind::line_comment) == 1);
}

TEST_CASE("empty input parses to empty root") {
  auto f = src("");
  auto r = parse(f);
  CHECK(r.root.children.empty());
  CHECK(r.root.span.start == 0);
  CHECK(r.root.span.end == 0);
  CHECK(leaves_cover(r.root, 0));
}

TEST_CASE("verbatim interior contains no comment nodes") {
  auto f = src("\\begin{verbatim}% x\\end{verbatim}");
  auto r = parse(f);
  CHECK(r.status == ParseStatus::ok);
  const auto* env = find_kind(r.root, NodeKind::environment);
  REQUIRE(env != nullptr);
  CHECK(env->name == "verbatim");
  CHECK(count_kind(r.root, NodeKind::line_comment) == 0);
  CHECK(leaves_cover(r.root, f.bytes.size()));
}

TEST_CASE("verbatim family and comment env are opaque") {
  for (const char* envname : {"verbatim", "lstlisting", "minted", "comment"}) {
    std::string text = std::string("x\\begin{") + envname + "}\n% hidden\n\\end{" +
                       envname + "}y";
    auto f = src(text);
    auto r = parse(f);
    CHECK(count_kind(r.root, NodeKind::line_comment) == 0);
    CHECK(leaves_cover(r.root, f.bytes.size()));
  }
}

TEST_CASE("nested environments") {
  auto f = src("\\begin{itemize}\\begin{itemize}x\\end{itemize}\\end{itemize}");
  auto r = parse(f);
  CHECK(r.status == ParseStatus::ok);
  const auto* outer = find_kind(r.root, NodeKind::environment);
  REQUIRE(outer != nullptr);
  CHECK(count_kind(r.root, NodeKind::environment) == 2);
  CHECK(leaves_cover(r.root, f.bytes.size()));
}

TEST_CASE("unmatched begin closes at EOF as error node") {
  auto f = src("a\\begin{itemize}bcd");
  auto r = parse(f);
  CHECK(r.status == ParseStatus::partial);
  CHECK(find_kind(r.root, NodeKind::error) != nullptr);
  CHECK(!r.errors.empty());
  CHECK(leaves_cover(r.root, f.bytes.size()));
}

TEST_CASE("conditionals with else") {
  auto f = src("\\iffalse a\\else b\\fi rest");
  auto r = parse(f);
  const auto* cond = find_kind(r.root, NodeKind::conditional);
  REQUIRE(cond != nullptr);
  CHECK(cond->name == "iffalse");
  CHECK(cond->else_pos == 10);
  CHECK(cond->fi_pos == 17);
  CHECK(leaves_cover(r.root, f.bytes.size()));
}

TEST_CASE("newif registers a flag and assignments are tracked") {
  auto f = src("\\newif\\ifdraft\\drafttrue\\ifdraft x\\fi");
  auto r = parse(f);
  CHECK(r.newif_flags.count("draft") == 1);
  REQUIRE(r.flag_assigns.size() == 1);
  CHECK(r.flag_assigns[0].flag == "draft");
  CHECK(r.flag_assigns[0].value);
  CHECK(r.flag_assigns[0].in_preamble);
  const auto* cond = find_kind(r.root, NodeKind::conditional);
  REQUIRE(cond != nullptr);
  CHECK(cond->name == "ifdraft");
  CHECK(leaves_cover(r.root, f.bytes.size()));
}

TEST_CASE("newcommand records unused arguments") {
  auto f = src("\\newcommand{\\hide}[1]{}\\hide{secret}");
  auto r = parse(f);
  REQUIRE(r.macros.count("hide") == 1);
  const auto& mi = r.macros.at("hide");
  CHECK(mi.arg_count == 1);
  CHECK_FALSE(mi.complex);
  CHECK(mi.cleanable(0));

  const AstNode* use = nullptr;
  for (const auto& c : r.root.children)
    if (c.kind == NodeKind::command_use && c.name == "hide") use = &c;
  REQUIRE(use != nullptr);
  REQUIRE(use->args.size() == 1);
  std::string arg(f.bytes.begin() + long(use->args[0].start),
                  f.bytes.begin() + long(use->args[0].end));
  CHECK(arg == "secret");
  CHECK(leaves_cover(r.root, f.bytes.size()));
}

TEST_CASE("used argument is not cleanable") {
  auto f = src("\\newcommand{\\note}[2]{#1}\\note{keep}{drop}");
  auto r = parse(f);
  const auto& mi = r.macros.at("note");
  CHECK(mi.arg_count == 2);
  CHECK_FALSE(mi.cleanable(0));
  CHECK(mi.cleanable(1));
}

TEST_CASE("def with sequential params") {
  auto f = src("\\def\\pair#1#2{#2}\\pair{a}{b}");
  auto r = parse(f);
  REQUIRE(r.macros.count("pair") == 1);
  const auto& mi = r.macros.at("pair");
  CHECK(mi.arg_count == 2);
  CHECK_FALSE(mi.complex);
  CHECK(mi.cleanable(0));
  CHECK_FALSE(mi.cleanable(1));
  CHECK(leaves_cover(r.root, f.bytes.size()));
}

TEST_CASE("def with delimited params is complex") {
  auto f = src("\\def\\x#1,#2{#1#2}");
  auto r = parse(f);
  CHECK(r.macros.at("x").complex);
}

TEST_CASE("conflicting redefinition goes complex") {
  auto f = src("\\newcommand{\\x}[1]{}\\renewcommand{\\x}[2]{#1#2}");
  auto r = parse(f);
  CHECK(r.macros.at("x").complex);
}

TEST_CASE("excludecomment registers a comment environment") {
  auto f = src("\\excludecomment{hidden}\\begin{hidden}% z\\end{hidden}");
  auto r = parse(f);
  CHECK(r.comment_envs.count("hidden") == 1);
  CHECK(count_kind(r.root, NodeKind::line_comment) == 0);
  CHECK(leaves_cover(r.root, f.bytes.size()));
}

TEST_CASE("verb protects its delimiter content") {
  auto f = src("\\verb|% not a comment| % real\n");
  auto r = parse(f);
  CHECK(count_kind(r.root, NodeKind::line_comment) == 1);
  const auto* com = find_kind(r.root, NodeKind::line_comment);
  CHECK(com->span.start == 23);
}

TEST_CASE("document markers recorded") {
  auto f = src("pre\\documentclass{article}\\begin{document}hi\\end{document}post");
  auto r = parse(f);
  CHECK(r.saw_document_class);
  CHECK(r.end_document_pos == f.bytes.size() - 4);
}

TEST_CASE("serialize identity") {
  auto f = src("any % file\n\\begin{verbatim}x\\end{verbatim}");
  CHECK(serialize(f, {}) == f.bytes);
}

TEST_CASE("serialize single deletion") {
  Bytes b = to_bytes("abc");
  Bytes out = serialize(b, {Edit{Span{1, 2, 1}, {}}});
  CHECK(to_string(out) == "ac");
}

TEST_CASE("serialize replacement matches naive splice") {
  // "x % y\n" with (2,5) -> "%" computed against a naive string splice.
  std::string input = "x % y\n";
  std::string naive = input.substr(0, 2) + "%" + input.substr(5);
  Bytes out = serialize(to_bytes(input), {Edit{Span{2, 5, 1}, to_bytes("%")}});
  CHECK(to_string(out) == naive);
  CHECK(to_string(out) == "x %\n");
}

TEST_CASE("serialize rejects overlapping edits") {
  Bytes b = to_bytes("abcdef");
  std::vector<Edit> edits = {Edit{Span{0, 3, 1}, {}}, Edit{Span{2, 4, 1}, {}}};
  CHECK_THROWS_AS(serialize(b, edits), Error);
}

TEST_CASE("binary input is rejected") {
  Bytes b = {'a', 0, 'b'};
  auto f = SourceFile::from_bytes("bin.dat", b);
  CHECK(f.is_binary());
  CHECK_THROWS_AS(parse(f), Error);
}

TEST_CASE("encoding detection") {
  CHECK(src("plain ascii").encoding == "utf-8");
  CHECK(src("caf\xc3\xa9").encoding == "utf-8");
  CHECK(src("caf\xe9").encoding == "latin-1");
}

TEST_CASE("line numbers are 1-based") {
  auto f = src("a\nb % c\n");
  auto r = parse(f);
  const auto* com = find_kind(r.root, NodeKind::line_comment);
  REQUIRE(com != nullptr);
  CHECK(com->span.line == 2);
}

TEST_CASE("round-trip and coverage over fuzzed inputs") {
  std::mt19937 rng(1234);
  for (int i = 0; i < 2000; ++i) {
    std::string text = testsupport::fuzz_tex(rng);
    auto f = src(text);
    if (f.is_binary()) continue;
    auto r = parse(f);
    CHECK(serialize(f, {}) == f.bytes);
    REQUIRE_MESSAGE(leaves_cover(r.root, f.bytes.size()),
                    "coverage failed for: " << text);
  }
}
