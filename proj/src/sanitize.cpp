#include "texsan/sanitize.hpp"

#include <algorithm>
#include <functional>

namespace texsan {

const char* mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::line_comment: return "line_comment";
    case Mechanism::comment_environment: return "comment_environment";
    case Mechanism::outside_document: return "outside_document";
    case Mechanism::skipped_if_branch: return "skipped_if_branch";
    case Mechanism::discarded_command_argument: return "discarded_command_argument";
    case Mechanism::special_environment_text: return "special_environment_text";
  }
  return "?";
}

namespace {

bool is_blank_range(const Bytes& b, std::size_t s, std::size_t e) {
  for (std::size_t i = s; i < e; ++i)
    if (b[i] != ' ' && b[i] != '\t' && b[i] != '\r') return false;
  return true;
}

std::size_t line_start_of(const Bytes& b, std::size_t pos) {
  std::size_t i = pos;
  while (i > 0 && b[i - 1] != '\n') --i;
  return i;
}

std::size_t line_end_of(const Bytes& b, std::size_t pos) {  // excludes newline
  std::size_t i = pos;
  while (i < b.size() && b[i] != '\n') ++i;
  return i;
}

/// Extends a construct span to whole lines (including the final newline)
/// when both the leading and trailing residues of its lines are blank.
Span line_extended(const Bytes& b, const Span& s) {
  std::size_t ls = line_start_of(b, s.start);
  std::size_t le = line_end_of(b, s.end > 0 ? s.end - 1 : s.end);
  if (is_blank_range(b, ls, s.start) && is_blank_range(b, s.end, le)) {
    if (le < b.size()) ++le;  // swallow the newline
    return Span{ls, le, s.line};
  }
  return s;
}

bool tex_like_path(const std::string& path) {
  auto lower = to_lower(path);
  for (const char* ext : {".tex", ".ltx", ".latex", ".sty", ".cls", ".bbl", ".clo"})
    if (ends_with(lower, ext)) return true;
  return false;
}

struct Walker {
  const SourceFile& file;
  const ParseResult& parsed;
  const SanitizeContext& ctx;
  bool is_root;
  std::size_t outside_from;  // concept B region start, npos if none
  std::vector<IrrelevantSpan> out;

  const Bytes& bytes() const { return file.bytes; }

  bool in_error_region(const Span& s) const {
    for (const auto& e : parsed.errors)
      if (s.overlaps(e)) return true;
    return false;
  }

  bool unsafe_subtree(const AstNode& node) const {
    if (node.kind == NodeKind::error) return true;
    if (node.kind == NodeKind::environment &&
        (ctx.comment_envs.count(node.name) ||
         std::find(ctx.verbatim_envs.begin(), ctx.verbatim_envs.end(), node.name) !=
             ctx.verbatim_envs.end()))
      return true;
    if (node.kind == NodeKind::command_use && node.name == "verb") return true;
    for (const auto& c : node.children)
      if (unsafe_subtree(c)) return true;
    return false;
  }

  void add(Mechanism m, Span s, Bytes replacement = {}) {
    if (s.empty() && replacement.empty()) return;
    if (in_error_region(s)) return;
    IrrelevantSpan sp;
    sp.file = file.path;
    sp.span = s;
    sp.mechanism = m;
    sp.replacement = std::move(replacement);
    out.push_back(std::move(sp));
  }

  // Static truth value of a conditional, or nullopt when dynamic.
  std::optional<bool> eval_conditional(const AstNode& node) const {
    if (node.name == "iffalse") return false;
    if (node.name == "iftrue") return true;
    if (node.name.size() > 2 && node.name.compare(0, 2, "if") == 0) {
      auto it = ctx.static_flags.find(node.name.substr(2));
      if (it != ctx.static_flags.end()) return it->second;
    }
    if (node.name == "if") return eval_char_if(node);
    return std::nullopt;
  }

  // \if c1 c2 with both comparands plain characters in the source.
  std::optional<bool> eval_char_if(const AstNode& node) const {
    const Bytes& b = bytes();
    if (node.children.empty()) return std::nullopt;
    std::size_t i = node.children[0].span.end;  // just past "\if"
    // The tokenizer eats spaces after a control word; one line break is
    // swallowed in that state as well.
    auto skip_blanks = [&](bool allow_newline) {
      while (i < b.size() && (b[i] == ' ' || b[i] == '\t')) ++i;
      if (allow_newline && i < b.size() && b[i] == '\n') {
        ++i;
        while (i < b.size() && (b[i] == ' ' || b[i] == '\t')) ++i;
        if (i < b.size() && b[i] == '\n') return false;  // \par: dynamic
      }
      return true;
    };
    if (!skip_blanks(true)) return std::nullopt;
    if (i >= b.size()) return std::nullopt;
    std::uint8_t c1 = b[i];
    if (c1 == '\\' || c1 == '%' || c1 == '\n') return std::nullopt;
    ++i;
    if (i >= b.size()) return std::nullopt;
    int c2;
    if (b[i] == ' ' || b[i] == '\t' || b[i] == '\n') {
      c2 = ' ';
    } else if (b[i] == '\\' || b[i] == '%') {
      return std::nullopt;
    } else {
      c2 = b[i];
    }
    return int(c1) == c2;
  }

  void walk(const AstNode& node) {
    if (outside_from != AstNode::npos && node.span.start >= outside_from)
      return;  // covered by the concept-B span

    switch (node.kind) {
      case NodeKind::line_comment: {
        auto edit = edit_for_line_comment(bytes(), node.span);
        if (edit) add(Mechanism::line_comment, edit->span, edit->replacement);
        return;
      }
      case NodeKind::environment: {
        if (ctx.comment_envs.count(node.name)) {
          // comment-package semantics: the whole construct vanishes through
          // the end of the closing line.
          std::size_t le = line_end_of(bytes(), node.span.end > 0 ? node.span.end - 1
                                                                  : node.span.end);
          if (le < bytes().size()) ++le;
          add(Mechanism::comment_environment,
              Span{node.span.start, le, node.span.line});
          return;
        }
        bool is_verbatim =
            std::find(ctx.verbatim_envs.begin(), ctx.verbatim_envs.end(), node.name) !=
            ctx.verbatim_envs.end();
        if (is_verbatim) return;  // opaque
        for (const auto& c : node.children) walk(c);
        return;
      }
      case NodeKind::conditional: {
        auto value = eval_conditional(node);
        bool safe = node.fi_pos != AstNode::npos && !unsafe_subtree(node) &&
                    !in_error_region(node.span);
        if (value.has_value() && safe) {
          if (!*value) {
            if (node.else_pos == AstNode::npos) {
              add(Mechanism::skipped_if_branch, line_extended(bytes(), node.span));
              return;
            }
            // False branch before \else goes; \else and \fi tokens go too.
            std::size_t else_end = node.else_pos + 5;  // "\else"
            add(Mechanism::skipped_if_branch,
                Span{node.span.start, else_end, node.span.line});
            add(Mechanism::skipped_if_branch, Span{node.fi_pos, node.span.end, 0});
            for (const auto& c : node.children)
              if (c.span.start >= else_end && c.span.end <= node.fi_pos) walk(c);
            return;
          }
          if (node.else_pos != AstNode::npos) {
            // Taken branch stays; the dead \else...\fi tail goes, keeping \fi.
            add(Mechanism::skipped_if_branch,
                Span{node.else_pos, node.fi_pos, 0});
            for (const auto& c : node.children)
              if (c.span.end <= node.else_pos) walk(c);
            return;
          }
        }
        for (const auto& c : node.children) walk(c);
        return;
      }
      case NodeKind::command_use: {
        std::vector<Span> removed_args;
        auto mi = ctx.macros.find(node.name);
        if (mi != ctx.macros.end() && !mi->second.complex &&
            int(node.args.size()) == mi->second.arg_count) {
          for (std::size_t i = 0; i < node.args.size(); ++i) {
            if (mi->second.cleanable(i) && !node.args[i].empty() &&
                !in_error_region(node.args[i])) {
              add(Mechanism::discarded_command_argument, node.args[i]);
              removed_args.push_back(node.args[i]);
            }
          }
        }
        for (const auto& c : node.children) {
          bool inside_removed = false;
          for (const auto& r : removed_args)
            if (c.span.start >= r.start && c.span.end <= r.end) inside_removed = true;
          if (!inside_removed) walk(c);
        }
        return;
      }
      case NodeKind::command_definition:
        for (const auto& c : node.children) walk(c);
        return;
      case NodeKind::error:
        return;  // fail closed
      case NodeKind::text:
      case NodeKind::escaped_char:
        for (const auto& c : node.children) walk(c);
        return;
    }
  }
};

}  // namespace

std::optional<Edit> edit_for_line_comment(const Bytes& bytes, const Span& comment) {
  std::size_t ls = line_start_of(bytes, comment.start);
  bool whole_line = is_blank_range(bytes, ls, comment.start);
  bool has_text = comment.length() > 1;  // more than the bare '%'

  if (whole_line) {
    // Keep engine-format lines ("%&...") on line 1.
    if (ls == 0 && comment.length() >= 2 && bytes[comment.start + 1] == '&')
      return std::nullopt;
    std::size_t le = comment.end;
    if (le < bytes.size() && bytes[le] == '\n') ++le;
    return Edit{Span{ls, le, comment.line}, {}};
  }
  if (!has_text) return std::nullopt;  // bare trailing '%': newline glue
  return Edit{comment, to_bytes("%")};
}

SanitizeContext build_context(const SubmissionBundle& bundle,
                              const std::vector<std::string>& required_tex_files) {
  SanitizeContext ctx;

  // Roots first (their preambles define most macros), then the rest in
  // inventory order.
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const auto& r : bundle.roots)
    if (seen.insert(r).second) order.push_back(r);
  for (const auto& f : required_tex_files)
    if (seen.insert(f).second) order.push_back(f);

  struct AssignInfo {
    int count = 0;
    bool value = false;
    bool safe = true;
  };
  std::map<std::string, AssignInfo> assigns;
  std::set<std::string> roots(bundle.roots.begin(), bundle.roots.end());

  for (const auto& path : order) {
    if (!bundle.has(path)) continue;
    auto sf = SourceFile::from_bytes(path, bundle.read(path));
    if (sf.is_binary()) continue;
    ParseOptions opts;
    opts.seed_macros = ctx.macros;
    opts.seed_flags = ctx.newif_flags;
    opts.comment_envs = ctx.comment_envs;
    auto r = parse(sf, opts);
    ctx.macros = r.macros;
    ctx.newif_flags = r.newif_flags;
    ctx.comment_envs = r.comment_envs;
    bool from_root = roots.count(path) > 0;
    for (const auto& fa : r.flag_assigns) {
      auto& info = assigns[fa.flag];
      ++info.count;
      info.value = fa.value;
      if (fa.dynamic_context || !fa.in_preamble || !from_root) info.safe = false;
    }
  }

  // A flag resolves statically when set at most once, in a root preamble,
  // outside any conditional or macro body.
  for (const auto& flag : ctx.newif_flags) {
    auto it = assigns.find(flag);
    if (it == assigns.end()) {
      ctx.static_flags[flag] = false;  // \newif default
    } else if (it->second.count == 1 && it->second.safe) {
      ctx.static_flags[flag] = it->second.value;
    }
  }
  return ctx;
}

std::vector<IrrelevantSpan> find_irrelevant_spans(const SourceFile& file,
                                                  const ParseResult& parsed,
                                                  const SanitizeContext& ctx,
                                                  bool is_root) {
  Walker w{file, parsed, ctx,
           is_root,
           AstNode::npos,
           {}};
  if (is_root && parsed.end_document_pos != AstNode::npos &&
      parsed.end_document_pos < file.bytes.size()) {
    w.outside_from = parsed.end_document_pos;
  }
  w.walk(parsed.root);
  if (w.outside_from != AstNode::npos)
    w.add(Mechanism::outside_document,
          Span{w.outside_from, file.bytes.size(), 0});

  std::sort(w.out.begin(), w.out.end(), [](const IrrelevantSpan& a,
                                           const IrrelevantSpan& b) {
    return a.span.start < b.span.start;
  });
  // Drop any accidental overlap, keeping the earlier span (fail closed).
  std::vector<IrrelevantSpan> result;
  for (auto& s : w.out) {
    if (!result.empty() && s.span.start < result.back().span.end) continue;
    result.push_back(std::move(s));
  }
  return result;
}

std::vector<IrrelevantSpan> find_special_env_comments(const SourceFile& file,
                                                      const ParseResult& parsed,
                                                      const SanitizeContext& ctx) {
  std::vector<IrrelevantSpan> out;
  std::function<void(const AstNode&)> walk = [&](const AstNode& node) {
    bool is_verbatim =
        node.kind == NodeKind::environment &&
        std::find(ctx.verbatim_envs.begin(), ctx.verbatim_envs.end(), node.name) !=
            ctx.verbatim_envs.end();
    if (is_verbatim && node.children.size() >= 2) {
      // Interior is the middle text leaf; flag %-lines inside it.
      for (std::size_t ci = 1; ci + 1 < node.children.size(); ++ci) {
        const Span& interior = node.children[ci].span;
        for (std::size_t i = interior.start; i < interior.end; ++i) {
          if (file.bytes[i] != '%') continue;
          if (i > interior.start && file.bytes[i - 1] == '\\') continue;
          std::size_t e = line_end_of(file.bytes, i);
          IrrelevantSpan sp;
          sp.file = file.path;
          sp.span = Span{i, std::min(e, interior.end), 0};
          sp.mechanism = Mechanism::special_environment_text;
          out.push_back(sp);
          i = e;
        }
      }
      return;
    }
    for (const auto& c : node.children) walk(c);
  };
  walk(parsed.root);
  return out;
}

std::optional<std::string> find_bbl_for(const SubmissionBundle& bundle,
                                        const std::string& root,
                                        const std::string& bib_arg) {
  fs::path rp(root);
  std::string stem_candidate =
      (rp.parent_path() / rp.stem()).generic_string() + ".bbl";
  if (bundle.has(stem_candidate)) return stem_candidate;
  for (auto& part : split(bib_arg, ',')) {
    std::string candidate = trim(part) + ".bbl";
    if (bundle.has(candidate)) return candidate;
    std::string sibling = (rp.parent_path() / candidate).generic_string();
    if (bundle.has(sibling)) return sibling;
  }
  return std::nullopt;
}

CleanPlan plan_clean(const SubmissionBundle& bundle,
                     const std::vector<FileClassification>& classifications,
                     const CleanOptions& options) {
  CleanPlan plan;
  plan.bundle_hash = bundle.content_hash();
  for (int m = 0; m < 6; ++m) plan.detected_counts[Mechanism(m)] = 0;

  std::set<std::string> required;
  for (const auto& c : classifications)
    if (c.verdict == Verdict::required) required.insert(c.path);

  std::vector<std::string> tex_targets;
  for (const auto& p : required)
    if (tex_targets.end() ==
            std::find(tex_targets.begin(), tex_targets.end(), p) &&
        tex_like_path(p))
      tex_targets.push_back(p);

  auto ctx = build_context(bundle, tex_targets);
  std::set<std::string> roots(bundle.roots.begin(), bundle.roots.end());

  if (options.remove_comments) {
    for (const auto& path : tex_targets) {
      auto sf = SourceFile::from_bytes(path, bundle.read(path));
      if (sf.is_binary()) continue;
      ParseOptions popts;
      popts.seed_macros = ctx.macros;
      popts.seed_flags = ctx.newif_flags;
      popts.comment_envs = ctx.comment_envs;
      popts.verbatim_envs = ctx.verbatim_envs;
      auto parsed = parse(sf, popts);
      if (parsed.status == ParseStatus::partial)
        plan.warnings.push_back(path + ": parse errors; affected regions kept");
      auto spans = find_irrelevant_spans(sf, parsed, ctx, roots.count(path) > 0);
      for (auto& s : spans) {
        ++plan.detected_counts[s.mechanism];
        plan.span_edits.push_back(std::move(s));
      }
      for (auto& s : find_special_env_comments(sf, parsed, ctx))
        ++plan.detected_counts[s.mechanism];
      plan.touched_hashes[path] = bundle.find(path)->sha256;
    }
  }

  if (options.inline_bbl) {
    for (const auto& root : bundle.roots) {
      auto sf = SourceFile::from_bytes(root, bundle.read(root));
      if (sf.is_binary()) continue;
      auto parsed = parse(sf);
      std::function<const AstNode*(const AstNode&)> find_bib =
          [&](const AstNode& n) -> const AstNode* {
        if (n.kind == NodeKind::command_use && n.name == "bibliography" &&
            !n.args.empty())
          return &n;
        for (const auto& c : n.children)
          if (const auto* f = find_bib(c)) return f;
        return nullptr;
      };
      const AstNode* bib = find_bib(parsed.root);
      if (!bib) continue;
      std::string arg(sf.bytes.begin() + long(bib->args[0].start),
                      sf.bytes.begin() + long(bib->args[0].end));
      auto bbl = find_bbl_for(bundle, root, arg);
      if (!bbl) {
        plan.warnings.push_back(root + ": \\bibliography present but no .bbl found; left unchanged");
        continue;
      }
      BblInline bi;
      bi.root = root;
      bi.command_span = bib->span;
      bi.bbl_path = *bbl;
      plan.bbl_inlines.push_back(bi);
      plan.touched_hashes[root] = bundle.find(root)->sha256;
      plan.touched_hashes[*bbl] = bundle.find(*bbl)->sha256;
    }
  }

  if (options.remove_dangling) {
    for (const auto& c : classifications) {
      if (c.verdict != Verdict::dangling) continue;
      plan.file_removals.push_back(c.path);
      plan.touched_hashes[c.path] = bundle.find(c.path)->sha256;
    }
  }
  return plan;
}

ApplyOutcome apply_plan(const SubmissionBundle& bundle, const CleanPlan& plan) {
  if (plan.bundle_hash != bundle.content_hash())
    throw Error(Errc::stale_plan, "bundle changed since the plan was computed");
  for (const auto& [path, hash] : plan.touched_hashes) {
    const FileEntry* e = bundle.find(path);
    if (!e || e->sha256 != hash)
      throw Error(Errc::stale_plan, path + " changed since the plan was computed");
  }

  std::set<std::string> removals(plan.file_removals.begin(), plan.file_removals.end());
  std::set<std::string> inlined_bbls;
  std::map<std::string, std::vector<Edit>> edits;
  for (const auto& s : plan.span_edits)
    edits[s.file].push_back(Edit{s.span, s.replacement});

  // Inline each bbl: its own comment edits apply first, then the cleaned
  // body replaces the \bibliography call.
  for (const auto& bi : plan.bbl_inlines) {
    Bytes bbl = bundle.read(bi.bbl_path);
    std::vector<Edit> bbl_edits;
    auto it = edits.find(bi.bbl_path);
    if (it != edits.end()) bbl_edits = it->second;
    Bytes cleaned = serialize(bbl, bbl_edits);
    edits[bi.root].push_back(Edit{bi.command_span, cleaned});
    inlined_bbls.insert(bi.bbl_path);
  }

  ApplyOutcome out;
  for (const auto& f : bundle.files) {
    if (removals.count(f.path) || inlined_bbls.count(f.path)) {
      out.removed_files.push_back(f.path);
      continue;
    }
    Bytes content = bundle.read(f.path);
    auto it = edits.find(f.path);
    if (it != edits.end()) content = serialize(content, it->second);
    out.files.emplace_back(f.path, std::move(content));
  }
  if (out.files.empty())
    throw Error(Errc::write_failure, "plan removes every file in the bundle");
  return out;
}

}  // namespace texsan
