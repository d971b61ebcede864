#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "texsan/ast.hpp"
#include "texsan/bundle.hpp"
#include "texsan/cli.hpp"
#include "texsan/report.hpp"
#include "texsan/sanitize.hpp"
#include "texsan/scan.hpp"
#include "texsan/verify.hpp"

namespace py = pybind11;
using namespace texsan;

namespace {

SourceFile source_from_bytes(const py::bytes& data, const std::string& path) {
  std::string s = data;
  return SourceFile::from_bytes(path, Bytes(s.begin(), s.end()));
}

py::bytes roundtrip(const py::bytes& data) {
  auto f = source_from_bytes(data, "buffer.tex");
  if (f.is_binary()) throw Error(Errc::binary_input, "binary input");
  parse(f);
  Bytes out = serialize(f, {});
  return py::bytes(reinterpret_cast<const char*>(out.data()), out.size());
}

py::list spans_of(const py::bytes& data, bool is_root) {
  auto f = source_from_bytes(data, "buffer.tex");
  if (f.is_binary()) throw Error(Errc::binary_input, "binary input");
  SanitizeContext ctx;
  ParseOptions opts;
  auto parsed = parse(f, opts);
  ctx.macros = parsed.macros;
  ctx.newif_flags = parsed.newif_flags;
  ctx.comment_envs = parsed.comment_envs;
  for (const auto& flag : ctx.newif_flags) ctx.static_flags[flag] = false;
  for (const auto& fa : parsed.flag_assigns) {
    if (fa.dynamic_context || !fa.in_preamble) ctx.static_flags.erase(fa.flag);
    else ctx.static_flags[fa.flag] = fa.value;
  }
  // Re-parse with the collected context so later definitions apply.
  auto parsed2 = parse(f, ParseOptions{{}, ctx.comment_envs, ctx.macros,
                                       ctx.newif_flags, 128});
  auto spans = find_irrelevant_spans(f, parsed2, ctx, is_root);
  py::list out;
  for (const auto& s : spans) {
    py::dict d;
    d["start"] = s.span.start;
    d["end"] = s.span.end;
    d["line"] = s.span.line;
    d["mechanism"] = mechanism_name(s.mechanism);
    d["replacement"] = py::bytes(reinterpret_cast<const char*>(s.replacement.data()),
                                 s.replacement.size());
    out.append(d);
  }
  return out;
}

py::bytes strip_irrelevant(const py::bytes& data, bool is_root) {
  auto f = source_from_bytes(data, "buffer.tex");
  if (f.is_binary()) throw Error(Errc::binary_input, "binary input");
  auto parsed = parse(f);
  SanitizeContext ctx;
  ctx.macros = parsed.macros;
  ctx.newif_flags = parsed.newif_flags;
  ctx.comment_envs = parsed.comment_envs;
  for (const auto& flag : ctx.newif_flags) ctx.static_flags[flag] = false;
  for (const auto& fa : parsed.flag_assigns) {
    if (fa.dynamic_context || !fa.in_preamble) ctx.static_flags.erase(fa.flag);
    else ctx.static_flags[fa.flag] = fa.value;
  }
  auto parsed2 = parse(f, ParseOptions{{}, ctx.comment_envs, ctx.macros,
                                       ctx.newif_flags, 128});
  auto spans = find_irrelevant_spans(f, parsed2, ctx, is_root);
  std::vector<Edit> edits;
  for (const auto& s : spans) edits.push_back(Edit{s.span, s.replacement});
  Bytes out = serialize(f, edits);
  return py::bytes(reinterpret_cast<const char*>(out.data()), out.size());
}

py::list scan_text_py(const std::string& text) {
  auto findings = scan_text("buffer", to_bytes(text), builtin_rules());
  py::list out;
  for (const auto& f : findings) {
    py::dict d;
    d["rule"] = f.rule;
    d["severity"] = severity_name(f.severity);
    d["start"] = f.span.start;
    d["end"] = f.span.end;
    d["match"] = f.matched;
    out.append(d);
  }
  return out;
}

py::dict clean_py(const std::string& input, const std::string& output,
                  bool verify, double timeout) {
  cli::CleanInvocation inv;
  inv.input = input;
  inv.out = output;
  inv.verify = verify;
  inv.timeout_seconds = timeout;
  inv.quiet = true;
  auto report = cli::run_clean(inv);
  py::dict d;
  d["removed_files"] = report.plan.file_removals;
  d["span_edits"] = report.plan.span_edits.size();
  d["bbl_inlines"] = report.plan.bbl_inlines.size();
  d["verdict"] = outcome_name(report.verification.verdict);
  d["hash_before"] = report.bundle_hash_before;
  d["hash_after"] = report.bundle_hash_after;
  return d;
}

std::string compare_pdfs_py(const std::string& a, const std::string& b, int dpi) {
  Config config;
  Verifier v(config, dpi);
  return visual_verdict_name(v.compare(a, b).verdict);
}

}  // namespace

PYBIND11_MODULE(_texsan, m) {
  m.doc() = "LaTeX submission sanitizer core";

  m.def("shannon_entropy",
        [](const std::string& s) { return shannon_entropy(s); },
        py::arg("segment"), "Shannon entropy in bits of the character distribution");
  m.def("filter_candidate",
        [](const std::string& s) { return std::string(filter_decision_name(filter_candidate(s))); },
        py::arg("candidate"),
        "Secret-candidate filter: 'keep' or a drop(...) reason");
  m.def("parse_roundtrip", &roundtrip, py::arg("data"),
        "Parse and re-serialize; always byte-identical to the input");
  m.def("find_irrelevant_spans", &spans_of, py::arg("data"),
        py::arg("is_root") = true, "Removable spans with mechanisms");
  m.def("strip_irrelevant", &strip_irrelevant, py::arg("data"),
        py::arg("is_root") = true, "Apply comment/branch/argument removal");
  m.def("scan_text", &scan_text_py, py::arg("text"),
        "Run the built-in secret patterns over a text buffer");
  m.def("clean", &clean_py, py::arg("input"), py::arg("output"),
        py::arg("verify") = true, py::arg("timeout") = 300.0,
        "Sanitize a bundle directory into a new output directory");
  m.def("compare_pdfs", &compare_pdfs_py, py::arg("a"), py::arg("b"),
        py::arg("dpi") = 150, "Pixel comparison verdict for two PDFs");
  m.attr("__version__") = cli::kToolVersion;
}
