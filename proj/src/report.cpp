#include "texsan/report.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace texsan {

using nlohmann::json;

namespace {

json span_to_json(const Span& s) {
  return json{{"start", s.start}, {"end", s.end}, {"line", s.line}};
}

Span span_from_json(const json& j) {
  return Span{j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>(),
              j.value("line", 1u)};
}

Verdict verdict_from_name(const std::string& s) {
  if (s == "required") return Verdict::required;
  if (s == "ancillary") return Verdict::ancillary;
  if (s == "directive") return Verdict::directive;
  return Verdict::dangling;
}

Evidence evidence_from_name(const std::string& s) {
  if (s == "access_trace") return Evidence::access_trace;
  if (s == "readme") return Evidence::readme;
  if (s == "anc_rule") return Evidence::anc_rule;
  if (s == "root_rule") return Evidence::root_rule;
  return Evidence::recorder;
}

Mechanism mechanism_from_name(const std::string& s) {
  for (int i = 0; i < 6; ++i)
    if (s == mechanism_name(Mechanism(i))) return Mechanism(i);
  return Mechanism::line_comment;
}

}  // namespace

std::string report_to_json(const SanitizationReport& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["tool_version"] = r.tool_version;
  j["toolchain"] = r.toolchain;
  j["origin"] = r.origin;
  j["bundle_hash_before"] = r.bundle_hash_before;
  j["bundle_hash_after"] = r.bundle_hash_after;
  j["roots"] = r.roots;

  json cls = json::array();
  for (const auto& c : r.classifications)
    cls.push_back(json{{"path", c.path},
                       {"verdict", verdict_name(c.verdict)},
                       {"evidence", evidence_name(c.evidence)}});
  j["classifications"] = cls;

  json plan;
  plan["bundle_hash"] = r.plan.bundle_hash;
  plan["file_removals"] = r.plan.file_removals;
  json edits = json::array();
  for (const auto& s : r.plan.span_edits)
    edits.push_back(json{{"file", s.file},
                         {"span", span_to_json(s.span)},
                         {"mechanism", mechanism_name(s.mechanism)},
                         {"replacement_b64", base64_encode(s.replacement)}});
  plan["span_edits"] = edits;
  json inlines = json::array();
  for (const auto& b : r.plan.bbl_inlines)
    inlines.push_back(json{{"root", b.root},
                           {"span", span_to_json(b.command_span)},
                           {"bbl", b.bbl_path}});
  plan["bbl_inlines"] = inlines;
  plan["touched_hashes"] = r.plan.touched_hashes;
  json counts;
  for (const auto& [m, n] : r.plan.detected_counts) counts[mechanism_name(m)] = n;
  plan["mechanism_counts"] = counts;
  plan["warnings"] = r.plan.warnings;
  j["plan"] = plan;

  j["metadata_removed"] = r.metadata_removed;
  j["metadata_skipped"] = r.metadata_skipped;
  j["timestamps_normalized"] = r.timestamps_normalized;
  j["times_epoch"] = r.times_epoch;
  j["verified"] = r.verified;
  json v;
  v["verdict"] = outcome_name(r.verification.verdict);
  v["changed_sources"] = r.verification.changed_sources;
  v["compiles_after"] = r.verification.compiles_after;
  v["detail"] = r.verification.detail;
  json vis;
  vis["verdict"] = visual_verdict_name(r.verification.visual.verdict);
  vis["page_count_match"] = r.verification.visual.page_count_match;
  vis["dpi"] = r.verification.visual.dpi;
  vis["reason"] = r.verification.visual.reason;
  json pages = json::array();
  for (const auto& p : r.verification.visual.mismatched_pages)
    pages.push_back(json{{"page", p.page},
                         {"differing_pixels", p.differing_pixels},
                         {"bbox", {p.bbox_x0, p.bbox_y0, p.bbox_x1, p.bbox_y1}},
                         {"dimension_mismatch", p.dimension_mismatch}});
  vis["mismatched_pages"] = pages;
  v["visual"] = vis;
  j["verification"] = v;

  j["findings_by_severity"] = r.findings_by_severity;
  j["warnings"] = r.warnings;
  return j.dump(2);
}

SanitizationReport report_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  SanitizationReport r;
  r.schema_version = j.value("schema_version", 1);
  r.tool_version = j.value("tool_version", "");
  r.toolchain = j.value("toolchain", "");
  r.origin = j.value("origin", "");
  r.bundle_hash_before = j.value("bundle_hash_before", "");
  r.bundle_hash_after = j.value("bundle_hash_after", "");
  r.roots = j.value("roots", std::vector<std::string>{});
  for (const auto& c : j.value("classifications", json::array())) {
    FileClassification fc;
    fc.path = c.at("path").get<std::string>();
    fc.verdict = verdict_from_name(c.at("verdict").get<std::string>());
    fc.evidence = evidence_from_name(c.at("evidence").get<std::string>());
    r.classifications.push_back(std::move(fc));
  }
  const json& plan = j.at("plan");
  r.plan.bundle_hash = plan.value("bundle_hash", "");
  r.plan.file_removals = plan.value("file_removals", std::vector<std::string>{});
  for (const auto& e : plan.value("span_edits", json::array())) {
    IrrelevantSpan s;
    s.file = e.at("file").get<std::string>();
    s.span = span_from_json(e.at("span"));
    s.mechanism = mechanism_from_name(e.at("mechanism").get<std::string>());
    s.replacement = base64_decode(e.value("replacement_b64", ""));
    r.plan.span_edits.push_back(std::move(s));
  }
  for (const auto& e : plan.value("bbl_inlines", json::array())) {
    BblInline b;
    b.root = e.at("root").get<std::string>();
    b.command_span = span_from_json(e.at("span"));
    b.bbl_path = e.at("bbl").get<std::string>();
    r.plan.bbl_inlines.push_back(std::move(b));
  }
  if (plan.contains("touched_hashes"))
    r.plan.touched_hashes =
        plan.at("touched_hashes").get<std::map<std::string, std::string>>();
  json counts = plan.value("mechanism_counts", json::object());
  for (const auto& [name, count] : counts.items())
    r.plan.detected_counts[mechanism_from_name(name)] = count.get<int>();
  r.plan.warnings = plan.value("warnings", std::vector<std::string>{});

  if (j.contains("metadata_removed"))
    r.metadata_removed =
        j.at("metadata_removed")
            .get<std::map<std::string, std::vector<std::string>>>();
  r.metadata_skipped = j.value("metadata_skipped", std::vector<std::string>{});
  r.timestamps_normalized = j.value("timestamps_normalized", false);
  r.times_epoch = j.value("times_epoch", std::int64_t(0));
  r.verified = j.value("verified", false);
  if (j.contains("findings_by_severity"))
    r.findings_by_severity =
        j.at("findings_by_severity").get<std::map<std::string, int>>();
  r.warnings = j.value("warnings", std::vector<std::string>{});

  if (j.contains("verification")) {
    const json& v = j.at("verification");
    std::string verdict = v.value("verdict", "breaks");
    for (auto cand : {CleanOutcome::V::beneficial, CleanOutcome::V::neutral,
                      CleanOutcome::V::breaks, CleanOutcome::V::unverified})
      if (verdict == outcome_name(cand)) r.verification.verdict = cand;
    r.verification.changed_sources = v.value("changed_sources", false);
    r.verification.compiles_after = v.value("compiles_after", false);
    r.verification.detail = v.value("detail", "");
    if (v.contains("visual")) {
      const json& vis = v.at("visual");
      std::string vv = vis.value("verdict", "incomparable");
      for (auto cand : {VisualDiff::V::identical, VisualDiff::V::different,
                        VisualDiff::V::incomparable})
        if (vv == visual_verdict_name(cand)) r.verification.visual.verdict = cand;
      r.verification.visual.page_count_match = vis.value("page_count_match", false);
      r.verification.visual.dpi = vis.value("dpi", 150);
      r.verification.visual.reason = vis.value("reason", "");
    }
  }
  return r;
}

void save_report(const SanitizationReport& r, const fs::path& path) {
  write_file(path, report_to_json(r));
}

SanitizationReport load_report(const fs::path& path) {
  return report_from_json(to_string(read_file(path)));
}

std::string report_summary(const SanitizationReport& r) {
  std::ostringstream os;
  os << "bundle: " << r.origin << "\n";
  os << "roots: " << join(r.roots, ", ") << "\n";
  int required = 0, dangling = 0, ancillary = 0, directive = 0;
  for (const auto& c : r.classifications) {
    switch (c.verdict) {
      case Verdict::required: ++required; break;
      case Verdict::dangling: ++dangling; break;
      case Verdict::ancillary: ++ancillary; break;
      case Verdict::directive: ++directive; break;
    }
  }
  os << "files: " << r.classifications.size() << " (" << required << " required, "
     << dangling << " dangling, " << ancillary << " ancillary, " << directive
     << " directive)\n";
  os << "removed files: " << r.plan.file_removals.size() << "\n";
  os << "span edits: " << r.plan.span_edits.size() << "\n";
  os << "mechanisms:";
  for (const auto& [m, n] : r.plan.detected_counts)
    os << " " << mechanism_name(m) << "=" << n;
  os << "\n";
  os << "bbl inlines: " << r.plan.bbl_inlines.size() << "\n";
  std::size_t meta_files = r.metadata_removed.size();
  os << "metadata stripped on " << meta_files << " file(s)\n";
  if (r.timestamps_normalized)
    os << "timestamps normalized to " << iso8601(r.times_epoch) << "\n";
  if (r.verified)
    os << "verification: " << outcome_name(r.verification.verdict) << " (visual "
       << visual_verdict_name(r.verification.visual.verdict) << " at "
       << r.verification.visual.dpi << " dpi)\n";
  else
    os << "verification: unverified\n";
  for (const auto& w : r.warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::string findings_to_jsonl(const std::vector<Finding>& findings,
                              bool redact_values) {
  std::ostringstream os;
  for (const auto& f : findings) {
    json j;
    j["rule"] = f.rule;
    j["file"] = f.file;
    j["line"] = f.span.line;
    j["start"] = f.span.start;
    j["end"] = f.span.end;
    j["severity"] = severity_name(f.severity);
    j["match"] = redact_values ? redact(f.matched) : f.matched;
    j["in_dangling_file"] = f.in_dangling_file;
    j["in_comment"] = f.in_comment;
    os << j.dump() << "\n";
  }
  return os.str();
}

}  // namespace texsan
