#include "texsan/scan.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>

namespace texsan {

const char* severity_name(Severity s) {
  switch (s) {
    case Severity::H: return "H";
    case Severity::M: return "M";
    case Severity::L: return "L";
  }
  return "?";
}

const char* filter_decision_name(FilterDecision d) {
  switch (d) {
    case FilterDecision::keep: return "keep";
    case FilterDecision::drop_entropy: return "drop(entropy)";
    case FilterDecision::drop_monotone: return "drop(monotone)";
    case FilterDecision::drop_junk: return "drop(junk)";
  }
  return "?";
}

double shannon_entropy(std::string_view segment) {
  if (segment.empty()) return 0.0;
  std::array<std::size_t, 256> counts{};
  for (unsigned char c : segment) ++counts[c];
  double h = 0.0;
  double n = double(segment.size());
  for (std::size_t c : counts) {
    if (!c) continue;
    double p = double(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

std::vector<std::string> entropy_segments(std::string_view candidate) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : candidate) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += c;
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  if (out.empty()) out.emplace_back(candidate);
  return out;
}

namespace {

bool strictly_monotone(std::string_view s) {
  if (s.size() < 2) return false;
  bool inc = true, dec = true;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] <= s[i - 1]) inc = false;
    if (s[i] >= s[i - 1]) dec = false;
  }
  return inc || dec;
}

bool known_junk(std::string_view candidate) {
  std::string lower = to_lower(candidate);
  // Repeated single character, length >= 4.
  for (std::size_t i = 3; i < lower.size(); ++i) {
    if (lower[i] == lower[i - 1] && lower[i] == lower[i - 2] && lower[i] == lower[i - 3])
      return true;
  }
  static const char* kJunk[] = {"qwerty", "qwertz", "azerty", "asdfgh", "zxcvbn",
                                "example", "test",  "dummy",  "sample"};
  for (const char* j : kJunk)
    if (lower.find(j) != std::string::npos) return true;
  return false;
}

}  // namespace

FilterDecision filter_candidate(std::string_view candidate) {
  double best = 0.0;
  for (const auto& seg : entropy_segments(candidate))
    best = std::max(best, shannon_entropy(seg));
  if (best <= 3.0) return FilterDecision::drop_entropy;
  if (strictly_monotone(candidate)) return FilterDecision::drop_monotone;
  if (known_junk(candidate)) return FilterDecision::drop_junk;
  return FilterDecision::keep;
}

std::string redact(std::string_view matched) {
  if (matched.size() <= 4) return std::string(matched);
  return std::string(matched.substr(0, 2)) + std::string(matched.size() - 4, '*') +
         std::string(matched.substr(matched.size() - 2));
}

const std::vector<PatternRule>& builtin_rules() {
  using Ctx = PatternRule::Context;
  auto R = [](std::string name, Severity sev, std::string regex, bool gated = false,
              bool icase = false, int group = 0, bool multiline = false,
              Ctx ctx = Ctx::any) {
    PatternRule r;
    r.name = std::move(name);
    r.severity = sev;
    r.regex = std::move(regex);
    r.entropy_gated = gated;
    r.icase = icase;
    r.capture_group = group;
    r.multiline = multiline;
    r.context = ctx;
    return r;
  };
  static const std::vector<PatternRule> rules = {
      R("Email addresses", Severity::M,
        R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})"),
      R("URLs", Severity::L, R"((?:https?|ftps?|sftp|ssh)://[^\s{}"'<>\\]+)", false,
        true),
      R("Profanity", Severity::L,
        R"(\b(?:fuck|shit|bastard|asshole|bitch)[a-z0-9]*\b)", false, true),
      R("P.O. box", Severity::L, R"(\bP\.?\s?O\.?\s?Box\s+\d+)", false, true),
      R("IPv4 addresses", Severity::L,
        R"(\b(?:(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)\.){3}(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)\b)"),
      R("Credit card number", Severity::H,
        R"(\b(?:4\d{3}|5[1-5]\d{2}|3[47]\d{2}|6011)(?:[ -]?\d{4}){3}\b)"),
      R("US SSN", Severity::H, R"(\b\d{3}-\d{2}-\d{4}\b)"),
      R("Review form", Severity::M,
        R"(\b(?:reviewer|rebuttal|meta-?review|camera-?ready)\b)", false, true),
      R("Generic passwords", Severity::H,
        R"((?:password|passwd|pwd)\s*[:=]\s*["']?([^\s"']{8,64}))", true, true, 1),
      R("AI Disclaimers", Severity::L, R"(\bAs an AI language model\b)", false, true),
      R("IBAN", Severity::M, R"(\b[A-Z]{2}\d{2}[A-Z0-9]{11,30}\b)"),
      R("censor pkg usage", Severity::M,
        R"(\\(?:usepackage|RequirePackage)(?:\[[^\]]*\])?\{(?:censor|pdfprivacy)\})"),
      R("AWS access keys", Severity::H, R"(\b(?:AKIA|ASIA)[0-9A-Z]{16}\b)"),
      R("Prompt injection", Severity::H,
        R"((?:ignore\s+(?:all\s+)?(?:previous|prior|above)\s+instructions|disregard\s+(?:all\s+)?(?:previous|prior)\s+instructions|give\s+a\s+positive\s+review))",
        false, true),
      R("Bitcoin addresses", Severity::L, R"(\b[13][a-km-zA-HJ-NP-Z1-9]{25,34}\b)"),
      R("Password in URL", Severity::H,
        R"([a-z][a-z0-9+.-]*://[^/\s:@]+:([^@/\s]{3,})@)", false, true, 1),
      R("Bitcoin Bech32", Severity::L, R"(\bbc1[ac-hj-np-z02-9]{11,71}\b)"),
      R("Google API keys", Severity::H, R"(\bAIza[0-9A-Za-z_\-]{35}\b)"),
      R("GitLab tokens", Severity::H, R"(\bglpat-[0-9A-Za-z_\-]{20}\b)"),
      R("Slack tokens", Severity::H, R"(\bxox[baprs]-[0-9A-Za-z\-]{10,}\b)"),
      R("Generic API keys", Severity::H,
        R"((?:api[_-]?key|apikey|access[_-]?key|auth[_-]?token)\s*[:=]\s*["']?([0-9A-Za-z_\-]{16,64}))",
        true, true, 1),
      R("GitHub tokens", Severity::H, R"(\bgh[pousr]_[0-9A-Za-z]{36,})"),
      R("JWT tokens", Severity::M,
        R"(\beyJ[0-9A-Za-z_\-]{8,}\.[0-9A-Za-z_\-]{8,}\.[0-9A-Za-z_\-]+)"),
      R("/etc/passwd entries", Severity::M,
        R"(^[a-z_][a-z0-9_\-]*:[^:\r\n]*:\d+:\d+:[^:\r\n]*:[^:\r\n]*:[^:\r\n]*$)",
        false, false, 0, true),
      R("Nmap scans", Severity::L, R"(\bNmap scan report for\b)"),
      R("Hugging Face keys", Severity::H, R"(\bhf_[0-9A-Za-z]{30,})"),
      R("Facebook OAuth", Severity::H, R"(\bEAACEdEose0cBA[0-9A-Za-z]+)"),
      R("SSH private keys", Severity::H,
        R"(-----BEGIN (?:RSA |DSA |EC |OPENSSH )?PRIVATE KEY-----)"),
      R("OpenAI API keys", Severity::H, R"(\bsk-[0-9A-Za-z_\-]{32,})"),
      R("X access tokens", Severity::H, R"(\b\d{8,19}-[0-9A-Za-z]{35,44}\b)"),
      R("Google service acc.", Severity::H, R"("type"\s*:\s*"service_account")"),
      R("Slack webhooks", Severity::H,
        R"(https://hooks\.slack\.com/services/T[0-9A-Za-z_]+/B[0-9A-Za-z_]+/[0-9A-Za-z]+)"),
      R("/etc/shadow", Severity::M,
        R"(^[a-z_][a-z0-9_\-]*:\$[0-9aby]\$[^:\s]+:)", false, false, 0, true),
      R("Generic secrets", Severity::H,
        R"((?:client[_-]?secret|secret[_-]?key|secret)\s*[:=]\s*["']?([0-9A-Za-z_\-]{16,64}))",
        true, true, 1),
      R("Google access tokens", Severity::H, R"(\bya29\.[0-9A-Za-z_\-]+)"),
  };
  return rules;
}

std::vector<PatternRule> load_rules(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::usage_error, "cannot open rule catalog " + file.string());
  std::vector<PatternRule> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() < 4) continue;
    PatternRule r;
    r.name = cols[0];
    std::string sev = trim(cols[1]);
    r.severity = sev == "H" ? Severity::H : sev == "M" ? Severity::M : Severity::L;
    for (char f : cols[2]) {
      if (f == 'i') r.icase = true;
      if (f == 'e') {
        r.entropy_gated = true;
        r.capture_group = 1;
      }
      if (f == 'm') r.multiline = true;
    }
    r.regex = cols[3];
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::regex compile_rule(const PatternRule& rule) {
  auto flags = std::regex::ECMAScript | std::regex::optimize;
  if (rule.icase) flags |= std::regex::icase;
  if (rule.multiline) flags |= std::regex::multiline;
  return std::regex(rule.regex, flags);
}

bool span_in_any(std::size_t start, std::size_t end, const std::vector<Span>& spans) {
  for (const auto& s : spans)
    if (start < s.end && s.start < end) return true;
  return false;
}

}  // namespace

std::vector<Finding> scan_text(const std::string& path, const Bytes& bytes,
                               const std::vector<PatternRule>& rules,
                               const std::vector<Span>& comment_spans,
                               bool in_dangling) {
  std::vector<Finding> out;
  std::string text = to_string(bytes);

  // 1-based line lookup.
  std::vector<std::size_t> line_starts{0};
  for (std::size_t i = 0; i < text.size(); ++i)
    if (text[i] == '\n') line_starts.push_back(i + 1);
  auto line_of = [&](std::size_t off) {
    auto it = std::upper_bound(line_starts.begin(), line_starts.end(), off);
    return std::uint32_t(it - line_starts.begin());
  };

  for (const auto& rule : rules) {
    std::regex re;
    try {
      re = compile_rule(rule);
    } catch (const std::regex_error&) {
      continue;  // invalid user-supplied pattern; built-ins are covered by tests
    }
    auto begin = std::sregex_iterator(text.begin(), text.end(), re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      const std::smatch& m = *it;
      std::size_t start = std::size_t(m.position(0));
      std::size_t end = start + std::size_t(m.length(0));
      bool in_comment = span_in_any(start, end, comment_spans);
      if (rule.context == PatternRule::Context::comment_only && !in_comment) continue;
      if (rule.context == PatternRule::Context::dangling_only && !in_dangling) continue;
      if (rule.entropy_gated) {
        std::string candidate =
            rule.capture_group > 0 && rule.capture_group < int(m.size())
                ? m.str(std::size_t(rule.capture_group))
                : m.str(0);
        if (filter_candidate(candidate) != FilterDecision::keep) continue;
      }
      Finding f;
      f.rule = rule.name;
      f.file = path;
      f.span = Span{start, end, line_of(start)};
      f.matched = m.str(0);
      f.severity = rule.severity;
      f.in_dangling_file = in_dangling;
      f.in_comment = in_comment;
      out.push_back(std::move(f));
    }
  }
  return out;
}

void sort_findings(std::vector<Finding>& findings) {
  std::sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
    if (a.severity != b.severity) return int(a.severity) < int(b.severity);
    if (a.file != b.file) return a.file < b.file;
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.rule < b.rule;
  });
}

std::vector<Finding> scan(const SubmissionBundle& bundle,
                          const std::vector<FileClassification>& classifications,
                          const std::map<std::string, std::vector<Span>>& spans,
                          const std::vector<PatternRule>& rules) {
  std::map<std::string, Verdict> verdicts;
  for (const auto& c : classifications) verdicts[c.path] = c.verdict;

  std::vector<Finding> out;
  for (const auto& f : bundle.files) {
    auto sf = SourceFile::from_bytes(f.path, bundle.read(f.path));
    if (sf.is_binary()) continue;
    bool dangling = false;
    auto vit = verdicts.find(f.path);
    if (vit != verdicts.end()) dangling = vit->second == Verdict::dangling;
    std::vector<Span> comment_spans;
    auto sit = spans.find(f.path);
    if (sit != spans.end()) comment_spans = sit->second;
    auto found = scan_text(f.path, sf.bytes, rules, comment_spans, dangling);
    out.insert(out.end(), found.begin(), found.end());
  }
  sort_findings(out);
  return out;
}

}  // namespace texsan
