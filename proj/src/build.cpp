#include "texsan/build.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "texsan/subprocess.hpp"

namespace texsan {

namespace {

std::string job_stem(const std::string& root) {
  fs::path p(root);
  return p.stem().string();
}

/// Maps an absolute or PWD-relative recorder path to a bundle-relative path,
/// or "" when it points outside the scratch tree.
std::string relativize(const std::string& raw, const fs::path& scratch) {
  fs::path p(raw);
  if (!p.is_absolute()) p = scratch / p;
  p = p.lexically_normal();
  auto rel = p.lexically_relative(scratch.lexically_normal());
  std::string s = rel.generic_string();
  if (s.empty() || s == "." || starts_with(s, "../")) return "";
  return s;
}

std::string hash_aux_state(const fs::path& scratch, const std::string& stem) {
  std::string acc;
  for (const char* ext : {".aux", ".toc", ".lof", ".lot"}) {
    fs::path p = scratch / (stem + ext);
    std::error_code ec;
    if (fs::exists(p, ec)) acc += sha256_hex(read_file(p));
    acc += "|";
  }
  return acc;
}

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::required: return "required";
    case Verdict::dangling: return "dangling";
    case Verdict::ancillary: return "ancillary";
    case Verdict::directive: return "directive";
  }
  return "?";
}

const char* evidence_name(Evidence e) {
  switch (e) {
    case Evidence::recorder: return "recorder";
    case Evidence::access_trace: return "access_trace";
    case Evidence::readme: return "readme";
    case Evidence::anc_rule: return "anc_rule";
    case Evidence::root_rule: return "root_rule";
  }
  return "?";
}

BuildRecord BuildRunner::run_pass(const SubmissionBundle& bundle,
                                  const std::string& root, const fs::path& scratch,
                                  int pass,
                                  const std::map<std::string, std::string>& extra_env) {
  std::string stem = job_stem(root);
  std::string cmd = expand_placeholders(
      config_.engine_cmd(),
      {{"main", root}, {"outdir", "."}, {"jobname", stem}});
  auto argv = split_command(cmd);

  RunOptions opts;
  opts.cwd = scratch;
  opts.env = extra_env;
  // Pin the build epoch so \today and PDF creation dates are reproducible
  // across the original/sanitized compile pair.
  if (!opts.env.count("SOURCE_DATE_EPOCH")) {
    const char* parent = std::getenv("SOURCE_DATE_EPOCH");
    opts.env["SOURCE_DATE_EPOCH"] =
        config_.get_or("build.epoch", parent ? parent : "946684800");
  }
  opts.timeout_seconds = limits_.timeout_seconds;
  opts.watch_log = scratch / (stem + ".log");
  opts.log_limit_bytes = limits_.log_limit_bytes;
  auto res = run_process(argv, opts);

  if (res.log_overflow)
    throw Error(Errc::log_overflow, root + ": log file exceeded limit");
  if (res.timed_out)
    throw Error(Errc::compile_timeout,
                root + ": compile exceeded " +
                    std::to_string(limits_.timeout_seconds) + " s");
  if (res.exit_code != 0)
    throw Error(Errc::compile_failed,
                root + ": compiler exited with code " + std::to_string(res.exit_code));

  BuildRecord rec;
  rec.root = root;
  rec.pass = pass;

  fs::path fls = scratch / (stem + ".fls");
  std::ifstream in(fls);
  if (!in)
    throw Error(Errc::compile_failed, root + ": recorder file missing (" +
                                          fls.string() + ")");
  std::string line;
  fs::path pwd = scratch;
  while (std::getline(in, line)) {
    if (starts_with(line, "PWD ")) {
      pwd = fs::path(trim(line.substr(4)));
      rec.working_dir = pwd.string();
      continue;
    }
    bool is_input = starts_with(line, "INPUT ");
    bool is_output = starts_with(line, "OUTPUT ");
    if (!is_input && !is_output) continue;
    std::string raw = trim(line.substr(is_input ? 6 : 7));
    std::string rel = relativize(raw, pwd);
    if (rel.empty()) continue;  // outside the bundle (system TeX tree)
    if (is_input) {
      if (bundle.has(rel)) rec.inputs.insert(rel);
    } else {
      rec.outputs.insert(rel);
    }
  }
  return rec;
}

BuildRecord BuildRunner::compile_with_recorder(const SubmissionBundle& bundle,
                                               const std::string& root,
                                               const fs::path& scratch, int pass) {
  if (!bundle.has(root))
    throw Error(Errc::usage_error, root + ": not a file in the bundle");
  return run_pass(bundle, root, scratch, pass, {});
}

CompileOutcome BuildRunner::compile_all(const SubmissionBundle& bundle,
                                        const std::string& root,
                                        const fs::path& scratch) {
  fs::create_directories(scratch);
  copy_tree(bundle.staging, scratch);

  CompileOutcome out;
  out.scratch = scratch;
  std::string stem = job_stem(root);
  std::string prev_state;
  for (int pass = 1; pass <= limits_.max_passes; ++pass) {
    out.records.push_back(compile_with_recorder(bundle, root, scratch, pass));
    std::string state = hash_aux_state(scratch, stem);
    if (state == prev_state) break;
    prev_state = state;
  }
  out.pdf = scratch / (stem + ".pdf");
  std::error_code ec;
  out.ok = fs::exists(out.pdf, ec);
  if (!out.ok)
    throw Error(Errc::compile_failed, root + ": no PDF produced");
  return out;
}

std::set<std::string> BuildRunner::trace_file_accesses(const SubmissionBundle& bundle,
                                                       const std::string& root) {
  std::string shim = config_.trace_shim();
  std::error_code ec;
  if (shim.empty() || !fs::exists(fs::path(shim), ec))
    throw Error(Errc::tracing_unavailable, "no access-trace shim available");

  TempDir scratch("trace");
  copy_tree(bundle.staging, scratch.path());
  fs::path trace_file = scratch.path() / ".texsan-access-trace";

  std::map<std::string, std::string> env = {
      {"LD_PRELOAD", shim},
      {"TEXSAN_TRACE_FILE", trace_file.string()},
  };

  std::string stem = job_stem(root);
  std::string prev_state;
  for (int pass = 1; pass <= limits_.max_passes; ++pass) {
    run_pass(bundle, root, scratch.path(), pass, env);
    std::string state = hash_aux_state(scratch.path(), stem);
    if (state == prev_state) break;
    prev_state = state;
  }

  std::set<std::string> accessed;
  std::ifstream in(trace_file);
  if (!in) throw Error(Errc::tracing_unavailable, "trace file was not produced");
  std::string line;
  while (std::getline(in, line)) {
    if (!starts_with(line, "R ")) continue;
    std::string rel = relativize(line.substr(2), scratch.path());
    if (rel.empty() || rel == ".texsan-access-trace") continue;
    if (bundle.has(rel)) accessed.insert(rel);
  }
  return accessed;
}

std::set<std::string> required_set(const SubmissionBundle& bundle,
                                   const std::vector<BuildRecord>& records) {
  std::set<std::string> req;
  for (const auto& r : records) req.insert(r.inputs.begin(), r.inputs.end());
  for (const auto& root : bundle.roots) req.insert(root);
  for (const auto& p : bundle.readme_included_paths()) req.insert(p);
  return req;
}

std::vector<FileClassification> classify(const SubmissionBundle& bundle,
                                         const std::vector<BuildRecord>& records) {
  if (records.empty())
    throw Error(Errc::compile_failed, "classification requires a successful build record");

  std::set<std::string> recorded;
  for (const auto& r : records) recorded.insert(r.inputs.begin(), r.inputs.end());
  std::set<std::string> roots(bundle.roots.begin(), bundle.roots.end());
  auto readme_included = bundle.readme_included_paths();
  std::set<std::string> directives(bundle.directive_files.begin(),
                                   bundle.directive_files.end());

  std::vector<FileClassification> out;
  out.reserve(bundle.files.size());
  for (const auto& f : bundle.files) {
    FileClassification c;
    c.path = f.path;
    if (directives.count(f.path)) {
      c.verdict = Verdict::directive;
      c.evidence = Evidence::readme;
    } else if (bundle.anc_paths.count(f.path)) {
      c.verdict = Verdict::ancillary;
      c.evidence = Evidence::anc_rule;
    } else if (recorded.count(f.path)) {
      c.verdict = Verdict::required;
      c.evidence = Evidence::recorder;
    } else if (roots.count(f.path)) {
      c.verdict = Verdict::required;
      c.evidence = Evidence::root_rule;
    } else if (readme_included.count(f.path)) {
      c.verdict = Verdict::required;
      c.evidence = Evidence::readme;
    } else {
      c.verdict = Verdict::dangling;
      c.evidence = Evidence::recorder;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace texsan
