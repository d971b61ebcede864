#include "texsan/cli.hpp"

#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "texsan/archive.hpp"
#include "texsan/bench.hpp"
#include "texsan/build.hpp"
#include "texsan/filetypes.hpp"
#include "texsan/metadata.hpp"
#include "texsan/scan.hpp"
#include "texsan/subprocess.hpp"
#include "texsan/verify.hpp"

namespace texsan::cli {

namespace {

void ensure_outside(const fs::path& out, const fs::path& input) {
  std::error_code ec;
  auto canon_in = fs::weakly_canonical(input, ec);
  auto canon_out = fs::weakly_canonical(out, ec);
  auto rel = canon_out.lexically_relative(canon_in);
  std::string r = rel.generic_string();
  if (!r.empty() && r != "." && !starts_with(r, ".."))
    throw Error(Errc::usage_error, "refusing to write inside the input bundle");
  if (canon_out == canon_in)
    throw Error(Errc::usage_error, "output path equals the input path");
}

Severity severity_for_class(SensitiveClass c) {
  switch (c) {
    case SensitiveClass::gps: return Severity::H;
    case SensitiveClass::username:
    case SensitiveClass::email:
    case SensitiveClass::timestamp: return Severity::M;
    default: return Severity::L;
  }
}

std::vector<Finding> metadata_findings(const SubmissionBundle& bundle,
                                       const MetadataCleaner& cleaner,
                                       std::vector<std::string>* warnings) {
  std::vector<Finding> out;
  for (const auto& f : bundle.files) {
    Bytes head = bundle.read(f.path);
    auto type = sniff_file_type(head);
    if (type != FileType::png && type != FileType::jpeg && type != FileType::pdf)
      continue;
    std::vector<MetadataRecord> records;
    try {
      records = cleaner.extract(bundle.staging / f.path);
    } catch (const Error& e) {
      warnings->push_back(std::string("metadata backend unavailable: ") + e.what());
      return out;
    }
    // One finding per sensitive class per file.
    std::map<SensitiveClass, std::vector<std::string>> grouped;
    for (const auto& r : records)
      if (r.sensitive_class != SensitiveClass::none)
        grouped[r.sensitive_class].push_back(r.key + "=" + r.value);
    for (const auto& [cls, keys] : grouped) {
      Finding fd;
      fd.rule = std::string("Metadata: ") + sensitive_class_name(cls);
      fd.file = f.path;
      fd.span = Span{0, 0, 1};
      fd.matched = join(keys, "; ");
      fd.severity = severity_for_class(cls);
      out.push_back(std::move(fd));
    }
  }
  return out;
}

}  // namespace

ScanRun run_scan(const fs::path& input, const Config& config, double timeout,
                 const std::vector<PatternRule>& rules) {
  ScanRun result;
  auto bundle = ingest(input);

  // Classifications give the in_dangling context; scanning still proceeds
  // when the bundle does not compile.
  std::vector<FileClassification> classifications;
  try {
    CompileLimits limits;
    limits.timeout_seconds = timeout;
    BuildRunner runner(config, limits);
    std::vector<BuildRecord> records;
    for (const auto& root : bundle.roots) {
      TempDir scratch("scan");
      auto outcome = runner.compile_all(bundle, root, scratch.path() / "b");
      records.insert(records.end(), outcome.records.begin(), outcome.records.end());
    }
    classifications = classify(bundle, records);
  } catch (const std::exception& e) {
    result.warnings.push_back(std::string("no build classification: ") + e.what());
  }

  // Irrelevant spans give the in_comment context.
  std::map<std::string, std::vector<Span>> spans;
  std::set<std::string> roots(bundle.roots.begin(), bundle.roots.end());
  std::vector<std::string> tex_files;
  for (const auto& f : bundle.files) {
    auto lower = to_lower(f.path);
    for (const char* ext : {".tex", ".ltx", ".latex", ".sty", ".cls", ".bbl"})
      if (ends_with(lower, ext)) tex_files.push_back(f.path);
  }
  auto ctx = build_context(bundle, tex_files);
  for (const auto& path : tex_files) {
    auto sf = SourceFile::from_bytes(path, bundle.read(path));
    if (sf.is_binary()) continue;
    ParseOptions popts;
    popts.seed_macros = ctx.macros;
    popts.seed_flags = ctx.newif_flags;
    popts.comment_envs = ctx.comment_envs;
    auto parsed = parse(sf, popts);
    auto irr = find_irrelevant_spans(sf, parsed, ctx, roots.count(path) > 0);
    auto special = find_special_env_comments(sf, parsed, ctx);
    auto& v = spans[path];
    for (const auto& s : irr) v.push_back(s.span);
    for (const auto& s : special) v.push_back(s.span);
  }

  result.findings = scan(bundle, classifications, spans);
  MetadataCleaner cleaner(config);
  auto meta = metadata_findings(bundle, cleaner, &result.warnings);
  result.findings.insert(result.findings.end(), meta.begin(), meta.end());
  sort_findings(result.findings);
  return result;
}

SanitizationReport run_clean(const CleanInvocation& inv) {
  SanitizationReport report;
  report.tool_version = kToolVersion;
  report.toolchain = inv.config.engine_cmd();
  report.origin = inv.input.string();

  if (!inv.out.empty()) ensure_outside(inv.out, inv.input);

  auto bundle = ingest(inv.input);
  if (!inv.root_override.empty()) {
    if (!bundle.has(inv.root_override))
      throw Error(Errc::usage_error, "--root " + inv.root_override + " not in bundle");
    bundle.roots = {inv.root_override};
  }
  report.bundle_hash_before = bundle.content_hash();
  report.roots = bundle.roots;
  for (const auto& w : bundle.warnings) report.warnings.push_back(w);

  CompileLimits limits;
  limits.timeout_seconds = inv.timeout_seconds;
  limits.max_passes = inv.max_passes;
  BuildRunner runner(inv.config, limits);

  // Fail closed: any compile failure aborts the clean with a breaks verdict
  // and no output bundle.
  std::vector<BuildRecord> records;
  try {
    for (const auto& root : bundle.roots) {
      TempDir scratch("clean");
      auto outcome = runner.compile_all(bundle, root, scratch.path() / "b");
      records.insert(records.end(), outcome.records.begin(), outcome.records.end());
    }
  } catch (const Error& e) {
    report.verification.verdict = CleanOutcome::V::breaks;
    report.verification.detail = std::string(errc_name(e.code())) + ": " + e.what();
    report.verified = true;
    if (!inv.report_path.empty()) save_report(report, inv.report_path);
    throw;
  }

  report.classifications = classify(bundle, records);
  report.plan = plan_clean(bundle, report.classifications, inv.options);
  for (const auto& w : report.plan.warnings) report.warnings.push_back(w);

  auto outcome = apply_plan(bundle, report.plan);

  // Materialize, strip metadata, then verify against the original.
  TempDir staging("texsan-out");
  fs::path out_tmp = staging.path() / "bundle";
  emit_bundle(out_tmp, outcome.files,
              inv.options.normalize_times ? inv.options.times_epoch : -1);

  if (inv.options.strip_metadata) {
    MetadataCleaner cleaner(inv.config);
    for (const auto& [path, bytes] : outcome.files) {
      auto type = sniff_file_type(bytes);
      if (type != FileType::png && type != FileType::jpeg && type != FileType::pdf)
        continue;
      try {
        auto res = cleaner.strip(out_tmp / path);
        if (!res.supported) {
          report.metadata_skipped.push_back(path);
        } else if (!res.removed_keys.empty()) {
          report.metadata_removed[path] = res.removed_keys;
        }
      } catch (const Error& e) {
        report.warnings.push_back(std::string("metadata dimension skipped: ") +
                                  e.what());
        break;
      }
    }
  }
  if (inv.options.normalize_times) {
    normalize_timestamps(out_tmp, inv.options.times_epoch);
    report.timestamps_normalized = true;
    report.times_epoch = inv.options.times_epoch;
  }

  auto sanitized = ingest(out_tmp);
  report.bundle_hash_after = sanitized.content_hash();

  if (inv.verify) {
    Verifier verifier(inv.config, inv.dpi, inv.fuzz);
    report.verification = verifier.judge(bundle, sanitized, runner);
    report.verified = true;
  } else {
    report.verification.verdict = CleanOutcome::V::unverified;
    report.verification.changed_sources =
        report.bundle_hash_before != report.bundle_hash_after;
    report.verified = false;
  }

  if (!inv.out.empty()) {
    if (archive_extension(inv.out)) {
      std::vector<std::pair<std::string, Bytes>> files;
      for (const auto& f : sanitized.files)
        files.emplace_back(f.path, sanitized.read(f.path));
      emit_bundle(inv.out, files,
                  inv.options.normalize_times ? inv.options.times_epoch : -1);
    } else {
      std::error_code ec;
      fs::remove_all(inv.out, ec);
      copy_tree(out_tmp, inv.out);
      if (inv.options.normalize_times)
        normalize_timestamps(inv.out, inv.options.times_epoch);
    }
  }

  if (!inv.report_path.empty()) save_report(report, inv.report_path);
  return report;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"LaTeX submission sanitizer: removes dangling files, embedded "
               "metadata and build-irrelevant content, and proves the result "
               "compiles to a pixel-identical PDF"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "TOML-style key/value config file");

  // clean
  auto* clean = app.add_subcommand("clean", "sanitize a submission bundle");
  std::string clean_input, clean_out, clean_report, clean_root;
  bool keep_comments = false, keep_dangling = false, keep_metadata = false;
  bool strip_times = false, no_verify = false, quiet = false;
  int dpi = 150;
  long fuzz = 0;
  double timeout = 300;
  int jobs = 1;
  clean->add_option("input", clean_input, "bundle directory or archive")->required();
  clean->add_option("--out", clean_out, "output directory or archive")->required();
  clean->add_option("--report", clean_report, "write the JSON report here");
  clean->add_flag("--keep-comments", keep_comments, "keep irrelevant content");
  clean->add_flag("--keep-dangling", keep_dangling, "keep dangling files");
  clean->add_flag("--keep-metadata", keep_metadata, "keep embedded metadata");
  clean->add_flag("--strip-times", strip_times, "normalize file timestamps");
  clean->add_option("--root", clean_root, "override root detection");
  clean->add_option("--timeout", timeout, "compile timeout in seconds");
  clean->add_option("--jobs", jobs, "parallel job limit");
  clean->add_option("--dpi", dpi, "rasterization dpi for verification");
  clean->add_option("--fuzz", fuzz, "differing-pixel tolerance per page");
  clean->add_flag("--no-verify", no_verify,
                  "skip pixel verification (verdict becomes 'unverified')");
  clean->add_flag("--quiet", quiet, "suppress the summary");

  // scan
  auto* scan_cmd = app.add_subcommand("scan", "detect secrets and sensitive patterns");
  std::string scan_input, scan_report, scan_rules;
  bool no_redact = false;
  double scan_timeout = 300;
  scan_cmd->add_option("input", scan_input, "bundle directory or archive")->required();
  scan_cmd->add_option("--report", scan_report, "write findings as JSON lines");
  scan_cmd->add_option("--rules", scan_rules, "extra rule catalog file");
  scan_cmd->add_flag("--no-redact", no_redact, "print full matched secrets");
  scan_cmd->add_option("--timeout", scan_timeout, "compile timeout in seconds");

  // verify
  auto* verify_cmd =
      app.add_subcommand("verify", "compare two PDFs or bundles pixel by pixel");
  std::string verify_a, verify_b;
  int vdpi = 150;
  long vfuzz = 0;
  verify_cmd->add_option("a", verify_a, "PDF or bundle")->required();
  verify_cmd->add_option("b", verify_b, "PDF or bundle")->required();
  verify_cmd->add_option("--dpi", vdpi, "rasterization dpi");
  verify_cmd->add_option("--fuzz", vfuzz, "differing-pixel tolerance per page");

  // bench
  auto* bench_cmd =
      app.add_subcommand("bench", "run the cleaner comparison harness");
  std::string bench_corpus = "tests/corpus/mwe";
  std::string bench_plugins, bench_report, bench_score_dir;
  bench_cmd->add_option("--corpus", bench_corpus, "nine-test MWE corpus directory");
  bench_cmd->add_option("--plugins", bench_plugins, "plugin definition file");
  bench_cmd->add_option("--report", bench_report, "write results as JSON");
  bench_cmd->add_option("--score", bench_score_dir,
                        "also score every bundle under this directory");

  // report
  auto* report_cmd = app.add_subcommand("report", "pretty-print a stored report");
  std::string report_file;
  report_cmd->add_option("file", report_file, "report JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Config config;
    if (!config_path.empty()) config = Config::load(config_path);

    if (*clean) {
      CleanInvocation inv;
      inv.input = clean_input;
      inv.out = clean_out;
      inv.report_path = clean_report;
      inv.options.remove_comments = !keep_comments;
      inv.options.inline_bbl = !keep_comments;
      inv.options.remove_dangling = !keep_dangling;
      inv.options.strip_metadata = !keep_metadata;
      inv.options.normalize_times = strip_times;
      inv.verify = !no_verify;
      inv.dpi = dpi;
      inv.fuzz = fuzz;
      inv.timeout_seconds = timeout;
      inv.jobs = jobs;
      inv.root_override = clean_root;
      inv.quiet = quiet;
      inv.config = config;
      auto report = run_clean(inv);
      if (!quiet) std::cout << report_summary(report);
      if (report.verified &&
          report.verification.verdict == CleanOutcome::V::breaks)
        return 1;
      return 0;
    }

    if (*scan_cmd) {
      std::vector<PatternRule> rules = builtin_rules();
      if (!scan_rules.empty()) {
        auto extra = load_rules(scan_rules);
        rules.insert(rules.end(), extra.begin(), extra.end());
      }
      auto result = run_scan(scan_input, config, scan_timeout, rules);
      std::string jsonl = findings_to_jsonl(result.findings, !no_redact);
      if (!scan_report.empty()) {
        write_file(fs::path(scan_report), jsonl);
      } else {
        std::cout << jsonl;
      }
      int h = 0, m = 0, l = 0;
      for (const auto& f : result.findings) {
        if (f.severity == Severity::H) ++h;
        else if (f.severity == Severity::M) ++m;
        else ++l;
      }
      std::cerr << "findings: " << result.findings.size() << " (H=" << h
                << " M=" << m << " L=" << l << ")\n";
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      return result.findings.empty() ? 0 : 1;
    }

    if (*verify_cmd) {
      Verifier verifier(config, vdpi, vfuzz);
      fs::path a = verify_a, b = verify_b;
      VisualDiff diff;
      if (to_lower(a.extension().string()) == ".pdf" &&
          to_lower(b.extension().string()) == ".pdf") {
        diff = verifier.compare(a, b);
      } else {
        CompileLimits limits;
        BuildRunner runner(config, limits);
        auto ba = ingest(a);
        auto bb = ingest(b);
        TempDir sa("verify-a"), sb("verify-b");
        auto ca = runner.compile_all(ba, ba.roots.front(), sa.path() / "b");
        auto cb = runner.compile_all(bb, bb.roots.front(), sb.path() / "b");
        diff = verifier.compare(ca.pdf, cb.pdf);
      }
      std::cout << "verdict: " << visual_verdict_name(diff.verdict) << "\n";
      for (const auto& p : diff.mismatched_pages)
        std::cout << "page " << (p.page + 1) << ": " << p.differing_pixels
                  << " differing pixels, bbox [" << p.bbox_x0 << "," << p.bbox_y0
                  << " " << p.bbox_x1 << "," << p.bbox_y1 << ")\n";
      if (diff.verdict == VisualDiff::V::identical) return 0;
      return diff.verdict == VisualDiff::V::different ? 1 : 2;
    }

    if (*bench_cmd) {
      Harness harness(config, bench_corpus);
      std::vector<std::pair<std::string, std::vector<TestCaseResult>>> rows;
      std::vector<CleanerPlugin> plugins = {Harness::builtin_plugin(),
                                            Harness::naive_plugin()};
      if (!bench_plugins.empty()) {
        auto extra = Harness::load_plugins(bench_plugins);
        plugins.insert(plugins.end(), extra.begin(), extra.end());
      }
      for (const auto& p : plugins) rows.emplace_back(p.name, harness.run_test_suite(p));
      std::cout << Harness::format_results_table(rows);

      if (!bench_score_dir.empty()) {
        std::vector<fs::path> bundles;
        for (const auto& entry : fs::directory_iterator(bench_score_dir))
          if (entry.is_directory()) bundles.push_back(entry.path());
        std::sort(bundles.begin(), bundles.end());
        for (const auto& p : plugins) {
          auto s = harness.score_corpus(p, bundles);
          std::cout << "\n" << p.name << ": " << s.beneficial << "/" << s.total
                    << " beneficial, " << s.breaks << "/" << s.total << " breaks\n";
        }
      }
      if (!bench_report.empty()) {
        std::string json = "{\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
          json += "  \"" + rows[i].first + "\": [";
          for (std::size_t k = 0; k < rows[i].second.size(); ++k) {
            json += std::string("\"") + test_status_name(rows[i].second[k].status) +
                    "\"";
            if (k + 1 < rows[i].second.size()) json += ", ";
          }
          json += i + 1 < rows.size() ? "],\n" : "]\n";
        }
        json += "}\n";
        write_file(fs::path(bench_report), json);
      }
      return 0;
    }

    if (*report_cmd) {
      auto r = load_report(report_file);
      std::cout << report_summary(r);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "texsan: " << errc_name(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "texsan: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace texsan::cli
