#include "texsan/bench.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "texsan/build.hpp"
#include "texsan/bundle.hpp"
#include "texsan/sanitize.hpp"
#include "texsan/subprocess.hpp"
#include "texsan/verify.hpp"

namespace texsan {

using nlohmann::json;

const char* test_status_name(TestStatus s) {
  switch (s) {
    case TestStatus::pass: return "pass";
    case TestStatus::fail: return "fail";
    case TestStatus::crash: return "crash";
  }
  return "?";
}

namespace {

struct Expectation {
  std::string root = "main.tex";
  std::vector<std::string> absent;        // strings that must be gone
  std::vector<std::string> present;       // strings that must survive
  std::vector<std::string> files_absent;  // files that must be removed
  bool pixel = true;
};

Expectation load_expectation(const fs::path& dir) {
  Expectation e;
  fs::path f = dir / "expect.json";
  std::ifstream in(f);
  if (!in) return e;
  json j = json::parse(in);
  e.root = j.value("root", e.root);
  e.absent = j.value("absent", e.absent);
  e.present = j.value("present", e.present);
  e.files_absent = j.value("files_absent", e.files_absent);
  e.pixel = j.value("pixel", true);
  return e;
}

bool tree_contains_string(const fs::path& dir, const std::string& needle) {
  for (auto it = fs::recursive_directory_iterator(dir);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    Bytes b = read_file(it->path());
    if (std::find(b.begin(), b.end(), std::uint8_t(0)) != b.end()) continue;
    std::string text = to_string(b);
    if (text.find(needle) != std::string::npos) return true;
  }
  return false;
}

void make_read_only(const fs::path& dir) {
  for (auto it = fs::recursive_directory_iterator(dir);
       it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_regular_file()) ::chmod(it->path().c_str(), 0444);
  }
}

void make_writable(const fs::path& dir) {
  for (auto it = fs::recursive_directory_iterator(dir);
       it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_regular_file()) ::chmod(it->path().c_str(), 0644);
  }
}

std::string tree_hash(const fs::path& dir) {
  std::vector<std::string> entries;
  for (auto it = fs::recursive_directory_iterator(dir);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    entries.push_back(fs::relative(it->path(), dir).generic_string() + ":" +
                      sha256_hex(read_file(it->path())));
  }
  std::sort(entries.begin(), entries.end());
  return sha256_hex(join(entries, "\n"));
}

}  // namespace

CleanerPlugin Harness::builtin_plugin() {
  CleanerPlugin p;
  p.name = "texsan";
  p.invoke_cmd = find_bundled_tool("texsan") +
                 " clean {input_dir} --out {output_dir} --no-verify --quiet";
  return p;
}

CleanerPlugin Harness::naive_plugin() {
  CleanerPlugin p;
  p.name = "naiveclean";
  p.invoke_cmd = find_bundled_tool("naiveclean") + " {input_dir} {output_dir}";
  return p;
}

std::vector<CleanerPlugin> Harness::load_plugins(const fs::path& file) {
  Config c = Config::load(file);
  std::map<std::string, CleanerPlugin> by_name;
  for (const auto& [key, value] : c.values()) {
    if (!starts_with(key, "plugin.")) continue;
    auto rest = key.substr(7);
    auto dot = rest.rfind('.');
    if (dot == std::string::npos) continue;
    std::string name = rest.substr(0, dot);
    std::string field = rest.substr(dot + 1);
    auto& p = by_name[name];
    p.name = name;
    if (field == "cmd") p.invoke_cmd = value;
    if (field == "needs_root") p.needs_root_hint = value == "true";
  }
  std::vector<CleanerPlugin> out;
  for (auto& [name, p] : by_name) {
    (void)name;
    if (!p.invoke_cmd.empty()) out.push_back(p);
  }
  return out;
}

bool Harness::run_plugin(const CleanerPlugin& plugin, const fs::path& input,
                         const fs::path& output, std::string* fail_note) const {
  if (plugin.invoke_cmd.empty())
    throw Error(Errc::plugin_missing, plugin.name + ": no command configured");

  std::string root_hint;
  if (plugin.needs_root_hint) {
    try {
      auto b = ingest(input);
      if (!b.roots.empty()) root_hint = b.roots.front();
    } catch (const Error&) {
    }
  }
  auto cmd = expand_placeholders(plugin.invoke_cmd,
                                 {{"input_dir", input.string()},
                                  {"output_dir", output.string()},
                                  {"root", root_hint}});
  auto argv = split_command(cmd);
  std::error_code ec;
  if (!argv.empty() && argv[0].find('/') != std::string::npos &&
      !fs::exists(fs::path(argv[0]), ec))
    throw Error(Errc::plugin_missing, plugin.name + ": " + argv[0] + " not found");

  RunOptions opts;
  opts.timeout_seconds = 300;
  auto res = run_process(argv, opts);
  if (res.exit_code == 127)
    throw Error(Errc::plugin_missing, plugin.name + ": command not found");
  if (res.exit_code != 0 || res.timed_out) {
    *fail_note = "plugin exited " + std::to_string(res.exit_code);
    return false;
  }
  if (!fs::exists(output, ec) || fs::is_empty(output, ec)) {
    *fail_note = "plugin produced no output";
    return false;
  }
  return true;
}

std::vector<TestCaseResult> Harness::run_test_suite(
    const CleanerPlugin& plugin) const {
  std::vector<TestCaseResult> results;
  for (int id = 1; id <= 9; ++id) {
    fs::path case_dir = corpus_ / ("t" + std::to_string(id));
    TestCaseResult r;
    r.id = id;
    std::error_code ec;
    if (!fs::is_directory(case_dir, ec)) {
      r.status = TestStatus::crash;
      r.note = "missing corpus case";
      results.push_back(r);
      continue;
    }
    Expectation expect = load_expectation(case_dir);

    TempDir scratch("mwe");
    fs::path input = scratch.path() / "in";
    fs::path output = scratch.path() / "out";
    copy_tree(case_dir, input);
    fs::remove(input / "expect.json");
    make_read_only(input);

    std::string note;
    std::string before = tree_hash(input);
    bool ran = false;
    try {
      ran = run_plugin(plugin, input, output, &note);
    } catch (const Error& e) {
      if (e.code() == Errc::plugin_missing) throw;
      note = e.what();
    }
    make_writable(input);
    if (before != tree_hash(input)) {
      r.status = TestStatus::crash;
      r.note = "plugin modified the input corpus";
      results.push_back(r);
      continue;
    }
    if (!ran) {
      r.status = TestStatus::crash;
      r.note = note;
      results.push_back(r);
      continue;
    }

    r.status = TestStatus::pass;
    for (const auto& s : expect.absent) {
      if (tree_contains_string(output, s)) {
        r.status = TestStatus::fail;
        r.note = "kept: " + s;
        break;
      }
    }
    if (r.status == TestStatus::pass) {
      for (const auto& s : expect.present) {
        if (!tree_contains_string(output, s)) {
          r.status = TestStatus::fail;
          r.note = "lost: " + s;
          break;
        }
      }
    }
    if (r.status == TestStatus::pass) {
      for (const auto& f : expect.files_absent) {
        std::error_code fec;
        if (fs::exists(output / f, fec)) {
          r.status = TestStatus::fail;
          r.note = "file kept: " + f;
          break;
        }
      }
    }
    if (r.status == TestStatus::pass && expect.pixel) {
      try {
        auto orig = ingest(input);
        auto cleaned = ingest(output);
        BuildRunner runner(config_);
        Verifier verifier(config_);
        auto outcome = verifier.judge(orig, cleaned, runner);
        if (outcome.verdict == CleanOutcome::V::breaks) {
          r.status = TestStatus::fail;
          r.note = "breaks: " + outcome.detail;
        }
      } catch (const std::exception& e) {
        r.status = TestStatus::fail;
        r.note = e.what();
      }
    }
    results.push_back(r);
  }
  return results;
}

ScoreSummary Harness::score_corpus(const CleanerPlugin& plugin,
                                   const std::vector<fs::path>& bundles) const {
  ScoreSummary sum;
  for (const auto& bundle_dir : bundles) {
    ++sum.total;
    TempDir scratch("score");
    fs::path input = scratch.path() / "in";
    fs::path output = scratch.path() / "out";
    copy_tree(bundle_dir, input);
    make_read_only(input);

    std::string note;
    bool ran = false;
    try {
      ran = run_plugin(plugin, input, output, &note);
    } catch (const Error& e) {
      if (e.code() == Errc::plugin_missing) throw;
    }
    make_writable(input);
    if (!ran) {
      ++sum.breaks;
      continue;
    }

    try {
      auto orig = ingest(input);
      auto cleaned = ingest(output);
      BuildRunner runner(config_);
      Verifier verifier(config_);
      auto outcome = verifier.judge(orig, cleaned, runner);
      switch (outcome.verdict) {
        case CleanOutcome::V::beneficial: ++sum.beneficial; break;
        case CleanOutcome::V::neutral: ++sum.neutral; break;
        default: ++sum.breaks; break;
      }

      // Over/under-removal against the recorder-based oracle (the same
      // classification the sanitizer itself uses, never re-derived).
      TempDir cscratch("oracle");
      auto rec = runner.compile_all(orig, orig.roots.front(), cscratch.path() / "b");
      auto classifications = classify(orig, rec.records);
      std::set<std::string> dangling;
      for (const auto& c : classifications)
        if (c.verdict == Verdict::dangling) dangling.insert(c.path);
      std::set<std::string> removed;
      for (const auto& f : orig.files)
        if (!cleaned.has(f.path)) removed.insert(f.path);
      int over = 0, under = 0;
      for (const auto& p : removed)
        if (!dangling.count(p)) ++over;
      for (const auto& p : dangling)
        if (!removed.count(p)) ++under;
      ++sum.over_removal_hist[over];
      ++sum.under_removal_hist[under];
    } catch (const std::exception&) {
      ++sum.breaks;
    }
  }
  return sum;
}

std::string Harness::format_results_table(
    const std::vector<std::pair<std::string, std::vector<TestCaseResult>>>& rows) {
  std::ostringstream os;
  os << "Comment cleanup tests: 1 inline comment, 2 escaped percent, 3 comment\n"
        "environment, 4 retain special environments, 5 out-of-document, 6\n"
        "iffalse/if0, 7 custom if, 8 no-arg command cleaning, 9 bbl support.\n\n";
  os << "tool                 |";
  for (int i = 1; i <= 9; ++i) os << " " << i << " ";
  os << "\n---------------------+---------------------------\n";
  for (const auto& [name, results] : rows) {
    os << name;
    for (std::size_t i = name.size(); i < 21; ++i) os << ' ';
    os << "|";
    for (const auto& r : results) {
      const char* mark = r.status == TestStatus::pass   ? " + "
                         : r.status == TestStatus::fail ? " x "
                                                        : " ! ";
      os << mark;
    }
    os << "\n";
  }
  os << "\n(+ cleans successfully, x unsuccessful, ! tool crashed)\n";
  return os.str();
}

}  // namespace texsan
