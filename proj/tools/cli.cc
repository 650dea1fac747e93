#include "cli.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "wefix/analyzer.h"
#include "wefix/dialect.h"
#include "wefix/listen_window.h"
#include "wefix/pipeline.h"
#include "wefix/runtime_support.h"
#include "wefix/simulator.h"
#include "wefix/trace_model.h"
#include "wefix/transformer.h"

namespace wefix {
namespace {

namespace fs = std::filesystem;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const fs::path& path, std::string_view data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("cannot write " + path.string());
}

bool IsSourceFile(const fs::path& p) {
  static const std::vector<std::string> kExt = {".js",  ".mjs", ".cjs",
                                                ".ts",  ".jsx", ".tsx"};
  return std::find(kExt.begin(), kExt.end(), p.extension().string()) !=
         kExt.end();
}

// Regular files under |root| in sorted order, skipping dependency and VCS
// directories and |exclude| when it lies inside |root|.
std::vector<fs::path> ListFiles(const fs::path& root, const fs::path& exclude) {
  std::vector<fs::path> files;
  const fs::path ex = fs::weakly_canonical(exclude);
  for (auto it = fs::recursive_directory_iterator(root);
       it != fs::recursive_directory_iterator(); ++it) {
    const fs::path& p = it->path();
    if (it->is_directory()) {
      std::string name = p.filename().string();
      if (name == "node_modules" || name == ".git" ||
          fs::weakly_canonical(p) == ex)
        it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) files.push_back(fs::relative(p, root));
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Runs |fn(i)| for i in [0, n) on up to |jobs| threads.
template <typename Fn>
void ParallelFor(std::size_t n, int jobs, Fn fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

struct FileOutcome {
  std::string summary;
  std::vector<std::string> warnings;
  std::string error;
};

// Subcommands -------------------------------------------------------------------

struct InstrumentArgs {
  std::string dir;
  std::string out;
  std::string framework;
  int jobs = 1;
};

int Instrument(const InstrumentArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path in_root(a.dir), out_root(a.out);
  if (!fs::is_directory(in_root)) throw DataError(a.dir + " is not a directory");
  const Dialect dialect = ParseDialect(a.framework);
  const std::vector<fs::path> files = ListFiles(in_root, out_root);
  std::vector<FileOutcome> outcomes(files.size());

  ParallelFor(files.size(), a.jobs, [&](std::size_t i) {
    const fs::path& rel = files[i];
    FileOutcome& o = outcomes[i];
    std::string text;
    try {
      text = ReadFile(in_root / rel);
    } catch (const std::exception& e) {
      o.error = e.what();
      return;
    }
    std::string result = text;
    if (IsSourceFile(rel) && rel.filename() != kRuntimeFileName) {
      try {
        fs::path up = fs::relative(out_root, (out_root / rel).parent_path());
        InstrumentOptions opts;
        opts.runtime_specifier =
            (up == "." ? std::string("./") : up.generic_string() + "/") +
            std::string(kRuntimeFileName);
        InstrumentResult r =
            InstrumentRecording(text, dialect, rel.generic_string(), opts);
        if (!r.scan.sites.empty()) {
          result = std::move(r.text);
          o.summary = rel.generic_string() + ": " +
                      std::to_string(r.scan.sites.size()) +
                      " command(s) instrumented";
        }
        for (const SkippedConstruct& s : r.scan.skipped)
          o.warnings.push_back(rel.generic_string() + ":" +
                               std::to_string(s.line) + ": skipped: " +
                               s.reason);
      } catch (const std::exception& e) {
        o.error = rel.generic_string() + ": " + e.what();
      }
    }
    try {
      WriteFile(out_root / rel, result);
    } catch (const std::exception& e) {
      if (o.error.empty()) o.error = e.what();
    }
  });

  WriteFile(out_root / kRuntimeFileName, RuntimeHelperSource(dialect));
  bool partial = false;
  for (const FileOutcome& o : outcomes) {
    if (!o.summary.empty()) out << o.summary << "\n";
    for (const std::string& w : o.warnings) err << "warning: " << w << "\n";
    if (!o.error.empty()) err << "error: " << o.error << "\n";
    partial |= !o.warnings.empty() || !o.error.empty();
  }
  return partial ? kExitPartial : kExitOk;
}

struct AnalyzeArgs {
  std::string log;
  std::string baseline;
  std::string out_dir;
  std::int64_t bucket_ms = 100;
  double cv = 0.2;
  std::size_t min_occurrences = 3;
};

int Analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  ParseStats parse_stats;
  const MutationLog log = ReadLogFile(a.log, &parse_stats);
  std::optional<MutationLog> baseline;
  if (!a.baseline.empty()) baseline = ReadLogFile(a.baseline);
  BackgroundConfig bg;
  bg.max_cv = a.cv;
  bg.min_occurrences = a.min_occurrences;
  const PrunedLog pruned = PruneLog(log, baseline ? &*baseline : nullptr, bg);
  const SuiteStats stats = ComputeStats(pruned.log);

  if (parse_stats.skipped_records)
    err << "note: skipped " << parse_stats.skipped_records
        << " record(s) of unknown kind\n";
  for (const CommandSpan& span : log.spans) {
    WindowReplay r = ReplayWindow(span);
    if (r.divergent)
      err << "note: command " << span.cmd_id
          << ": recorded listen window differs from replay by "
          << r.divergence_ms << " ms\n";
  }
  out << FormatStatsTable(log.suite_name, stats);
  std::map<std::string_view, int> by_reason;
  for (const PrunedMutation& p : pruned.pruned) ++by_reason[PruneReasonName(p.reason)];
  out << "pruned " << pruned.pruned.size() << " mutation(s)";
  for (const auto& [reason, n] : by_reason) out << ", " << reason << " " << n;
  out << "\n";

  fs::path dir = a.out_dir.empty() ? fs::path(a.log).parent_path() : fs::path(a.out_dir);
  if (dir.empty()) dir = ".";
  WriteFile(dir / "stats.csv", StatsCsv(log.suite_name, stats));
  WriteFile(dir / "rt_cdf.csv", CdfCsv(RtCdf(pruned.log, a.bucket_ms)));
  WriteFile(dir / "flaky_prone.csv", FlakyProneCsv(pruned.log, stats));
  out << "wrote " << (dir / "stats.csv").string() << ", "
      << (dir / "rt_cdf.csv").string() << ", "
      << (dir / "flaky_prone.csv").string() << "\n";
  return kExitOk;
}

struct FixArgs {
  std::string file;
  std::string log;
  std::string out;
  std::string framework;
  std::string baseline;
  bool dry_run = false;
  std::size_t max_props = kDefaultMaxProps;
  int poll_ms = kDefaultPollMs;
  int timeout_ms = kDefaultTimeoutMs;
  double cv = 0.2;
  std::size_t min_occurrences = 3;
};

int Fix(const FixArgs& a, std::ostream& out, std::ostream& err) {
  if (!a.dry_run && a.out.empty())
    throw CLI::ValidationError("--out", "required unless --dry-run is given");
  const std::string source = ReadFile(a.file);
  const Dialect dialect =
      a.framework.empty() ? DetectDialect(source) : ParseDialect(a.framework);
  const MutationLog log = ReadLogFile(a.log);
  std::optional<MutationLog> baseline;
  if (!a.baseline.empty()) baseline = ReadLogFile(a.baseline);
  FixOptions opts;
  opts.oracle = {a.max_props, a.poll_ms, a.timeout_ms};
  opts.background.max_cv = a.cv;
  opts.background.min_occurrences = a.min_occurrences;
  opts.baseline = baseline ? &*baseline : nullptr;

  const FixResult r = FixSource(source, a.file, dialect, log, opts);
  for (const SkippedConstruct& s : r.scan.skipped)
    err << "warning: " << a.file << ":" << s.line << ": skipped: " << s.reason
        << "\n";
  for (const std::string& note : r.notes) err << "note: " << note << "\n";
  if (a.dry_run) {
    for (const PlannedWait& w : r.waits) {
      out << a.file << ":" << w.site.line << ": wait after " << w.site.name
          << " (command " << w.cmd_id << ")\n";
      std::istringstream lines(w.snippet);
      for (std::string line; std::getline(lines, line);) out << "    " << line << "\n";
    }
    out << r.waits.size() << " wait(s) planned, nothing written\n";
  } else {
    WriteFile(a.out, r.text);
    out << a.out << ": " << r.waits.size() << " wait(s) inserted\n";
  }
  return r.scan.skipped.empty() ? kExitOk : kExitPartial;
}

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string csv;
};

struct SimRun {
  SimConfig config;
  SimSuite suite;
  SimReport report;
};

SimRun RunSimulation(const std::string& config_path,
                     std::optional<std::uint64_t> seed) {
  SimRun run;
  run.config = ParseSimConfig(ReadFile(config_path));
  if (seed) run.config.seed = *seed;
  run.suite = GenCorpus(run.config.corpus, run.config.corpus_seed);
  run.report = Evaluate(run.suite, run.config.strategies, run.config.reruns,
                        run.config.seed);
  return run;
}

int Simulate(const SimulateArgs& a, std::ostream& out, std::ostream&) {
  const SimRun run = RunSimulation(a.config, a.seed);
  out << FormatSimReport(run.report);
  if (!a.csv.empty()) WriteFile(a.csv, SimReportCsv(run.report));
  return kExitOk;
}

struct ReportArgs {
  std::string log;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int Report(const ReportArgs& a, std::ostream& out, std::ostream&) {
  std::ostringstream text;
  if (!a.log.empty()) {
    const MutationLog log = ReadLogFile(a.log);
    const PrunedLog pruned = PruneLog(log, nullptr);
    const SuiteStats stats = ComputeStats(pruned.log);
    text << "## Recorded suite\n\n" << FormatStatsTable(log.suite_name, stats)
         << "\n";
  }
  if (!a.config.empty()) {
    const SimRun run = RunSimulation(a.config, a.seed);
    const MutationLog recorded = RecordLog(run.suite, run.config.seed);
    const SuiteStats sim_stats = ComputeStats(PruneLog(recorded, nullptr).log);
    text << "## Simulated suite\n\n"
         << FormatStatsTable(run.report.suite_name, sim_stats) << "\n"
         << FormatSimReport(run.report);
  }
  if (a.log.empty() && a.config.empty())
    throw CLI::ValidationError("report", "needs --log and/or --config");
  if (a.out.empty()) {
    out << text.str();
  } else {
    WriteFile(a.out, text.str());
    out << "wrote " << a.out << "\n";
  }
  return kExitOk;
}

struct StripArgs {
  std::string path;
  std::string out;
};

int Strip(const StripArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path in(a.path), dest(a.out);
  if (!fs::is_directory(in)) {
    WriteFile(dest, StripHooks(ReadFile(in)));
    out << "wrote " << dest.string() << "\n";
    return kExitOk;
  }
  bool partial = false;
  for (const fs::path& rel : ListFiles(in, dest)) {
    if (rel == fs::path(kRuntimeFileName)) continue;
    std::string text = ReadFile(in / rel);
    if (IsSourceFile(rel)) {
      try {
        text = StripHooks(text);
      } catch (const UnbalancedSentinels& e) {
        err << "error: " << rel.generic_string() << ": " << e.what() << "\n";
        partial = true;
      }
    }
    WriteFile(dest / rel, text);
  }
  return partial ? kExitPartial : kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Find and fix UI-timing flakiness in web e2e tests", "wefix"};
  app.require_subcommand(1);

  InstrumentArgs ia;
  auto* instrument = app.add_subcommand(
      "instrument", "Add mutation-recording hooks to every test file in a directory");
  instrument->add_option("dir", ia.dir, "Test directory")->required();
  instrument->add_option("--framework", ia.framework, "cypress or selenium")
      ->required()
      ->check(CLI::IsMember({"cypress", "selenium", "selenium-webdriver"}));
  instrument->add_option("--out", ia.out, "Output directory")->required();
  instrument->add_option("--jobs", ia.jobs, "Files processed in parallel")
      ->check(CLI::Range(1, 256));

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Report RT statistics of a mutation log");
  analyze->add_option("log", aa.log, "mutation.log")->required();
  analyze->add_option("--baseline", aa.baseline, "Log recorded on the idle page");
  analyze->add_option("--out-dir", aa.out_dir, "Where CSV files go (default: next to the log)");
  analyze->add_option("--bucket-ms", aa.bucket_ms, "CDF bucket width")->check(CLI::Range(1, 60000));
  analyze->add_option("--cv", aa.cv, "Max inter-arrival CV of background mutations")
      ->check(CLI::Range(0.0, 10.0));
  analyze->add_option("--min-occurrences", aa.min_occurrences,
                      "Min repeats of a background signature")
      ->check(CLI::Range(2, 1000));

  FixArgs fa;
  auto* fix = app.add_subcommand("fix", "Insert explicit waits after flaky-prone commands");
  fix->add_option("file", fa.file, "Test file")->required();
  fix->add_option("--log", fa.log, "mutation.log recorded from the file")->required();
  fix->add_option("--out", fa.out, "Output file");
  fix->add_flag("--dry-run", fa.dry_run, "Print the planned waits only");
  fix->add_option("--max-props", fa.max_props, "Properties per oracle")->check(CLI::Range(1, 5));
  fix->add_option("--poll-ms", fa.poll_ms, "Oracle poll interval")->check(CLI::Range(10, 1000));
  fix->add_option("--timeout-ms", fa.timeout_ms, "Oracle timeout")->check(CLI::Range(500, 60000));
  fix->add_option("--framework", fa.framework, "cypress or selenium (default: detect)")
      ->check(CLI::IsMember({"cypress", "selenium", "selenium-webdriver"}));
  fix->add_option("--baseline", fa.baseline, "Log recorded on the idle page");
  fix->add_option("--cv", fa.cv, "Max inter-arrival CV of background mutations")
      ->check(CLI::Range(0.0, 10.0));
  fix->add_option("--min-occurrences", fa.min_occurrences,
                  "Min repeats of a background signature")
      ->check(CLI::Range(2, 1000));

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Evaluate wait strategies on a simulated suite");
  simulate->add_option("--config", sa.config, "Simulation config (JSON)")->required();
  simulate->add_option("--seed", sa.seed, "Evaluation seed (default: config, else 0)");
  simulate->add_option("--csv", sa.csv, "Write the report as CSV");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Summarize a recorded log and a simulation");
  report->add_option("--log", ra.log, "mutation.log");
  report->add_option("--config", ra.config, "Simulation config (JSON)");
  report->add_option("--seed", ra.seed, "Evaluation seed");
  report->add_option("--out", ra.out, "Output file (default: stdout)");

  StripArgs sta;
  auto* strip = app.add_subcommand("strip", "Remove everything wefix inserted");
  strip->add_option("path", sta.path, "File or directory")->required();
  strip->add_option("--out", sta.out, "Output file or directory")->required();

  std::vector<const char*> argv;
  for (const std::string& s : args) argv.push_back(s.c_str());
  if (argv.empty()) argv.push_back("wefix");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0 && e.get_name() != "CallForHelp") err << app.help();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*instrument) return Instrument(ia, out, err);
    if (*analyze) return Analyze(aa, out, err);
    if (*fix) return Fix(fa, out, err);
    if (*simulate) return Simulate(sa, out, err);
    if (*report) return Report(ra, out, err);
    if (*strip) return Strip(sta, out, err);
  } catch (const CLI::Error& e) {
    err << "wefix: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnsupportedDialect& e) {
    err << "wefix: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "wefix: error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace wefix
