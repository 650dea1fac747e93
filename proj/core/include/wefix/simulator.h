// Discrete-event simulation of e2e test runs under random mutation timing,
// used to compare wait strategies by fix rate and run-time overhead.
//
// A command runs for its base duration and then settles. Synchronous
// mutations happen while it runs; asynchronous ones hang off a chain that
// completes D ms after the settle, each at a fixed fraction of D. D is
// resampled for every (test, rerun) pair, identically for all strategies.
// Assertions run right after the wait that follows their command and pass
// iff every mutation they depend on has happened.

#ifndef WEFIX_SIMULATOR_H_
#define WEFIX_SIMULATOR_H_

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wefix/fsm_oracle.h"
#include "wefix/trace_model.h"

namespace wefix {

class BadDistribution : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BadConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Random numbers --------------------------------------------------------------

// Counter-based derivation of independent stream seeds.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

// mt19937_64 with portable conversions; the <random> distributions are not
// reproducible across standard libraries.
class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t Next() { return engine_(); }
  // In [0, 1).
  double Uniform();
  double Normal();
  // In [lo, hi].
  std::int64_t UniformInt(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

struct DelayDistribution {
  enum class Kind { kConstant, kLogNormal, kEmpirical };
  Kind kind = Kind::kConstant;
  double constant_ms = 0.0;
  double median_ms = 0.0;  // log-normal
  double sigma = 0.0;
  // Log-normal samples above this are redrawn.
  std::optional<double> max_ms;
  // Empirical: ascending (value_ms, cumulative probability) knots ending at
  // probability 1; sampled by linear interpolation of the inverse CDF.
  std::vector<std::pair<double, double>> cdf;
};

void ValidateDistribution(const DelayDistribution& dist);
double SampleDelay(const DelayDistribution& dist, SimRng& rng);
// Empirical q-quantile of |n| samples drawn with |seed|.
double SampleQuantile(const DelayDistribution& dist, double q, int n,
                      std::uint64_t seed);

// Suites ----------------------------------------------------------------------

struct SimMutation {
  // Sync: start + round(base * fraction). Async: settle + round(D * fraction).
  double fraction = 1.0;
  // Payload applied to the DOM model; cmd_id, seq and t_ms are filled in
  // when the mutation happens.
  MutationRecord effect;
};

struct SimCommand {
  std::string name = "click";
  std::int64_t base_duration_ms = 1;
  // Set for commands whose mutations happen after the settle.
  std::optional<DelayDistribution> chain_delay;
  std::vector<SimMutation> mutations;  // ascending fractions
};

struct MutationRef {
  int command = 0;
  int mutation = 0;

  friend bool operator==(const MutationRef&, const MutationRef&) = default;
};

struct SimAssertion {
  int after_command = 0;
  std::vector<MutationRef> deps;
};

struct SimTest {
  std::string name;
  std::vector<SimCommand> commands;
  std::vector<SimAssertion> assertions;
};

struct SimSuite {
  std::string name = "sim";
  std::vector<SimTest> tests;
  // 95th percentile of the delay distribution over 10,000 samples.
  double achieved_p95_ms = 0.0;
};

// Throws std::invalid_argument on broken references or durations.
void ValidateSuite(const SimSuite& suite);

struct CorpusSpec {
  int n_tests = 100;
  int min_commands = 3;
  int max_commands = 8;
  std::int64_t min_base_ms = 500;
  std::int64_t max_base_ms = 1500;
  // Command mix; normalized.
  double share_static = 0.55;
  double share_sync = 0.15;
  double share_async = 0.30;
  int min_mutations = 1;
  int max_mutations = 3;
  // Sync mutation fractions are drawn from this range.
  double sync_fraction_lo = 0.8;
  double sync_fraction_hi = 0.98;
  DelayDistribution delay;
};

// The corpus the acceptance run uses: p95 delay just under 2 s and command
// durations on the scale of real browser commands.
CorpusSpec CalibratedCorpusSpec();

SimSuite GenCorpus(const CorpusSpec& spec, std::uint64_t seed);

// Strategies and trials -------------------------------------------------------

struct Strategy {
  enum class Kind { kNone, kImplicit, kExplicit };
  Kind kind = Kind::kNone;
  std::int64_t wait_ms = 0;  // implicit
  OracleOptions oracle;      // explicit

  static Strategy None() { return {}; }
  static Strategy Implicit(std::int64_t w) { return {Kind::kImplicit, w, {}}; }
  static Strategy Explicit(const OracleOptions& o = {}) {
    return {Kind::kExplicit, 0, o};
  }
  std::string Name() const;
};

// "none", "implicit:<ms>", "explicit".
Strategy ParseStrategy(std::string_view text);

// Chain delays for one (test, rerun); nullopt for commands without a chain.
std::vector<std::optional<double>> SampleChainDelays(const SimTest& test,
                                                     std::uint64_t seed,
                                                     std::uint64_t test_index,
                                                     std::uint64_t rerun);

// Rerun index reserved for the recording run that explicit oracles and the
// recorded log are derived from.
inline constexpr std::uint64_t kRecordingRerun = 0xFFFFFFFFull;

// Explicit waits derived from a recording run: one oracle per flaky-prone
// command, nullopt elsewhere.
struct ExplicitPlan {
  std::vector<std::vector<std::optional<WaitOracle>>> oracles;
};

ExplicitPlan PlanExplicitWaits(const SimSuite& suite, std::uint64_t seed,
                               const OracleOptions& options = {});

struct TestOutcome {
  bool passed = true;
  std::int64_t time_ms = 0;
  std::int64_t wait_ms = 0;
  int timeouts = 0;

  friend bool operator==(const TestOutcome&, const TestOutcome&) = default;
};

struct TrialResult {
  std::vector<TestOutcome> tests;
  std::int64_t suite_time_ms = 0;
  int timeouts = 0;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

TestOutcome RunTest(const SimTest& test, const Strategy& strategy,
                    const std::vector<std::optional<double>>& chain_delays,
                    const std::vector<std::optional<WaitOracle>>* oracles);

// One rerun of the whole suite. |plan| is required for explicit strategies
// and built on the fly when null.
TrialResult RunTrial(const SimSuite& suite, const Strategy& strategy,
                     std::uint64_t seed, std::uint64_t rerun,
                     const ExplicitPlan* plan = nullptr);

// The recording run rendered as a mutation log: commands back to back as in
// an uninstrumented run, listen windows replayed over each span.
MutationLog RecordLog(const SimSuite& suite, std::uint64_t seed);

// Evaluation ------------------------------------------------------------------

struct StrategyReport {
  Strategy strategy;
  int tests = 0;
  int c_flaky = 0;  // tests failing at least one rerun without waits
  int fixed = 0;    // c-flaky tests passing every rerun
  double fix_rate = 1.0;
  double pass_all_rate = 1.0;
  double mean_suite_time_ms = 0.0;
  double overhead = 1.0;
  int timeouts = 0;
  std::vector<int> passes_per_test;
};

struct SimReport {
  std::string suite_name;
  std::uint64_t seed = 0;
  int reruns = 10;
  int tests = 0;
  double achieved_p95_ms = 0.0;
  // (uninstrumented time + listen windows) / uninstrumented time.
  double recording_overhead = 1.0;
  std::vector<StrategyReport> strategies;
};

SimReport Evaluate(const SimSuite& suite, const std::vector<Strategy>& strategies,
                   int reruns, std::uint64_t seed);

std::string FormatSimReport(const SimReport& report);
// strategy,overhead,fixed,c_flaky,fix_rate,pass_all_rate,mean_suite_time_ms,timeouts
std::string SimReportCsv(const SimReport& report);

// Configuration -----------------------------------------------------------------

struct SimConfig {
  CorpusSpec corpus;
  std::uint64_t corpus_seed = 0;
  std::vector<Strategy> strategies;
  int reruns = 10;
  std::uint64_t seed = 0;
};

// JSON document; see README for the schema. Throws BadConfig or
// BadDistribution.
SimConfig ParseSimConfig(std::string_view json_text);

}  // namespace wefix

#endif  // WEFIX_SIMULATOR_H_
