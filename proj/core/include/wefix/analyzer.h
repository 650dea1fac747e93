// Mutation pruning, flaky-prone classification and suite statistics.
//
// RT (relative time) of a mutation owned by command k is its time minus the
// start of command k+1; negative values mean the mutation landed before the
// next command began. The last command has no successor, so its mutations
// are measured against its own settle time.

#ifndef WEFIX_ANALYZER_H_
#define WEFIX_ANALYZER_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wefix/trace_model.h"

namespace wefix {

enum class PruneReason {
  kOutsideBody,
  kNoCssEffect,
  kInvisibleTarget,
  kBackground,
};

std::string_view PruneReasonName(PruneReason reason);

struct PrunedMutation {
  MutationRecord record;
  PruneReason reason = PruneReason::kOutsideBody;
};

struct PruneResult {
  std::vector<MutationRecord> kept;
  std::vector<PrunedMutation> pruned;
};

// Drops mutations that cannot affect what the user sees. Checks run in the
// order outside-body, no-CSS-effect, invisible-target; the first match is
// the recorded reason.
PruneResult PruneGuiIrrelevant(std::span<const MutationRecord> mutations);

struct BackgroundConfig {
  std::size_t min_occurrences = 3;
  // Coefficient of variation of inter-arrival times below which a repeated
  // signature is considered periodic.
  double max_cv = 0.2;
};

// A mutation is background when its (xpath, kind, attribute) signature also
// occurs in |baseline| (a recording of the idle page), or when at least
// min_occurrences mutations in |log| share the signature with near-constant
// spacing.
std::set<MutationId> DetectBackground(const MutationLog& log,
                                      const MutationLog* baseline,
                                      const BackgroundConfig& config = {});

struct PrunedLog {
  // Same spans as the input, holding only kept mutations.
  MutationLog log;
  std::vector<PrunedMutation> pruned;
};

// GUI-irrelevance pruning followed by background removal.
PrunedLog PruneLog(const MutationLog& log, const MutationLog* baseline,
                   const BackgroundConfig& config = {});

// True iff some kept mutation happens strictly after the command settled.
bool ClassifyFlakyProne(const CommandSpan& span,
                        std::span<const MutationRecord> kept);

struct CommandStats {
  std::uint32_t cmd_id = 0;
  std::size_t kept_mutations = 0;
  std::optional<std::int64_t> latest_rt_ms;
  bool flaky_prone = false;
};

struct SuiteStats {
  std::size_t command_count = 0;
  std::size_t mutation_count = 0;
  // Means are absent when no command has a kept mutation.
  std::optional<double> avg_rt_ms;
  std::optional<double> avg_latest_rt_ms;
  double pct_flaky_prone = 0.0;  // fraction in [0, 1]
  std::vector<CommandStats> per_command;
};

class EmptyLog : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// |log| is expected to be pruned already.
SuiteStats ComputeStats(const MutationLog& log);

// RT of every mutation in log order.
std::vector<std::int64_t> RelativeTimes(const MutationLog& log);

struct CdfPoint {
  std::int64_t upper_bound_ms = 0;
  double cumulative_fraction = 0.0;
};

// Cumulative share of mutations with RT <= upper bound, one point per bucket
// from the lowest to the highest occupied bucket. The last point is 1.0.
std::vector<CdfPoint> RtCdf(const MutationLog& log, std::int64_t bucket_ms);

// Share of mutations with RT <= |ms|.
double RtFractionAtMost(const MutationLog& log, std::int64_t ms);

// Report rendering. Tables follow the per-suite row shape
// (suite, avg RT, avg latest RT, %flaky-prone).
std::string FormatStatsTable(const std::string& suite, const SuiteStats& stats);
std::string StatsCsv(const std::string& suite, const SuiteStats& stats);
std::string CdfCsv(std::span<const CdfPoint> cdf);
std::string FlakyProneCsv(const MutationLog& log, const SuiteStats& stats);

}  // namespace wefix

#endif  // WEFIX_ANALYZER_H_
