#include "wefix/analyzer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

namespace wefix {

namespace {

using Signature = std::tuple<std::string, MutationKind, std::string>;

Signature SignatureOf(const MutationRecord& m) {
  return {m.target.xpath, m.kind,
          m.attr_change ? m.attr_change->name : std::string()};
}

std::int64_t RelativeTime(const MutationLog& log, std::size_t span_index,
                          const MutationRecord& m) {
  if (span_index + 1 < log.spans.size())
    return m.t_ms - log.spans[span_index + 1].start_ms;
  return m.t_ms - log.spans[span_index].settle_ms;
}

std::int64_t BucketUpperBound(std::int64_t rt, std::int64_t bucket_ms) {
  std::int64_t q = rt / bucket_ms;
  if (rt % bucket_ms > 0) ++q;
  return q * bucket_ms;
}

std::string FormatFixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string OptionalCell(const std::optional<double>& v, int digits) {
  return v ? FormatFixed(*v, digits) : std::string();
}

}  // namespace

std::string_view PruneReasonName(PruneReason reason) {
  switch (reason) {
    case PruneReason::kOutsideBody:
      return "outside_body";
    case PruneReason::kNoCssEffect:
      return "no_css_effect";
    case PruneReason::kInvisibleTarget:
      return "invisible_target";
    case PruneReason::kBackground:
      return "background";
  }
  return "background";
}

PruneResult PruneGuiIrrelevant(std::span<const MutationRecord> mutations) {
  PruneResult out;
  for (const MutationRecord& m : mutations) {
    if (!m.in_body) {
      out.pruned.push_back({m, PruneReason::kOutsideBody});
    } else if (!m.css_effective) {
      out.pruned.push_back({m, PruneReason::kNoCssEffect});
    } else if (!m.visible) {
      out.pruned.push_back({m, PruneReason::kInvisibleTarget});
    } else {
      out.kept.push_back(m);
    }
  }
  return out;
}

std::set<MutationId> DetectBackground(const MutationLog& log,
                                      const MutationLog* baseline,
                                      const BackgroundConfig& config) {
  std::set<Signature> idle;
  if (baseline) {
    for (const CommandSpan& span : baseline->spans)
      for (const MutationRecord& m : span.mutations) idle.insert(SignatureOf(m));
  }

  std::map<Signature, std::vector<const MutationRecord*>> groups;
  for (const CommandSpan& span : log.spans)
    for (const MutationRecord& m : span.mutations)
      groups[SignatureOf(m)].push_back(&m);

  std::set<MutationId> out;
  for (auto& [sig, members] : groups) {
    bool background = idle.count(sig) > 0;
    if (!background && members.size() >= config.min_occurrences &&
        members.size() >= 2) {
      std::stable_sort(members.begin(), members.end(),
                       [](const MutationRecord* a, const MutationRecord* b) {
                         return a->t_ms < b->t_ms;
                       });
      std::vector<double> gaps;
      for (std::size_t i = 1; i < members.size(); ++i)
        gaps.push_back(static_cast<double>(members[i]->t_ms -
                                           members[i - 1]->t_ms));
      double mean = 0.0;
      for (double g : gaps) mean += g;
      mean /= static_cast<double>(gaps.size());
      if (mean > 0.0) {
        double var = 0.0;
        for (double g : gaps) var += (g - mean) * (g - mean);
        var /= static_cast<double>(gaps.size());
        background = std::sqrt(var) / mean < config.max_cv;
      }
    }
    if (background)
      for (const MutationRecord* m : members) out.insert(IdOf(*m));
  }
  return out;
}

PrunedLog PruneLog(const MutationLog& log, const MutationLog* baseline,
                   const BackgroundConfig& config) {
  std::set<MutationId> background = DetectBackground(log, baseline, config);
  PrunedLog out;
  out.log = log;
  for (CommandSpan& span : out.log.spans) {
    PruneResult gui = PruneGuiIrrelevant(span.mutations);
    span.mutations.clear();
    for (PrunedMutation& p : gui.pruned) out.pruned.push_back(std::move(p));
    for (MutationRecord& m : gui.kept) {
      if (background.count(IdOf(m))) {
        out.pruned.push_back({std::move(m), PruneReason::kBackground});
      } else {
        span.mutations.push_back(std::move(m));
      }
    }
  }
  return out;
}

bool ClassifyFlakyProne(const CommandSpan& span,
                        std::span<const MutationRecord> kept) {
  return std::any_of(kept.begin(), kept.end(), [&](const MutationRecord& m) {
    return m.t_ms > span.settle_ms;
  });
}

SuiteStats ComputeStats(const MutationLog& log) {
  if (log.spans.empty()) throw EmptyLog("log has no commands");
  SuiteStats stats;
  stats.command_count = log.spans.size();

  double rt_sum = 0.0;
  double latest_sum = 0.0;
  std::size_t with_mutations = 0;
  std::size_t flaky = 0;
  for (std::size_t i = 0; i < log.spans.size(); ++i) {
    const CommandSpan& span = log.spans[i];
    CommandStats cmd;
    cmd.cmd_id = span.cmd_id;
    cmd.kept_mutations = span.mutations.size();
    for (const MutationRecord& m : span.mutations) {
      std::int64_t rt = RelativeTime(log, i, m);
      rt_sum += static_cast<double>(rt);
      cmd.latest_rt_ms =
          cmd.latest_rt_ms ? std::max(*cmd.latest_rt_ms, rt) : rt;
    }
    stats.mutation_count += span.mutations.size();
    if (cmd.latest_rt_ms) {
      latest_sum += static_cast<double>(*cmd.latest_rt_ms);
      ++with_mutations;
    }
    cmd.flaky_prone = ClassifyFlakyProne(span, span.mutations);
    if (cmd.flaky_prone) ++flaky;
    stats.per_command.push_back(cmd);
  }
  if (stats.mutation_count > 0)
    stats.avg_rt_ms = rt_sum / static_cast<double>(stats.mutation_count);
  if (with_mutations > 0)
    stats.avg_latest_rt_ms = latest_sum / static_cast<double>(with_mutations);
  stats.pct_flaky_prone =
      static_cast<double>(flaky) / static_cast<double>(stats.command_count);
  return stats;
}

std::vector<std::int64_t> RelativeTimes(const MutationLog& log) {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < log.spans.size(); ++i)
    for (const MutationRecord& m : log.spans[i].mutations)
      out.push_back(RelativeTime(log, i, m));
  return out;
}

std::vector<CdfPoint> RtCdf(const MutationLog& log, std::int64_t bucket_ms) {
  if (bucket_ms <= 0) throw std::invalid_argument("bucket_ms must be positive");
  std::vector<std::int64_t> rts = RelativeTimes(log);
  if (rts.empty()) throw EmptyLog("log has no mutations");

  std::map<std::int64_t, std::size_t> counts;
  for (std::int64_t rt : rts) ++counts[BucketUpperBound(rt, bucket_ms)];

  std::vector<CdfPoint> out;
  std::size_t seen = 0;
  const double total = static_cast<double>(rts.size());
  std::int64_t first = counts.begin()->first;
  std::int64_t last = counts.rbegin()->first;
  for (std::int64_t ub = first; ub <= last; ub += bucket_ms) {
    auto it = counts.find(ub);
    if (it != counts.end()) seen += it->second;
    out.push_back({ub, seen == rts.size() ? 1.0 : seen / total});
  }
  return out;
}

double RtFractionAtMost(const MutationLog& log, std::int64_t ms) {
  std::vector<std::int64_t> rts = RelativeTimes(log);
  if (rts.empty()) throw EmptyLog("log has no mutations");
  auto n = std::count_if(rts.begin(), rts.end(),
                         [&](std::int64_t rt) { return rt <= ms; });
  return static_cast<double>(n) / static_cast<double>(rts.size());
}

std::string FormatStatsTable(const std::string& suite, const SuiteStats& stats) {
  auto cell = [](const std::optional<double>& v) {
    return v ? FormatFixed(*v, 0) : std::string("-");
  };
  char buf[256];
  std::ostringstream out;
  std::snprintf(buf, sizeof buf, "%-32s %10s %18s %14s\n", "Suite",
                "avg RT(ms)", "avg latest RT(ms)", "%flaky-prone");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-32s %10s %18s %13.1f%%\n", suite.c_str(),
                cell(stats.avg_rt_ms).c_str(),
                cell(stats.avg_latest_rt_ms).c_str(),
                stats.pct_flaky_prone * 100.0);
  out << buf;
  std::snprintf(buf, sizeof buf, "%zu commands, %zu kept mutations\n",
                stats.command_count, stats.mutation_count);
  out << buf;
  return out.str();
}

std::string StatsCsv(const std::string& suite, const SuiteStats& stats) {
  std::ostringstream out;
  out << "suite,commands,mutations,avg_rt_ms,avg_latest_rt_ms,pct_flaky_prone\n";
  out << suite << ',' << stats.command_count << ',' << stats.mutation_count
      << ',' << OptionalCell(stats.avg_rt_ms, 3) << ','
      << OptionalCell(stats.avg_latest_rt_ms, 3) << ','
      << FormatFixed(stats.pct_flaky_prone, 6) << '\n';
  return out.str();
}

std::string CdfCsv(std::span<const CdfPoint> cdf) {
  std::ostringstream out;
  out << "upper_bound_ms,cumulative_fraction\n";
  for (const CdfPoint& p : cdf)
    out << p.upper_bound_ms << ',' << FormatFixed(p.cumulative_fraction, 6)
        << '\n';
  return out.str();
}

std::string FlakyProneCsv(const MutationLog& log, const SuiteStats& stats) {
  std::ostringstream out;
  out << "cmd_id,name,loc,kept_mutations,latest_rt_ms,flaky_prone\n";
  for (std::size_t i = 0; i < stats.per_command.size(); ++i) {
    const CommandStats& c = stats.per_command[i];
    const CommandSpan& span = log.spans[i];
    out << c.cmd_id << ',' << span.name << ','
        << FormatSourceLoc(span.source_loc) << ',' << c.kept_mutations << ','
        << (c.latest_rt_ms ? std::to_string(*c.latest_rt_ms) : std::string())
        << ',' << (c.flaky_prone ? "true" : "false") << '\n';
  }
  return out.str();
}

}  // namespace wefix
