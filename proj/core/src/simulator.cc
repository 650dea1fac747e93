#include "wefix/simulator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <queue>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "wefix/analyzer.h"
#include "wefix/listen_window.h"

namespace wefix {
namespace {

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::int64_t RoundMs(double ms) { return std::llround(ms); }

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t a,
                         std::uint64_t b) {
  return SplitMix(SplitMix(SplitMix(seed) ^ a) ^ b);
}

double SimRng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SimRng::Normal() {
  if (spare_normal_) {
    double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  double u1 = 1.0 - Uniform();  // (0, 1]
  double u2 = Uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(a);
  return r * std::cos(a);
}

std::int64_t SimRng::UniformInt(std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  // Rejection keeps the draw unbiased.
  std::uint64_t limit = span == 0 ? 0 : (~std::uint64_t{0} / span) * span;
  std::uint64_t x;
  do {
    x = engine_();
  } while (limit != 0 && x >= limit);
  return lo + static_cast<std::int64_t>(span == 0 ? x : x % span);
}

// Distributions ------------------------------------------------------------------

void ValidateDistribution(const DelayDistribution& d) {
  using Kind = DelayDistribution::Kind;
  switch (d.kind) {
    case Kind::kConstant:
      if (!(d.constant_ms >= 0.0) || !std::isfinite(d.constant_ms))
        throw BadDistribution("constant delay must be finite and >= 0");
      return;
    case Kind::kLogNormal:
      if (!(d.median_ms > 0.0) || !std::isfinite(d.median_ms))
        throw BadDistribution("log-normal median must be > 0");
      if (!(d.sigma >= 0.0) || !std::isfinite(d.sigma))
        throw BadDistribution("log-normal sigma must be >= 0");
      if (d.max_ms && !(*d.max_ms >= d.median_ms * 0.5))
        throw BadDistribution("log-normal max_ms leaves too little mass");
      return;
    case Kind::kEmpirical: {
      if (d.cdf.empty()) throw BadDistribution("empirical CDF has no knots");
      double prev_v = 0.0, prev_p = 0.0;
      for (const auto& [v, p] : d.cdf) {
        if (!(v >= prev_v) || !(p >= prev_p) || p > 1.0 || !std::isfinite(v))
          throw BadDistribution(
              "empirical CDF knots must be non-negative and non-decreasing");
        prev_v = v;
        prev_p = p;
      }
      if (prev_p != 1.0)
        throw BadDistribution("empirical CDF must end at probability 1");
      return;
    }
  }
}

double SampleDelay(const DelayDistribution& d, SimRng& rng) {
  using Kind = DelayDistribution::Kind;
  switch (d.kind) {
    case Kind::kConstant:
      return d.constant_ms;
    case Kind::kLogNormal:
      while (true) {
        double x = d.median_ms * std::exp(d.sigma * rng.Normal());
        if (!d.max_ms || x <= *d.max_ms) return x;
      }
    case Kind::kEmpirical: {
      double u = rng.Uniform();
      double prev_v = 0.0, prev_p = 0.0;
      for (const auto& [v, p] : d.cdf) {
        if (u < p) {
          double span = p - prev_p;
          return span > 0 ? prev_v + (v - prev_v) * (u - prev_p) / span : v;
        }
        prev_v = v;
        prev_p = p;
      }
      return d.cdf.back().first;
    }
  }
  return 0.0;
}

double SampleQuantile(const DelayDistribution& dist, double q, int n,
                      std::uint64_t seed) {
  ValidateDistribution(dist);
  if (n <= 0) return 0.0;
  SimRng rng(seed);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (double& x : xs) x = SampleDelay(dist, rng);
  std::sort(xs.begin(), xs.end());
  std::size_t k = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(n)));
  return xs[std::clamp<std::size_t>(k, 1, xs.size()) - 1];
}

// Suites --------------------------------------------------------------------------

void ValidateSuite(const SimSuite& suite) {
  for (const SimTest& test : suite.tests) {
    const int n = static_cast<int>(test.commands.size());
    for (const SimCommand& c : test.commands) {
      if (c.base_duration_ms <= 0)
        throw std::invalid_argument(test.name + ": base duration must be > 0");
      if (c.chain_delay) ValidateDistribution(*c.chain_delay);
      double prev = -1.0;
      for (const SimMutation& m : c.mutations) {
        if (m.fraction < 0.0 || m.fraction > 1.0 || m.fraction < prev)
          throw std::invalid_argument(
              test.name + ": mutation fractions must ascend within [0, 1]");
        prev = m.fraction;
      }
    }
    for (const SimAssertion& a : test.assertions) {
      if (a.after_command < 0 || a.after_command >= n)
        throw std::invalid_argument(test.name + ": assertion position out of range");
      for (const MutationRef& r : a.deps) {
        if (r.command < 0 || r.command > a.after_command ||
            r.mutation < 0 ||
            r.mutation >= static_cast<int>(test.commands[r.command].mutations.size()))
          throw std::invalid_argument(test.name +
                                      ": assertion depends on a later or "
                                      "unknown mutation");
      }
    }
  }
}

CorpusSpec CalibratedCorpusSpec() {
  CorpusSpec spec;
  spec.n_tests = 1000;
  spec.delay.kind = DelayDistribution::Kind::kLogNormal;
  spec.delay.median_ms = 850.0;
  spec.delay.sigma = 0.5;
  spec.delay.max_ms = 2000.0;
  return spec;
}

namespace {

MutationRecord MakeEffect(int test, int command, int index) {
  MutationRecord r;
  r.target.xpath = "/html/body/div[" + std::to_string(test + 1) +
                   "]/section[" + std::to_string(command + 1) + "]/p[" +
                   std::to_string(index + 1) + "]";
  switch (index % 3) {
    case 0:
      r.kind = MutationKind::kCharacterData;
      r.text_change = TextChange{"", "ready-" + std::to_string(command + 1) +
                                         "-" + std::to_string(index + 1)};
      break;
    case 1:
      r.kind = MutationKind::kAttributes;
      r.attr_change = AttrChange{"class", std::nullopt, "done"};
      break;
    default:
      r.kind = MutationKind::kChildList;
      r.child_change = ChildChange{1, 0, 1};
      break;
  }
  return r;
}

}  // namespace

SimSuite GenCorpus(const CorpusSpec& spec, std::uint64_t seed) {
  ValidateDistribution(spec.delay);
  if (spec.n_tests < 0 || spec.min_commands < 1 ||
      spec.max_commands < spec.min_commands || spec.min_base_ms < 1 ||
      spec.max_base_ms < spec.min_base_ms || spec.min_mutations < 1 ||
      spec.max_mutations < spec.min_mutations ||
      spec.sync_fraction_lo < 0.0 || spec.sync_fraction_hi > 1.0 ||
      spec.sync_fraction_hi < spec.sync_fraction_lo)
    throw BadConfig("corpus ranges are inconsistent");
  const double total = spec.share_static + spec.share_sync + spec.share_async;
  if (spec.share_static < 0 || spec.share_sync < 0 || spec.share_async < 0 ||
      !(total > 0))
    throw BadConfig("command mix shares must be >= 0 with a positive sum");

  static constexpr std::string_view kNames[] = {"click", "sendKeys", "click",
                                                "submit"};
  SimSuite suite;
  suite.name = "sim";
  suite.tests.reserve(static_cast<std::size_t>(spec.n_tests));
  for (int t = 0; t < spec.n_tests; ++t) {
    SimRng rng(DeriveSeed(seed, static_cast<std::uint64_t>(t), 0xC0));
    SimTest test;
    test.name = "t" + std::to_string(t + 1);
    const int n = static_cast<int>(rng.UniformInt(spec.min_commands, spec.max_commands));
    for (int c = 0; c < n; ++c) {
      SimCommand cmd;
      cmd.name = std::string(kNames[rng.UniformInt(0, 3)]);
      cmd.base_duration_ms = rng.UniformInt(spec.min_base_ms, spec.max_base_ms);
      const double u = rng.Uniform() * total;
      if (u >= spec.share_static) {
        const bool async = u >= spec.share_static + spec.share_sync;
        const int m = static_cast<int>(rng.UniformInt(spec.min_mutations, spec.max_mutations));
        std::vector<double> fractions;
        for (int i = 0; i < m; ++i) {
          fractions.push_back(
              async ? (i + 1 == m ? 1.0 : rng.Uniform())
                    : spec.sync_fraction_lo +
                          (spec.sync_fraction_hi - spec.sync_fraction_lo) *
                              rng.Uniform());
        }
        std::sort(fractions.begin(), fractions.end());
        for (int i = 0; i < m; ++i)
          cmd.mutations.push_back({fractions[i], MakeEffect(t, c, i)});
        if (async) cmd.chain_delay = spec.delay;
      }
      test.commands.push_back(std::move(cmd));
    }
    // One assertion per mutating command on its last mutation, sometimes a
    // command or two later, sometimes also checking an earlier command.
    for (int c = 0; c < n; ++c) {
      const auto& muts = test.commands[c].mutations;
      if (muts.empty()) continue;
      double u = rng.Uniform();
      int gap = u < 0.7 ? 0 : u < 0.9 ? 1 : 2;
      SimAssertion a;
      a.after_command = std::min(n - 1, c + gap);
      a.deps.push_back({c, static_cast<int>(muts.size()) - 1});
      if (rng.Uniform() < 0.3) {
        int other = static_cast<int>(rng.UniformInt(0, c));
        const auto& om = test.commands[other].mutations;
        if (!om.empty() && other != c)
          a.deps.push_back(
              {other, static_cast<int>(rng.UniformInt(0, static_cast<std::int64_t>(om.size()) - 1))});
      }
      test.assertions.push_back(std::move(a));
    }
    suite.tests.push_back(std::move(test));
  }
  suite.achieved_p95_ms =
      SampleQuantile(spec.delay, 0.95, 10000, DeriveSeed(seed, 0x95, 0));
  return suite;
}

// Strategies ----------------------------------------------------------------------

std::string Strategy::Name() const {
  switch (kind) {
    case Kind::kNone:
      return "none";
    case Kind::kImplicit:
      return "implicit:" + std::to_string(wait_ms);
    case Kind::kExplicit:
      return "explicit";
  }
  return "?";
}

Strategy ParseStrategy(std::string_view text) {
  if (text == "none") return Strategy::None();
  if (text == "explicit") return Strategy::Explicit();
  constexpr std::string_view kImplicit = "implicit:";
  if (text.substr(0, kImplicit.size()) == kImplicit) {
    std::string rest(text.substr(kImplicit.size()));
    std::size_t used = 0;
    long long w = -1;
    try {
      w = std::stoll(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == rest.size() && w >= 0) return Strategy::Implicit(w);
  }
  throw BadConfig("unknown strategy '" + std::string(text) + "'");
}

std::vector<std::optional<double>> SampleChainDelays(const SimTest& test,
                                                     std::uint64_t seed,
                                                     std::uint64_t test_index,
                                                     std::uint64_t rerun) {
  SimRng rng(DeriveSeed(seed, test_index, rerun));
  std::vector<std::optional<double>> out;
  out.reserve(test.commands.size());
  for (const SimCommand& c : test.commands) {
    if (c.chain_delay) {
      out.push_back(SampleDelay(*c.chain_delay, rng));
    } else {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

namespace {

std::int64_t MutationTime(const SimCommand& c, const SimMutation& m,
                          std::int64_t start, std::int64_t settle,
                          const std::optional<double>& chain) {
  if (chain) return settle + RoundMs(*chain * m.fraction);
  return start + RoundMs(static_cast<double>(c.base_duration_ms) * m.fraction);
}

// Commands of one test laid out back to back without waits.
std::vector<CommandSpan> RecordTest(const SimTest& test,
                                    const std::vector<std::optional<double>>& chain,
                                    std::int64_t offset_ms,
                                    std::uint32_t first_cmd_id) {
  std::vector<CommandSpan> spans;
  std::int64_t t = offset_ms;
  for (std::size_t k = 0; k < test.commands.size(); ++k) {
    const SimCommand& c = test.commands[k];
    CommandSpan span;
    span.cmd_id = first_cmd_id + static_cast<std::uint32_t>(k);
    span.name = c.name;
    span.source_loc = {test.name + ".test.js", static_cast<int>(k) + 2};
    span.start_ms = t;
    span.settle_ms = t + c.base_duration_ms;
    std::uint32_t seq = 0;
    for (const SimMutation& m : c.mutations) {
      MutationRecord r = m.effect;
      r.cmd_id = span.cmd_id;
      r.seq = ++seq;
      r.t_ms = MutationTime(c, m, span.start_ms, span.settle_ms, chain[k]);
      span.mutations.push_back(std::move(r));
    }
    std::stable_sort(span.mutations.begin(), span.mutations.end(),
                     [](const MutationRecord& a, const MutationRecord& b) {
                       return a.t_ms < b.t_ms;
                     });
    for (std::size_t i = 0; i < span.mutations.size(); ++i)
      span.mutations[i].seq = static_cast<std::uint32_t>(i + 1);
    WindowReplay replay = ReplayWindow(span);
    span.window = RecordedWindow{replay.close_ms, replay.trace.omega_final_s};
    for (MutationRecord& r : span.mutations) {
      r.late = std::find(replay.missed_seqs.begin(), replay.missed_seqs.end(),
                         r.seq) != replay.missed_seqs.end();
    }
    t = span.settle_ms;
    spans.push_back(std::move(span));
  }
  return spans;
}

enum class EventType { kMutation = 0, kCommandStart = 1, kSettle = 2, kPoll = 3 };

struct Event {
  std::int64_t t;
  int priority;  // mutations land before anything observing them
  std::uint64_t order;
  EventType type;
  int command;
  int mutation;

  bool operator>(const Event& o) const {
    return std::tie(t, priority, order) > std::tie(o.t, o.priority, o.order);
  }
};

}  // namespace

ExplicitPlan PlanExplicitWaits(const SimSuite& suite, std::uint64_t seed,
                               const OracleOptions& options) {
  ExplicitPlan plan;
  plan.oracles.resize(suite.tests.size());
  for (std::size_t ti = 0; ti < suite.tests.size(); ++ti) {
    const SimTest& test = suite.tests[ti];
    auto chain = SampleChainDelays(test, seed, ti, kRecordingRerun);
    std::vector<CommandSpan> spans = RecordTest(test, chain, 0, 1);
    auto& out = plan.oracles[ti];
    out.resize(test.commands.size());
    for (std::size_t k = 0; k < spans.size(); ++k) {
      const CommandSpan& span = spans[k];
      PruneResult pruned = PruneGuiIrrelevant(span.mutations);
      if (!ClassifyFlakyProne(span, pruned.kept)) continue;
      MutationFSM fsm = BuildFsm(pruned.kept, InitialStateFrom(pruned.kept));
      out[k] = GenerateOracle(fsm, options);
    }
  }
  return plan;
}

TestOutcome RunTest(const SimTest& test, const Strategy& strategy,
                    const std::vector<std::optional<double>>& chain,
                    const std::vector<std::optional<WaitOracle>>* oracles) {
  const int n = static_cast<int>(test.commands.size());
  TestOutcome out;
  if (n == 0) return out;
  const bool explicit_waits =
      strategy.kind == Strategy::Kind::kExplicit && oracles != nullptr;

  std::vector<std::vector<bool>> occurred(n);
  std::vector<MutationRecord> effects;
  for (int k = 0; k < n; ++k) {
    occurred[k].assign(test.commands[k].mutations.size(), false);
    for (const SimMutation& m : test.commands[k].mutations)
      effects.push_back(m.effect);
  }
  DomState dom;
  if (explicit_waits) dom = InitialStateFrom(effects);
  std::uint32_t dom_index = 0;

  std::vector<std::vector<const SimAssertion*>> assertions_after(n);
  for (const SimAssertion& a : test.assertions)
    assertions_after[a.after_command].push_back(&a);

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  std::uint64_t order = 0;
  auto push = [&](std::int64_t t, EventType type, int command, int mutation) {
    int priority = type == EventType::kMutation ? 0 : 1;
    queue.push({t, priority, order++, type, command, mutation});
  };

  std::vector<std::int64_t> start(n, 0), settle(n, 0);
  bool done = false;
  auto finish_wait = [&](int k, std::int64_t now) {
    out.wait_ms += now - settle[k];
    for (const SimAssertion* a : assertions_after[k]) {
      for (const MutationRef& r : a->deps) {
        if (!occurred[r.command][r.mutation]) out.passed = false;
      }
    }
    if (k + 1 < n) {
      push(now, EventType::kCommandStart, k + 1, 0);
    } else {
      out.time_ms = now;
      done = true;
    }
  };

  push(0, EventType::kCommandStart, 0, 0);
  while (!queue.empty() && !done) {
    Event ev = queue.top();
    queue.pop();
    const int k = ev.command;
    const SimCommand& cmd = test.commands[k];
    switch (ev.type) {
      case EventType::kMutation: {
        occurred[k][ev.mutation] = true;
        if (explicit_waits) ApplyMutation(dom, cmd.mutations[ev.mutation].effect, ++dom_index);
        break;
      }
      case EventType::kCommandStart: {
        start[k] = ev.t;
        settle[k] = ev.t + cmd.base_duration_ms;
        if (!chain[k]) {
          for (std::size_t i = 0; i < cmd.mutations.size(); ++i)
            push(MutationTime(cmd, cmd.mutations[i], start[k], settle[k], chain[k]),
                 EventType::kMutation, k, static_cast<int>(i));
        }
        push(settle[k], EventType::kSettle, k, 0);
        break;
      }
      case EventType::kSettle: {
        if (chain[k]) {
          for (std::size_t i = 0; i < cmd.mutations.size(); ++i)
            push(MutationTime(cmd, cmd.mutations[i], start[k], settle[k], chain[k]),
                 EventType::kMutation, k, static_cast<int>(i));
        }
        switch (strategy.kind) {
          case Strategy::Kind::kNone:
            push(ev.t, EventType::kPoll, k, -1);
            break;
          case Strategy::Kind::kImplicit:
            push(ev.t + strategy.wait_ms, EventType::kPoll, k, -1);
            break;
          case Strategy::Kind::kExplicit:
            push(ev.t, EventType::kPoll, k,
                 explicit_waits && (*oracles)[k] ? 0 : -1);
            break;
        }
        break;
      }
      case EventType::kPoll: {
        // mutation == -1 marks the end of a plain wait.
        if (ev.mutation < 0) {
          finish_wait(k, ev.t);
          break;
        }
        const WaitOracle& oracle = *(*oracles)[k];
        const std::int64_t deadline = settle[k] + oracle.timeout_ms;
        if (EvalOracle(oracle, dom)) {
          finish_wait(k, ev.t);
        } else if (ev.t >= deadline) {
          ++out.timeouts;
          finish_wait(k, ev.t);
        } else {
          push(std::min<std::int64_t>(ev.t + oracle.poll_ms, deadline),
               EventType::kPoll, k, 0);
        }
        break;
      }
    }
  }
  return out;
}

TrialResult RunTrial(const SimSuite& suite, const Strategy& strategy,
                     std::uint64_t seed, std::uint64_t rerun,
                     const ExplicitPlan* plan) {
  std::optional<ExplicitPlan> own;
  if (strategy.kind == Strategy::Kind::kExplicit && plan == nullptr) {
    own = PlanExplicitWaits(suite, seed, strategy.oracle);
    plan = &*own;
  }
  TrialResult result;
  result.tests.reserve(suite.tests.size());
  for (std::size_t ti = 0; ti < suite.tests.size(); ++ti) {
    const SimTest& test = suite.tests[ti];
    auto chain = SampleChainDelays(test, seed, ti, rerun);
    const std::vector<std::optional<WaitOracle>>* oracles =
        plan ? &plan->oracles[ti] : nullptr;
    TestOutcome o = RunTest(test, strategy, chain, oracles);
    result.suite_time_ms += o.time_ms;
    result.timeouts += o.timeouts;
    result.tests.push_back(o);
  }
  return result;
}

MutationLog RecordLog(const SimSuite& suite, std::uint64_t seed) {
  MutationLog log;
  log.suite_name = suite.name;
  std::int64_t offset = 0;
  std::uint32_t next_id = 1;
  for (std::size_t ti = 0; ti < suite.tests.size(); ++ti) {
    const SimTest& test = suite.tests[ti];
    auto chain = SampleChainDelays(test, seed, ti, kRecordingRerun);
    std::vector<CommandSpan> spans = RecordTest(test, chain, offset, next_id);
    if (!spans.empty()) offset = spans.back().settle_ms;
    next_id += static_cast<std::uint32_t>(spans.size());
    for (CommandSpan& s : spans) log.spans.push_back(std::move(s));
  }
  return log;
}

// Evaluation ------------------------------------------------------------------------

SimReport Evaluate(const SimSuite& suite, const std::vector<Strategy>& strategies,
                   int reruns, std::uint64_t seed) {
  if (reruns < 1) throw std::invalid_argument("reruns must be >= 1");
  ValidateSuite(suite);
  SimReport report;
  report.suite_name = suite.name;
  report.seed = seed;
  report.reruns = reruns;
  report.tests = static_cast<int>(suite.tests.size());
  report.achieved_p95_ms = suite.achieved_p95_ms;

  const std::size_t n = suite.tests.size();
  auto run = [&](const Strategy& s, std::vector<int>& passes,
                 double& mean_time, int& timeouts) {
    std::optional<ExplicitPlan> plan;
    if (s.kind == Strategy::Kind::kExplicit)
      plan = PlanExplicitWaits(suite, seed, s.oracle);
    passes.assign(n, 0);
    double total = 0.0;
    timeouts = 0;
    for (int r = 0; r < reruns; ++r) {
      TrialResult tr = RunTrial(suite, s, seed, static_cast<std::uint64_t>(r),
                                plan ? &*plan : nullptr);
      for (std::size_t i = 0; i < n; ++i) passes[i] += tr.tests[i].passed ? 1 : 0;
      total += static_cast<double>(tr.suite_time_ms);
      timeouts += tr.timeouts;
    }
    mean_time = total / reruns;
  };

  std::vector<int> base_passes;
  double base_time = 0.0;
  int base_timeouts = 0;
  run(Strategy::None(), base_passes, base_time, base_timeouts);
  std::vector<bool> c_flaky(n);
  int c_flaky_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    c_flaky[i] = base_passes[i] < reruns;
    c_flaky_count += c_flaky[i] ? 1 : 0;
  }

  for (const Strategy& s : strategies) {
    StrategyReport sr;
    sr.strategy = s;
    sr.tests = report.tests;
    sr.c_flaky = c_flaky_count;
    if (s.kind == Strategy::Kind::kNone) {
      sr.passes_per_test = base_passes;
      sr.mean_suite_time_ms = base_time;
      sr.timeouts = base_timeouts;
    } else {
      run(s, sr.passes_per_test, sr.mean_suite_time_ms, sr.timeouts);
    }
    int all_pass = 0;
    for (std::size_t i = 0; i < n; ++i) {
      bool ok = sr.passes_per_test[i] == reruns;
      all_pass += ok ? 1 : 0;
      if (ok && c_flaky[i]) ++sr.fixed;
    }
    sr.fix_rate = c_flaky_count ? static_cast<double>(sr.fixed) / c_flaky_count : 1.0;
    sr.pass_all_rate = n ? static_cast<double>(all_pass) / static_cast<double>(n) : 1.0;
    sr.overhead = base_time > 0 ? sr.mean_suite_time_ms / base_time : 1.0;
    report.strategies.push_back(std::move(sr));
  }

  const MutationLog recorded = RecordLog(suite, seed);
  double listen = 0.0, plain = 0.0;
  for (const CommandSpan& s : recorded.spans) {
    plain += static_cast<double>(s.settle_ms - s.start_ms);
    if (s.window) listen += static_cast<double>(s.window->close_ms - s.settle_ms);
  }
  report.recording_overhead = plain > 0 ? (plain + listen) / plain : 1.0;
  return report;
}

namespace {

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string FormatSimReport(const SimReport& r) {
  std::ostringstream out;
  out << "suite " << r.suite_name << ": " << r.tests << " tests, " << r.reruns
      << " reruns, seed " << r.seed << ", p95 delay "
      << Fixed(r.achieved_p95_ms, 0) << " ms\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %9s %14s %9s %9s %14s %9s\n",
                "strategy", "overhead", "fixed/c-flaky", "fix_rate",
                "pass_all", "suite_time_ms", "timeouts");
  out << line;
  for (const StrategyReport& s : r.strategies) {
    std::string fixed = std::to_string(s.fixed) + "/" + std::to_string(s.c_flaky);
    std::snprintf(line, sizeof(line), "%-16s %8.3fx %14s %9.3f %9.3f %14.0f %9d\n",
                  s.strategy.Name().c_str(), s.overhead, fixed.c_str(),
                  s.fix_rate, s.pass_all_rate, s.mean_suite_time_ms, s.timeouts);
    out << line;
  }
  out << "recording listen windows (one-time): " << Fixed(r.recording_overhead, 3)
      << "x\n";
  return out.str();
}

std::string SimReportCsv(const SimReport& r) {
  std::ostringstream out;
  out << "strategy,overhead,fixed,c_flaky,fix_rate,pass_all_rate,"
         "mean_suite_time_ms,timeouts\n";
  for (const StrategyReport& s : r.strategies) {
    out << s.strategy.Name() << ',' << Fixed(s.overhead, 4) << ',' << s.fixed
        << ',' << s.c_flaky << ',' << Fixed(s.fix_rate, 4) << ','
        << Fixed(s.pass_all_rate, 4) << ',' << Fixed(s.mean_suite_time_ms, 1)
        << ',' << s.timeouts << '\n';
  }
  return out.str();
}

// Configuration ---------------------------------------------------------------------

namespace {

using nlohmann::json;

template <typename T>
T Get(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw BadConfig(std::string("config key '") + key + "' has the wrong type");
  }
}

template <typename T>
void GetRange(const json& obj, const char* key, T& lo, T& hi) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw BadConfig(std::string("config key '") + key + "' must be [min, max]");
  lo = v[0].get<T>();
  hi = v[1].get<T>();
}

DelayDistribution ParseDistribution(const json& d) {
  if (!d.is_object()) throw BadDistribution("delay must be an object");
  std::string type = Get<std::string>(d, "type", "");
  DelayDistribution out;
  if (type == "constant") {
    out.kind = DelayDistribution::Kind::kConstant;
    out.constant_ms = Get<double>(d, "ms", 0.0);
  } else if (type == "lognormal") {
    out.kind = DelayDistribution::Kind::kLogNormal;
    out.median_ms = Get<double>(d, "median_ms", 0.0);
    out.sigma = Get<double>(d, "sigma", -1.0);
    if (d.contains("max_ms")) out.max_ms = Get<double>(d, "max_ms", 0.0);
  } else if (type == "empirical") {
    out.kind = DelayDistribution::Kind::kEmpirical;
    const json& cdf = d.contains("cdf") ? d.at("cdf") : json::array();
    if (!cdf.is_array()) throw BadDistribution("empirical cdf must be a list");
    for (const json& knot : cdf) {
      if (!knot.is_array() || knot.size() != 2 || !knot[0].is_number() ||
          !knot[1].is_number())
        throw BadDistribution("empirical knots must be [value_ms, probability]");
      out.cdf.emplace_back(knot[0].get<double>(), knot[1].get<double>());
    }
  } else {
    throw BadDistribution("unknown delay type '" + type + "'");
  }
  ValidateDistribution(out);
  return out;
}

}  // namespace

SimConfig ParseSimConfig(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw BadConfig(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw BadConfig("config must be a JSON object");
  SimConfig cfg;
  cfg.corpus = CalibratedCorpusSpec();
  if (doc.contains("corpus")) {
    const json& c = doc.at("corpus");
    if (!c.is_object()) throw BadConfig("'corpus' must be an object");
    CorpusSpec& s = cfg.corpus;
    s.n_tests = Get<int>(c, "n_tests", s.n_tests);
    GetRange(c, "commands", s.min_commands, s.max_commands);
    GetRange(c, "base_ms", s.min_base_ms, s.max_base_ms);
    GetRange(c, "mutations", s.min_mutations, s.max_mutations);
    GetRange(c, "sync_fraction", s.sync_fraction_lo, s.sync_fraction_hi);
    if (c.contains("mix")) {
      const json& mix = c.at("mix");
      s.share_static = Get<double>(mix, "static", s.share_static);
      s.share_sync = Get<double>(mix, "sync", s.share_sync);
      s.share_async = Get<double>(mix, "async", s.share_async);
    }
    if (c.contains("delay")) s.delay = ParseDistribution(c.at("delay"));
    cfg.corpus_seed = Get<std::uint64_t>(c, "seed", 0);
  }
  OracleOptions oracle;
  if (doc.contains("oracle")) {
    const json& o = doc.at("oracle");
    oracle.poll_ms = Get<int>(o, "poll_ms", oracle.poll_ms);
    oracle.timeout_ms = Get<int>(o, "timeout_ms", oracle.timeout_ms);
    oracle.max_props = Get<std::size_t>(o, "max_props", oracle.max_props);
  }
  if (oracle.poll_ms < 10 || oracle.poll_ms > 1000 || oracle.timeout_ms < 500 ||
      oracle.timeout_ms > 60000 || oracle.max_props < 1 || oracle.max_props > 5)
    throw BadConfig("oracle knobs out of range");
  std::vector<std::string> names = {"none",          "implicit:200",
                                    "implicit:500",  "implicit:1000",
                                    "implicit:2000", "explicit"};
  if (doc.contains("strategies")) {
    names = Get<std::vector<std::string>>(doc, "strategies", names);
  }
  for (const std::string& name : names) {
    Strategy s = ParseStrategy(name);
    if (s.kind == Strategy::Kind::kExplicit) s.oracle = oracle;
    cfg.strategies.push_back(s);
  }
  cfg.reruns = Get<int>(doc, "reruns", cfg.reruns);
  if (cfg.reruns < 1) throw BadConfig("reruns must be >= 1");
  cfg.seed = Get<std::uint64_t>(doc, "seed", 0);
  return cfg;
}

}  // namespace wefix
