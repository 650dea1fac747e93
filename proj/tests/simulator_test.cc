#include "wefix/simulator.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "wefix/analyzer.h"

namespace wefix {
namespace {

MutationRecord TextEffect(const std::string& id, const std::string& value) {
  MutationRecord m;
  m.kind = MutationKind::kCharacterData;
  m.target = {"/html/body/p[@id='" + id + "']", id};
  m.text_change = TextChange{"", value};
  return m;
}

// One command settling at 100 ms whose only mutation lands D ms later,
// followed by an assertion on that mutation.
SimTest AsyncAge() {
  SimCommand cmd;
  cmd.name = "sendKeys";
  cmd.base_duration_ms = 100;
  cmd.chain_delay = DelayDistribution{};
  cmd.mutations.push_back({1.0, TextEffect("age", "23")});
  SimTest test;
  test.name = "age";
  test.commands.push_back(cmd);
  test.assertions.push_back({0, {{0, 0}}});
  return test;
}

WaitOracle AgeOracle() {
  PropertyRef p;
  p.element = {"/html/body/p[@id='age']", "age"};
  p.kind = PropertyKind::kText;
  p.string_value = "23";
  WaitOracle o;
  o.predicates.push_back(p);
  return o;
}

TEST(SimulatorTest, NoWaitFailsOnLateMutation) {
  TestOutcome o = RunTest(AsyncAge(), Strategy::None(), {300.0}, nullptr);
  EXPECT_FALSE(o.passed);
  EXPECT_EQ(o.time_ms, 100);
  EXPECT_EQ(o.wait_ms, 0);
}

TEST(SimulatorTest, ImplicitWaitLongEnoughPasses) {
  TestOutcome o =
      RunTest(AsyncAge(), Strategy::Implicit(500), {300.0}, nullptr);
  EXPECT_TRUE(o.passed);
  EXPECT_EQ(o.time_ms, 600);
  EXPECT_EQ(o.wait_ms, 500);
}

TEST(SimulatorTest, ExplicitWaitStopsOnThePollGrid) {
  std::vector<std::optional<WaitOracle>> oracles = {AgeOracle()};
  TestOutcome o = RunTest(AsyncAge(), Strategy::Explicit(), {300.0}, &oracles);
  EXPECT_TRUE(o.passed);
  EXPECT_EQ(o.wait_ms, 300);
  EXPECT_EQ(o.time_ms, 400);
  EXPECT_EQ(o.timeouts, 0);

  o = RunTest(AsyncAge(), Strategy::Explicit(), {301.0}, &oracles);
  EXPECT_EQ(o.wait_ms, 400);
}

TEST(SimulatorTest, ImplicitWaitTooShortFails) {
  TestOutcome o =
      RunTest(AsyncAge(), Strategy::Implicit(2000), {2500.0}, nullptr);
  EXPECT_FALSE(o.passed);
  EXPECT_EQ(o.time_ms, 2100);
}

TEST(SimulatorTest, ExplicitWaitTimesOut) {
  std::vector<std::optional<WaitOracle>> oracles = {AgeOracle()};
  TestOutcome o =
      RunTest(AsyncAge(), Strategy::Explicit(), {5000.0}, &oracles);
  EXPECT_FALSE(o.passed);
  EXPECT_EQ(o.wait_ms, 4000);
  EXPECT_EQ(o.timeouts, 1);
}

TEST(SimulatorTest, ZeroDelaySuiteIsNeverFlaky) {
  CorpusSpec spec;
  spec.n_tests = 40;
  spec.delay.kind = DelayDistribution::Kind::kConstant;
  spec.delay.constant_ms = 0.0;
  SimSuite suite = GenCorpus(spec, 11);
  SimReport r = Evaluate(suite,
                         {Strategy::None(), Strategy::Implicit(200),
                          Strategy::Explicit()},
                         3, 5);
  for (const StrategyReport& s : r.strategies) {
    EXPECT_EQ(s.c_flaky, 0);
    EXPECT_EQ(s.fix_rate, 1.0);
    EXPECT_EQ(s.pass_all_rate, 1.0) << s.strategy.Name();
  }
  EXPECT_EQ(r.strategies[0].overhead, 1.0);
  EXPECT_EQ(r.strategies[2].overhead, 1.0);
}

TEST(SimulatorTest, CorpusAndTrialsAreDeterministic) {
  CorpusSpec spec = CalibratedCorpusSpec();
  spec.n_tests = 50;
  SimSuite a = GenCorpus(spec, 42);
  SimSuite b = GenCorpus(spec, 42);
  ASSERT_EQ(a.tests.size(), b.tests.size());
  for (std::size_t i = 0; i < a.tests.size(); ++i) {
    ASSERT_EQ(a.tests[i].commands.size(), b.tests[i].commands.size());
    for (std::size_t k = 0; k < a.tests[i].commands.size(); ++k) {
      EXPECT_EQ(a.tests[i].commands[k].base_duration_ms,
                b.tests[i].commands[k].base_duration_ms);
      EXPECT_EQ(a.tests[i].commands[k].mutations.size(),
                b.tests[i].commands[k].mutations.size());
    }
  }
  EXPECT_EQ(a.achieved_p95_ms, b.achieved_p95_ms);
  for (const Strategy& s :
       {Strategy::None(), Strategy::Implicit(500), Strategy::Explicit()})
    EXPECT_EQ(RunTrial(a, s, 9, 3), RunTrial(b, s, 9, 3)) << s.Name();

  std::vector<Strategy> ladder = {Strategy::None(), Strategy::Implicit(1000),
                                  Strategy::Explicit()};
  EXPECT_EQ(SimReportCsv(Evaluate(a, ladder, 3, 8)),
            SimReportCsv(Evaluate(b, ladder, 3, 8)));
  EXPECT_NE(SimReportCsv(Evaluate(a, ladder, 3, 8)),
            SimReportCsv(Evaluate(GenCorpus(spec, 43), ladder, 3, 8)));
}

TEST(SimulatorTest, ChainDelaysAreSharedAcrossStrategies) {
  SimSuite suite = GenCorpus(CalibratedCorpusSpec(), 1);
  const SimTest& t = suite.tests[3];
  EXPECT_EQ(SampleChainDelays(t, 7, 3, 0), SampleChainDelays(t, 7, 3, 0));
  EXPECT_NE(SampleChainDelays(t, 7, 3, 0), SampleChainDelays(t, 7, 3, 1));
}

TEST(SamplerTest, LogNormalP95) {
  DelayDistribution d;
  d.kind = DelayDistribution::Kind::kLogNormal;
  d.median_ms = 850;
  d.sigma = 0.5;
  double p95 = SampleQuantile(d, 0.95, 10000, 2024);
  EXPECT_GE(p95, 1800.0);
  EXPECT_LE(p95, 2000.0);
  // Closed form: median * exp(z_0.95 * sigma).
  EXPECT_NEAR(p95, 850.0 * std::exp(1.6448536 * 0.5), 60.0);
  EXPECT_NEAR(SampleQuantile(d, 0.5, 10000, 2024), 850.0, 25.0);
}

TEST(SamplerTest, TruncationAndConstants) {
  DelayDistribution d;
  d.kind = DelayDistribution::Kind::kLogNormal;
  d.median_ms = 850;
  d.sigma = 0.5;
  d.max_ms = 2000;
  SimRng rng(5);
  for (int i = 0; i < 5000; ++i) {
    double v = SampleDelay(d, rng);
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 2000.0);
  }
  DelayDistribution c;
  c.constant_ms = 250;
  EXPECT_EQ(SampleDelay(c, rng), 250.0);
}

TEST(SamplerTest, EmpiricalInverseCdf) {
  DelayDistribution d;
  d.kind = DelayDistribution::Kind::kEmpirical;
  d.cdf = {{0, 0.0}, {100, 0.5}, {1100, 1.0}};
  EXPECT_NEAR(SampleQuantile(d, 0.5, 20000, 3), 100.0, 15.0);
  EXPECT_NEAR(SampleQuantile(d, 0.75, 20000, 3), 600.0, 30.0);
  EXPECT_LE(SampleQuantile(d, 1.0, 1000, 3), 1100.0);
}

TEST(SamplerTest, RejectsBadDistributions) {
  DelayDistribution d;
  d.kind = DelayDistribution::Kind::kLogNormal;
  d.median_ms = 0;
  d.sigma = 0.5;
  EXPECT_THROW(ValidateDistribution(d), BadDistribution);
  d.median_ms = 100;
  d.sigma = -1;
  EXPECT_THROW(ValidateDistribution(d), BadDistribution);
  DelayDistribution e;
  e.kind = DelayDistribution::Kind::kEmpirical;
  e.cdf = {{0, 0.0}, {100, 0.9}};
  EXPECT_THROW(ValidateDistribution(e), BadDistribution);
  e.cdf = {{100, 0.5}, {50, 1.0}};
  EXPECT_THROW(ValidateDistribution(e), BadDistribution);
  DelayDistribution c;
  c.constant_ms = -5;
  EXPECT_THROW(ValidateDistribution(c), BadDistribution);
}

TEST(SamplerTest, RngRanges) {
  SimRng rng(77);
  double sum = 0, sq = 0;
  for (int i = 0; i < 20000; ++i) {
    double u = rng.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    double z = rng.Normal();
    sum += z;
    sq += z * z;
    std::int64_t k = rng.UniformInt(-2, 3);
    ASSERT_GE(k, -2);
    ASSERT_LE(k, 3);
  }
  EXPECT_NEAR(sum / 20000, 0.0, 0.05);
  EXPECT_NEAR(sq / 20000, 1.0, 0.05);
  EXPECT_NE(DeriveSeed(1, 2, 3), DeriveSeed(1, 3, 2));
}

// Brute-force reference: lays the timeline out command by command and walks
// each wait one millisecond at a time.
struct Reference {
  bool passed = true;
  std::int64_t time_ms = 0;
  std::int64_t wait_ms = 0;
  int timeouts = 0;
};

struct HandOracle {
  std::vector<MutationRef> refs;
  int poll_ms = 100;
  int timeout_ms = 4000;
};

Reference BruteForce(const SimTest& test, const Strategy& s,
                     const std::vector<std::optional<double>>& chain,
                     const std::vector<std::optional<HandOracle>>& oracles) {
  Reference r;
  std::vector<std::vector<std::int64_t>> when(test.commands.size());
  std::int64_t t = 0;
  for (std::size_t k = 0; k < test.commands.size(); ++k) {
    const SimCommand& c = test.commands[k];
    const std::int64_t start = t;
    const std::int64_t settle = start + c.base_duration_ms;
    for (const SimMutation& m : c.mutations) {
      when[k].push_back(
          chain[k] ? settle + std::llround(*chain[k] * m.fraction)
                   : start + std::llround(c.base_duration_ms * m.fraction));
    }
    auto happened = [&](const MutationRef& ref, std::int64_t at) {
      return when[ref.command][ref.mutation] <= at;
    };
    std::int64_t end = settle;
    if (s.kind == Strategy::Kind::kImplicit) {
      end = settle + s.wait_ms;
    } else if (s.kind == Strategy::Kind::kExplicit && oracles[k]) {
      const HandOracle& o = *oracles[k];
      const std::int64_t deadline = settle + o.timeout_ms;
      for (std::int64_t now = settle;; ++now) {
        bool poll = (now - settle) % o.poll_ms == 0 || now == deadline;
        if (!poll) continue;
        bool all = true;
        for (const MutationRef& ref : o.refs) all = all && happened(ref, now);
        if (all) {
          end = now;
          break;
        }
        if (now >= deadline) {
          ++r.timeouts;
          end = now;
          break;
        }
      }
    }
    r.wait_ms += end - settle;
    for (const SimAssertion& a : test.assertions) {
      if (a.after_command != static_cast<int>(k)) continue;
      for (const MutationRef& ref : a.deps)
        if (!happened(ref, end)) r.passed = false;
    }
    t = end;
  }
  r.time_ms = t;
  return r;
}

TEST(SimulatorTest, MatchesBruteForceTimeline) {
  SimRng rng(31337);
  int compared = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    SimTest test;
    const int n = static_cast<int>(rng.UniformInt(1, 3));
    int budget = 3;
    int effect_id = 0;
    std::vector<std::optional<double>> chain(n);
    std::vector<std::optional<HandOracle>> hand(n);
    std::vector<std::optional<WaitOracle>> oracles(n);
    const int poll = rng.UniformInt(0, 1) ? 100 : 37;
    const int timeout = static_cast<int>(rng.UniformInt(150, 900));
    for (int k = 0; k < n; ++k) {
      SimCommand c;
      c.base_duration_ms = rng.UniformInt(1, 400);
      const int kind = static_cast<int>(rng.UniformInt(0, 2));
      const int m = kind == 0 ? 0 : static_cast<int>(rng.UniformInt(0, budget));
      budget -= m;
      std::vector<double> fr;
      for (int i = 0; i < m; ++i) fr.push_back(rng.Uniform());
      std::sort(fr.begin(), fr.end());
      WaitOracle o;
      o.poll_ms = poll;
      o.timeout_ms = timeout;
      HandOracle h{{}, poll, timeout};
      for (int i = 0; i < m; ++i) {
        std::string id = "e" + std::to_string(effect_id++);
        c.mutations.push_back({fr[i], TextEffect(id, "v")});
        PropertyRef p;
        p.element = {"/html/body/p[@id='" + id + "']", id};
        p.kind = PropertyKind::kText;
        p.string_value = "v";
        o.predicates.push_back(p);
        h.refs.push_back({k, i});
      }
      if (kind == 2) {
        c.chain_delay = DelayDistribution{};
        chain[k] = rng.Uniform() * 700.0;
      }
      if (m > 0 && rng.Uniform() < 0.8) {
        oracles[k] = o;
        hand[k] = h;
      }
      test.commands.push_back(std::move(c));
      for (int i = 0; i < m; ++i) {
        SimAssertion a;
        a.after_command = static_cast<int>(rng.UniformInt(k, n - 1));
        a.deps.push_back({k, i});
        test.assertions.push_back(a);
      }
    }
    for (const Strategy& s :
         {Strategy::None(), Strategy::Implicit(rng.UniformInt(0, 600)),
          Strategy::Explicit()}) {
      TestOutcome got = RunTest(test, s, chain, &oracles);
      Reference want = BruteForce(test, s, chain, hand);
      ASSERT_EQ(got.passed, want.passed) << trial << " " << s.Name();
      ASSERT_EQ(got.time_ms, want.time_ms) << trial << " " << s.Name();
      ASSERT_EQ(got.wait_ms, want.wait_ms) << trial << " " << s.Name();
      ASSERT_EQ(got.timeouts, want.timeouts) << trial << " " << s.Name();
      ++compared;
    }
  }
  EXPECT_EQ(compared, 9000);
}

class LadderTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    CorpusSpec spec = CalibratedCorpusSpec();
    spec.n_tests = 200;
    suite_ = new SimSuite(GenCorpus(spec, 2));
    report_ = new SimReport(Evaluate(
        *suite_,
        {Strategy::None(), Strategy::Implicit(200), Strategy::Implicit(500),
         Strategy::Implicit(1000), Strategy::Implicit(2000),
         Strategy::Explicit()},
        10, 77));
  }
  static void TearDownTestSuite() {
    delete report_;
    delete suite_;
  }
  static SimSuite* suite_;
  static SimReport* report_;
};

SimSuite* LadderTest::suite_ = nullptr;
SimReport* LadderTest::report_ = nullptr;

TEST_F(LadderTest, ImplicitWaitsDominate) {
  const auto& s = report_->strategies;
  ASSERT_GT(s[0].c_flaky, 0);
  EXPECT_EQ(s[0].fixed, 0);
  for (std::size_t i = 1; i + 1 < 5; ++i) {
    EXPECT_LE(s[i].fix_rate, s[i + 1].fix_rate);
    EXPECT_LT(s[i].overhead, s[i + 1].overhead);
  }
  EXPECT_LT(s[0].overhead, s[1].overhead);
  EXPECT_EQ(s[4].fix_rate, 1.0);
}

TEST_F(LadderTest, OracleSufficiencyAndEfficiency) {
  const StrategyReport& ex = report_->strategies[5];
  EXPECT_EQ(ex.fix_rate, 1.0);
  EXPECT_EQ(ex.timeouts, 0);
  EXPECT_LE(ex.mean_suite_time_ms, report_->strategies[4].mean_suite_time_ms);

  // Per command, the explicit wait never exceeds the chain delay rounded up
  // to the poll grid.
  ExplicitPlan plan = PlanExplicitWaits(*suite_, 77);
  for (std::size_t ti = 0; ti < suite_->tests.size(); ++ti) {
    const SimTest& t = suite_->tests[ti];
    auto chain = SampleChainDelays(t, 77, ti, 4);
    std::int64_t bound = 0;
    for (std::size_t k = 0; k < t.commands.size(); ++k) {
      if (!plan.oracles[ti][k] || !chain[k]) continue;
      bound += static_cast<std::int64_t>(std::ceil(std::llround(*chain[k]) / 100.0)) * 100;
    }
    TestOutcome o = RunTest(t, Strategy::Explicit(), chain, &plan.oracles[ti]);
    EXPECT_LE(o.wait_ms, bound) << ti;
  }
}

TEST_F(LadderTest, ReportRendering) {
  std::string csv = SimReportCsv(*report_);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "strategy,overhead,fixed,c_flaky,fix_rate,pass_all_rate,"
            "mean_suite_time_ms,timeouts");
  EXPECT_NE(csv.find("\nimplicit:2000,"), std::string::npos);
  EXPECT_NE(FormatSimReport(*report_).find("explicit"), std::string::npos);
  EXPECT_GT(report_->recording_overhead, 1.0);
}

TEST(SimulatorTest, RecordedLogIsValid) {
  CorpusSpec spec = CalibratedCorpusSpec();
  spec.n_tests = 30;
  SimSuite suite = GenCorpus(spec, 4);
  MutationLog log = RecordLog(suite, 4);
  EXPECT_NO_THROW(ValidateLog(log));
  std::size_t commands = 0;
  for (const SimTest& t : suite.tests) commands += t.commands.size();
  EXPECT_EQ(log.spans.size(), commands);
  EXPECT_EQ(ParseLog(SerializeLog(log)), log);
  SuiteStats stats = ComputeStats(PruneLog(log, nullptr).log);
  EXPECT_GT(stats.pct_flaky_prone, 0.0);
}

TEST(StrategyTest, NamesRoundTrip) {
  for (const char* name : {"none", "implicit:200", "implicit:2000", "explicit"})
    EXPECT_EQ(ParseStrategy(name).Name(), name);
  EXPECT_THROW(ParseStrategy("implicit:"), BadConfig);
  EXPECT_THROW(ParseStrategy("implicit:-5"), BadConfig);
  EXPECT_THROW(ParseStrategy("sleep"), BadConfig);
}

TEST(ConfigTest, ParsesFullDocument) {
  SimConfig c = ParseSimConfig(R"({
    "corpus": {"n_tests": 20, "commands": [2, 4], "base_ms": [100, 200],
               "mutations": [1, 2], "sync_fraction": [0.5, 0.9],
               "mix": {"static": 1, "sync": 1, "async": 2},
               "delay": {"type": "lognormal", "median_ms": 500, "sigma": 0.3,
                         "max_ms": 1500},
               "seed": 9},
    "strategies": ["none", "implicit:300", "explicit"],
    "oracle": {"poll_ms": 50, "timeout_ms": 3000, "max_props": 2},
    "reruns": 4,
    "seed": 12
  })");
  EXPECT_EQ(c.corpus.n_tests, 20);
  EXPECT_EQ(c.corpus.min_commands, 2);
  EXPECT_EQ(c.corpus.max_base_ms, 200);
  EXPECT_EQ(c.corpus.delay.kind, DelayDistribution::Kind::kLogNormal);
  EXPECT_EQ(c.corpus.delay.max_ms, 1500.0);
  EXPECT_EQ(c.corpus_seed, 9u);
  ASSERT_EQ(c.strategies.size(), 3u);
  EXPECT_EQ(c.strategies[1].wait_ms, 300);
  EXPECT_EQ(c.strategies[2].oracle.poll_ms, 50);
  EXPECT_EQ(c.strategies[2].oracle.max_props, 2u);
  EXPECT_EQ(c.reruns, 4);
  EXPECT_EQ(c.seed, 12u);
}

TEST(ConfigTest, DefaultsAndErrors) {
  SimConfig c = ParseSimConfig("{}");
  EXPECT_EQ(c.strategies.size(), 6u);
  EXPECT_EQ(c.reruns, 10);
  EXPECT_THROW(ParseSimConfig("[]"), BadConfig);
  EXPECT_THROW(ParseSimConfig("{\"reruns\": 0}"), BadConfig);
  EXPECT_THROW(ParseSimConfig("{\"reruns\": \"ten\"}"), BadConfig);
  EXPECT_THROW(ParseSimConfig("{\"corpus\": {\"delay\": {\"type\": \"gamma\"}}}"),
               BadDistribution);
  EXPECT_THROW(ParseSimConfig("not json"), BadConfig);
}

}  // namespace
}  // namespace wefix
