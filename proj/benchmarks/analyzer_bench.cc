#include <benchmark/benchmark.h>

#include <string>

#include "wefix/analyzer.h"
#include "wefix/simulator.h"
#include "wefix/trace_model.h"

namespace wefix {
namespace {

MutationLog RecordedLog(int tests) {
  CorpusSpec spec = CalibratedCorpusSpec();
  spec.n_tests = tests;
  return RecordLog(GenCorpus(spec, 3), 3);
}

void BM_ParseLog(benchmark::State& state) {
  const std::string text = SerializeLog(RecordedLog(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(ParseLog(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseLog)->Arg(10)->Arg(100);

void BM_SerializeLog(benchmark::State& state) {
  const MutationLog log = RecordedLog(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(SerializeLog(log));
}
BENCHMARK(BM_SerializeLog)->Arg(10)->Arg(100);

void BM_PruneAndStats(benchmark::State& state) {
  const MutationLog log = RecordedLog(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    PrunedLog pruned = PruneLog(log, nullptr);
    benchmark::DoNotOptimize(ComputeStats(pruned.log));
    benchmark::DoNotOptimize(RtCdf(pruned.log, 100));
  }
}
BENCHMARK(BM_PruneAndStats)->Arg(10)->Arg(100)->Arg(1000);

}  // namespace
}  // namespace wefix
