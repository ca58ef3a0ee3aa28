#include <benchmark/benchmark.h>

#include "glyco/model.hpp"
#include "glyco/rng.hpp"

using namespace glyco;

namespace {

ModelDims bench_dims(int n, int hidden, int width) {
  ModelDims d;
  d.seq_len = n;
  d.hidden_dim = hidden;
  d.input_dim = width;
  return d;
}

SeqMatrix random_seq(const ModelDims& d, std::uint64_t seed) {
  rng::SplitMix64 rng(seed);
  SeqMatrix m;
  m.len = static_cast<std::size_t>(d.seq_len);
  m.width = static_cast<std::size_t>(d.input_dim);
  m.data.resize(m.len * m.width);
  for (double& v : m.data) v = rng.uniform(-2.0, 2.0);
  return m;
}

} // namespace

// One synthetic day at the acceptance-test width.
static void BM_ForwardDay(benchmark::State& state) {
  const ModelDims d = bench_dims(288, static_cast<int>(state.range(0)), 9);
  ModelParams p = ModelParams::random_init(d, 3);
  const SeqMatrix seq = random_seq(d, 4);
  std::vector<double> tab(kTabularFeatureCount, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model_forward(p, &seq, tab));
  }
  state.SetItemsProcessed(state.iterations() * d.seq_len);
}
BENCHMARK(BM_ForwardDay)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

static void BM_ForwardBackwardDay(benchmark::State& state) {
  const ModelDims d = bench_dims(288, static_cast<int>(state.range(0)), 9);
  ModelParams p = ModelParams::random_init(d, 3);
  const SeqMatrix seq = random_seq(d, 4);
  std::vector<double> tab(kTabularFeatureCount, 0.5);
  Tape tape;
  for (auto _ : state) {
    model_forward(p, &seq, tab, &tape);
    auto grads = model_backward(p, tape, 1.0);
    benchmark::DoNotOptimize(grads.data());
  }
  state.SetItemsProcessed(state.iterations() * d.seq_len);
}
BENCHMARK(BM_ForwardBackwardDay)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

// Full clinical-length sequence, inference only.
static void BM_ForwardClinicalLength(benchmark::State& state) {
  const ModelDims d = bench_dims(1445, 64, 9);
  ModelParams p = ModelParams::random_init(d, 3);
  const SeqMatrix seq = random_seq(d, 4);
  std::vector<double> tab(kTabularFeatureCount, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model_forward(p, &seq, tab));
  }
  state.SetItemsProcessed(state.iterations() * d.seq_len);
}
BENCHMARK(BM_ForwardClinicalLength)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
