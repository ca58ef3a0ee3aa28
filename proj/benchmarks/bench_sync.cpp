#include <benchmark/benchmark.h>

#include "glyco/rng.hpp"
#include "glyco/sync.hpp"

using namespace glyco;

namespace {

// Clinical-scale streams: 7 days of 5-minute CGM against 30-second epochs.
struct ClinicalScale {
  CgmSeries cgm;
  ActivitySeries act;

  ClinicalScale() {
    rng::SplitMix64 rng(1);
    cgm.patient_id = "bench";
    act.patient_id = "bench";
    act.epoch_length = 30;
    for (int i = 0; i < 20160; ++i) {
      ActivitySample a;
      a.dx = rng.uniform(0.0, 300.0);
      a.dy = rng.uniform(0.0, 300.0);
      a.dz = rng.uniform(0.0, 300.0);
      a.steps = std::floor(rng.uniform(0.0, 50.0));
      a.i_sit = 10;
      a.i_std = 10;
      a.i_lie = 5;
      a.i_off = 5;
      act.samples.push_back({i * 30, a});
    }
    for (int i = 0; i < 2016; ++i)
      cgm.samples.push_back({i * 300 + 13, rng.uniform(60.0, 250.0)});
  }
};

const ClinicalScale& data() {
  static ClinicalScale d;
  return d;
}

} // namespace

static void BM_FusePatientClinicalScale(benchmark::State& state) {
  SyncConfig cfg; // defaults: |W| = 20
  for (auto _ : state) {
    FusedSequence fused = fuse_patient(data().cgm, data().act, cfg);
    benchmark::DoNotOptimize(fused.samples.data());
  }
  state.SetItemsProcessed(state.iterations() * data().cgm.samples.size());
}
BENCHMARK(BM_FusePatientClinicalScale)->Unit(benchmark::kMillisecond);

static void BM_NearestWindow(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  Timestamp t = 0;
  for (auto _ : state) {
    t = (t + 90001) % (20160 * 30);
    auto idx = nearest_activity_window(data().act, t, w);
    benchmark::DoNotOptimize(idx.data());
  }
}
BENCHMARK(BM_NearestWindow)->Arg(4)->Arg(20)->Arg(64);

static void BM_TruncateCohort(benchmark::State& state) {
  std::vector<FusedSequence> cohort;
  rng::SplitMix64 rng(2);
  for (int p = 0; p < 50; ++p) {
    FusedSequence s;
    s.patient_id = "p" + std::to_string(p);
    const int len = 1445 + static_cast<int>(rng.bounded(572));
    for (int i = 0; i < len; ++i) s.samples.push_back({i * 300, 100.0, {}});
    cohort.push_back(std::move(s));
  }
  for (auto _ : state) {
    auto copy = cohort;
    auto r = truncate_cohort(std::move(copy));
    benchmark::DoNotOptimize(r.common_length);
  }
}
BENCHMARK(BM_TruncateCohort)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
