#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "asap/metrics.hpp"
#include "asap/stream_sim.hpp"
#include "asap/synth.hpp"

namespace {

void BM_ComputeAp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> score(0, 1);
  std::bernoulli_distribution hit(0.7);
  std::vector<asap::ScoredOutcome> outcomes;
  for (std::size_t i = 0; i < n; ++i) outcomes.push_back({score(rng), hit(rng)});
  for (auto _ : state) {
    benchmark::DoNotOptimize(asap::compute_ap(outcomes, n));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ComputeAp)->RangeMultiplier(8)->Range(64, 1 << 18)->Complexity();

// Scene of `objects` moving cars at 12 Hz, 20 s long, 250 ms constant runtime.
void BM_EvaluateStreaming(benchmark::State& state) {
  asap::SceneSpec spec;
  spec.duration_s = 20;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(-50, 50);
  std::uniform_real_distribution<double> vel(-10, 10);
  for (int i = 0; i < state.range(0); ++i) {
    asap::ObjectSpec o;
    o.category = asap::default_classes()[static_cast<std::size_t>(i) % 10];
    o.center = {pos(rng), pos(rng), 0};
    o.velocity = {vel(rng), vel(rng)};
    spec.objects.push_back(o);
  }
  const auto gt = asap::gen_scene(spec);
  asap::DetectorNoise noise;
  noise.pos_sigma = 0.3;
  noise.score_model = asap::ScoreModel::kInverseError;
  const auto dets = asap::oracle_detector(gt, noise, 1);
  std::vector<asap::TimestampUs> ts;
  for (const auto& f : gt) ts.push_back(f.timestamp_us);
  asap::RuntimeProfile p;
  p.distribution = asap::ConstantRuntime{250};
  const auto stream = asap::simulate_stream(spec.scene_id, ts, dets, p, {});
  std::vector<asap::FrameDetections> offline;
  for (const auto& [t, d] : dets) offline.push_back(d);

  for (auto _ : state) {
    benchmark::DoNotOptimize(asap::evaluate_streaming(gt, stream, offline));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * gt.size()));
}
BENCHMARK(BM_EvaluateStreaming)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
