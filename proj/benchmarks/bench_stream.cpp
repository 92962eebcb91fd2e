#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include "asap/baseline.hpp"
#include "asap/stream_sim.hpp"
#include "asap/synth.hpp"

namespace {

struct Fixture {
  std::vector<asap::TimestampUs> ts;
  std::map<asap::TimestampUs, asap::FrameDetections> dets;
};

Fixture scene(int objects, double seconds) {
  asap::SceneSpec spec;
  spec.duration_s = seconds;
  for (int i = 0; i < objects; ++i) {
    asap::ObjectSpec o;
    o.center = {i * 6.0, 0, 0};
    o.velocity = {5, 0.5 * i};
    spec.objects.push_back(o);
  }
  Fixture f;
  const auto gt = asap::gen_scene(spec);
  for (const auto& a : gt) f.ts.push_back(a.timestamp_us);
  asap::DetectorNoise noise;
  noise.vel_sigma = 0.5;
  f.dets = asap::oracle_detector(gt, noise, 2);
  return f;
}

void BM_SimulateStream(benchmark::State& state) {
  const Fixture f = scene(5, static_cast<double>(state.range(0)));
  asap::RuntimeProfile p;
  p.distribution = asap::LognormalRuntime{4.6, 0.3};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    asap::SimConfig cfg;
    cfg.seed = seed++;
    benchmark::DoNotOptimize(asap::simulate_stream("synthetic", f.ts, f.dets, p, cfg));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.ts.size()));
}
BENCHMARK(BM_SimulateStream)->Arg(20)->Arg(200);

void BM_SvPipeline(benchmark::State& state) {
  const Fixture f = scene(static_cast<int>(state.range(0)), 20);
  asap::RuntimeProfile p;
  p.distribution = asap::ConstantRuntime{250};
  const auto stream = asap::simulate_stream("synthetic", f.ts, f.dets, p, {});
  for (auto _ : state) {
    benchmark::DoNotOptimize(asap::sv_pipeline(stream, f.ts, {}));
  }
}
BENCHMARK(BM_SvPipeline)->Arg(5)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace
