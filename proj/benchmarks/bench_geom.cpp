#include <benchmark/benchmark.h>

#include <numbers>
#include <random>
#include <vector>

#include "asap/geom.hpp"

namespace {

std::vector<asap::BevRect> rects(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-2, 2);
  std::uniform_real_distribution<double> dim(0.5, 5);
  std::uniform_real_distribution<double> yaw(-std::numbers::pi, std::numbers::pi);
  std::vector<asap::BevRect> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({pos(rng), pos(rng), dim(rng), dim(rng), yaw(rng)});
  }
  return out;
}

void BM_BevIou(benchmark::State& state) {
  const auto a = rects(1024, 1);
  const auto b = rects(1024, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(asap::bev_iou(a[i & 1023], b[i & 1023]));
    ++i;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_BevIou);

void BM_Slerp(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<asap::Quaternion> qs;
  for (int i = 0; i < 1024; ++i) {
    qs.push_back(asap::Quaternion::normalized(g(rng), g(rng), g(rng), g(rng)));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(asap::slerp(qs[i & 1023], qs[(i + 1) & 1023], 0.37));
    ++i;
  }
}
BENCHMARK(BM_Slerp);

}  // namespace
