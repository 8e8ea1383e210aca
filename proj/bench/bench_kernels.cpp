#include <benchmark/benchmark.h>

#include <random>

#include "coskel/medial.hpp"
#include "coskel/synthetic.hpp"

using namespace coskel;

namespace {

ScalarMap noise_map(int side) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScalarMap m(side, side);
  for (double& v : m.values()) v = u(rng);
  return m;
}

BinaryMask blob(int side) {
  const double s = side;
  return capsule_union(side, side,
                       {{0.2 * s, 0.5 * s, 0.8 * s, 0.5 * s}, {0.5 * s, 0.2 * s, 0.5 * s, 0.8 * s},
                        {0.3 * s, 0.3 * s, 0.7 * s, 0.7 * s}},
                       0.06 * s);
}

BinaryMask sparse_sites(int side) {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution on(0.001);
  BinaryMask m(side, side);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = on(rng);
  return m;
}

Exec exec_of(const benchmark::State& st) { return st.range(1) ? Exec::parallel : Exec::serial; }

void BM_BoxSum(benchmark::State& st) {
  const ScalarMap m = noise_map(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(box_sum(m, PixelNeighborhood(2), exec_of(st)));
}

void BM_SquaredDistanceTransform(benchmark::State& st) {
  const BinaryMask m = blob(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(squared_distance_transform(m, exec_of(st)));
}

void BM_DistanceToSites(benchmark::State& st) {
  const BinaryMask m = sparse_sites(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(squared_distance_to_sites(m, exec_of(st)));
}

void BM_MedialAxis(benchmark::State& st) {
  const BinaryMask m = blob(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(medial_axis(m, exec_of(st)));
}

// Arguments: {side, 0 = serial | 1 = parallel}.
void sizes(benchmark::internal::Benchmark* b) {
  for (int side : {256, 1024})
    for (int par : {0, 1}) b->Args({side, par});
  b->ArgNames({"side", "parallel"})->Unit(benchmark::kMillisecond)->UseRealTime();
}

}  // namespace

BENCHMARK(BM_BoxSum)->Apply(sizes);
BENCHMARK(BM_SquaredDistanceTransform)->Apply(sizes);
BENCHMARK(BM_DistanceToSites)->Apply(sizes);
BENCHMARK(BM_MedialAxis)->Apply(sizes);

BENCHMARK_MAIN();
