#include <random>

#include <benchmark/benchmark.h>

#include "emql/cms.hpp"

namespace {

emql::WeightedSet random_set(std::size_t n, std::mt19937_64& rng) {
  emql::WeightedSet s(100000);
  while (s.size() < n) s.set(static_cast<emql::ElementId>(rng() % 100000), 1.0);
  return s;
}

void BM_SketchFromSet(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto family = emql::make_hash_family(7, 20, 2000, 100000);
  const auto set = random_set(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(emql::sketch_from_set(set, family));
}
BENCHMARK(BM_SketchFromSet)->Arg(10)->Arg(1000);

void BM_SketchHadamard(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto family = emql::make_hash_family(7, 20, 2000, 100000);
  const auto a = emql::sketch_from_set(random_set(100, rng), family);
  const auto b = emql::sketch_from_set(random_set(100, rng), family);
  for (auto _ : state) benchmark::DoNotOptimize(emql::sketch_hadamard(a, b));
}
BENCHMARK(BM_SketchHadamard);

void BM_Lookup(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto family = emql::make_hash_family(7, 20, 2000, 100000);
  const auto sketch = emql::sketch_from_set(random_set(100, rng), family);
  emql::ElementId id = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(emql::cm_lookup(sketch, id));
    id = (id + 7919) % 100000;
  }
}
BENCHMARK(BM_Lookup);

}  // namespace
