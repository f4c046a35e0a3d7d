#include <random>

#include <benchmark/benchmark.h>

#include "emql/mips.hpp"

namespace {

emql::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<float> d(0.0f, 1.0f);
  emql::Matrix m(rows, cols);
  for (auto& x : m.data()) x = d(rng);
  return m;
}

void BM_TopK(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(1);
  const emql::Matrix m = random_matrix(rows, 192, rng);
  const emql::Matrix q = random_matrix(1, 192, rng);
  for (auto _ : state) benchmark::DoNotOptimize(emql::top_k(q.row(0), m, k));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_TopK)->Args({10000, 10})->Args({10000, 1000})->Args({100000, 1000});

}  // namespace
