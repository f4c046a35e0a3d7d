#include <benchmark/benchmark.h>

#include "emql/query.hpp"
#include "emql/queryeval.hpp"
#include "emql/synthetic.hpp"

namespace {

void BM_Follow(benchmark::State& state) {
  emql::SyntheticKbConfig config;
  config.num_entities = static_cast<std::size_t>(state.range(0));
  const emql::KnowledgeBase kb = emql::make_synthetic_kb(config);
  emql::TripleStore store(kb.num_entities(), kb.num_relations(), kb.triples, 64);
  store.initialize_embeddings(1);
  store.build_triple_matrix();
  const emql::QueryEngine engine(store);
  const emql::Triple t = kb.triples.front();
  const auto q = emql::make_follow(emql::make_basic({t.subject}), {t.relation});
  emql::EvalMode mode;
  mode.k = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(engine.evaluate(*q, mode));
}
BENCHMARK(BM_Follow)->Args({1000, 100})->Args({1000, 1000})->Args({5000, 1000});

}  // namespace
