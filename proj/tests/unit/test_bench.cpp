#include <gtest/gtest.h>

#include <set>

#include "emql/bench.hpp"
#include "emql/errors.hpp"
#include "emql/synthetic.hpp"
#include "helpers.hpp"

namespace emql {
namespace {

KnowledgeBase bench_kb() {
  SyntheticKbConfig c;
  c.num_entities = 200;
  c.num_relations = 6;
  c.community_size = 10;
  c.seed = 3;
  return make_synthetic_kb(c);
}

TEST(MakeSplits, ZeroFractionKeepsEverything) {
  const auto kb = bench_kb();
  const KbSplit s = make_splits(kb.triples, 0.0, 1);
  EXPECT_EQ(s.training, kb.triples);
  EXPECT_EQ(s.full, kb.triples);
  EXPECT_TRUE(s.held_out().empty());
}

TEST(MakeSplits, PartitionIsDeterministicAndComplete) {
  const auto kb = bench_kb();
  const KbSplit a = make_splits(kb.triples, 0.1, 9);
  const KbSplit b = make_splits(kb.triples, 0.1, 9);
  const KbSplit c = make_splits(kb.triples, 0.1, 10);
  EXPECT_EQ(a.training, b.training);
  EXPECT_NE(a.training, c.training);
  const auto held = a.held_out();
  EXPECT_EQ(held.size(), static_cast<std::size_t>(std::llround(0.1 * kb.triples.size())));
  std::multiset<Triple> joined(a.training.begin(), a.training.end());
  joined.insert(held.begin(), held.end());
  EXPECT_EQ(std::vector<Triple>(joined.begin(), joined.end()), kb.triples);
}

TEST(MakeSplits, RejectsBadFractions) {
  const std::vector<Triple> t = {{0, 0, 1}};
  EXPECT_THROW(make_splits(t, -0.1, 1), ArgumentError);
  EXPECT_THROW(make_splits(t, 1.0, 1), ArgumentError);
}

TEST(MakeSplits, ReportsEntitiesWithoutTrainingTriples) {
  KbSplit s;
  s.full = {{0, 0, 1}, {0, 2, 3}};
  s.training = {{0, 0, 1}};
  EXPECT_EQ(entities_missing_from_training(s), (std::vector<EntityId>{2, 3}));
}

TEST(Templates, NamesRoundTrip) {
  for (Template t : kAllTemplates) EXPECT_EQ(parse_template(template_name(t)), t);
  EXPECT_THROW(parse_template("4p"), ArgumentError);
  EXPECT_EQ(parse_templates("all").size(), 9u);
  EXPECT_EQ(parse_templates("1p,2i,1p"), (std::vector<Template>{Template::k1p, Template::k2i}));
  EXPECT_THROW(parse_templates("1p,"), ArgumentError);
}

TEST(GenerateQueries, EntailmentGoldIsFullKbAnswer) {
  const auto kb = bench_kb();
  const KbSplit split{kb.triples, kb.triples};
  const SymbolicKb sym(kb.triples, kb.num_entities(), kb.num_relations());
  for (Template t : kAllTemplates) {
    const auto qs = generate_queries(split, kb.num_entities(), kb.num_relations(), t, 30, 5);
    EXPECT_EQ(qs.size(), 30u) << template_name(t);
    std::set<std::string> distinct;
    for (const auto& q : qs) {
      EXPECT_EQ(q.tmpl, t);
      EXPECT_FALSE(q.gold.empty());
      EXPECT_EQ(q.gold, symbolic_evaluate(*q.query, sym));
      EXPECT_TRUE(q.known.empty());
      distinct.insert(print_query(*q.query, kb.vocab));
    }
    EXPECT_EQ(distinct.size(), qs.size());
  }
}

TEST(GenerateQueries, TemplateShapes) {
  const auto kb = bench_kb();
  const KbSplit split{kb.triples, kb.triples};
  const std::map<Template, std::pair<std::size_t, std::size_t>> shape = {
      {Template::k1p, {1, 2}}, {Template::k2p, {2, 3}}, {Template::k3p, {3, 4}},
      {Template::k2i, {2, 5}}, {Template::k3i, {2, 7}}, {Template::kIp, {3, 6}},
      {Template::kPi, {3, 6}}, {Template::k2u, {2, 5}}, {Template::kUp, {3, 6}}};
  for (const auto& [t, dims] : shape) {
    for (const auto& q : generate_queries(split, kb.num_entities(), kb.num_relations(), t, 5, 1)) {
      EXPECT_EQ(query_depth(*q.query), dims.first) << template_name(t);
      EXPECT_EQ(query_size(*q.query), dims.second) << template_name(t);
    }
  }
}

TEST(GenerateQueries, GeneralizationQueriesNeedHeldOutFacts) {
  const auto kb = bench_kb();
  const KbSplit split = make_splits(kb.triples, 0.1, 4);
  const SymbolicKb full(split.full, kb.num_entities(), kb.num_relations());
  const SymbolicKb train(split.training, kb.num_entities(), kb.num_relations());
  QueryGenOptions o;
  o.mode = Regime::kGeneralization;
  for (Template t : kAllTemplates) {
    for (const auto& q : generate_queries(split, kb.num_entities(), kb.num_relations(), t, 20, 6, o)) {
      EXPECT_EQ(q.gold, symbolic_evaluate(*q.query, full));
      EXPECT_EQ(q.known, symbolic_evaluate(*q.query, train));
      EXPECT_LT(q.known.size(), q.gold.size());
      EXPECT_TRUE(std::includes(q.gold.begin(), q.gold.end(), q.known.begin(), q.known.end()));
    }
  }
  o.disjoint = true;
  const auto qs = generate_queries(split, kb.num_entities(), kb.num_relations(), Template::k1p, 20, 6, o);
  EXPECT_FALSE(qs.empty());
  for (const auto& q : qs) EXPECT_TRUE(q.known.empty());
}

TEST(GenerateQueries, GeneralizationNeedsHoldout) {
  const auto kb = bench_kb();
  const KbSplit split{kb.triples, kb.triples};
  QueryGenOptions o;
  o.mode = Regime::kGeneralization;
  EXPECT_THROW(generate_queries(split, kb.num_entities(), kb.num_relations(), Template::k1p, 5, 1, o),
               ArgumentError);
}

TEST(GenerateQueries, TinyKbYieldsFewerQueries) {
  const std::vector<Triple> t = {{0, 0, 1}};
  const KbSplit split{t, t};
  EXPECT_EQ(generate_queries(split, 2, 1, Template::k1p, 10, 1).size(), 1u);
  EXPECT_TRUE(generate_queries(split, 2, 1, Template::k2p, 10, 1).empty());
}

TEST(GenerateQueries, MaxAnswersFilter) {
  const auto kb = bench_kb();
  const KbSplit split{kb.triples, kb.triples};
  QueryGenOptions o;
  o.max_answers = 2;
  for (const auto& q : generate_queries(split, kb.num_entities(), kb.num_relations(), Template::k2u, 20, 2, o)) {
    EXPECT_LE(q.gold.size(), 2u);
  }
}

TEST(Score, Examples) {
  const EntityId gold[] = {7};
  const EntityId first[] = {7, 1, 2};
  const EntityId fourth[] = {1, 2, 3, 7, 9};
  const EntityId missing[] = {1, 2};
  EXPECT_EQ(score(first, gold), (QueryMetrics{1, 1, 1, 1}));
  EXPECT_EQ(score(fourth, gold), (QueryMetrics{0, 0, 1, 0.25}));
  EXPECT_EQ(score(missing, gold), (QueryMetrics{0, 0, 0, 0}));
  EXPECT_EQ(score({}, gold), (QueryMetrics{0, 0, 0, 0}));
  EXPECT_THROW(score(first, {}), ArgumentError);
  const EntityId two_gold[] = {2, 3};
  EXPECT_EQ(score(fourth, two_gold), (QueryMetrics{0, 1, 1, 0.5}));
}

TEST(RandomHits, MatchesExhaustiveCount) {
  // Enumerate all 3-subsets of the top positions directly.
  for (std::size_t m : {3u, 5u, 9u}) {
    for (std::size_t g = 1; g <= m; ++g) {
      std::size_t hit = 0, total = 0;
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
          for (std::size_t c = b + 1; c < m; ++c) {
            ++total;
            hit += (a < g || b < g || c < g);
          }
      EXPECT_NEAR(random_hits_at_k(m, g, 3), double(hit) / double(total), 1e-12) << m << " " << g;
    }
  }
  EXPECT_NEAR(random_hits_at_k(1000, 1, 3), 0.003, 1e-12);
  EXPECT_EQ(random_hits_at_k(2, 1, 3), 1.0);
}

TEST(EvalReport, AveragesAndFormatting) {
  const KnowledgeBase kb = make_localist_kb(20, 5, 16, 77);
  const TripleStore store = make_localist_store(kb);
  const QueryEngine engine(store);
  const KbSplit split{kb.triples, kb.triples};
  std::vector<GeneratedQuery> qs;
  for (Template t : {Template::k1p, Template::k2p, Template::k2u}) {
    auto part = generate_queries(split, 20, 5, t, 10, 1);
    qs.insert(qs.end(), part.begin(), part.end());
  }
  EvalOptions o;
  o.mode.k = 20;
  o.mode.relation_scale = 100.0;
  EvalReport r = evaluate_queries(engine, qs, o);
  r.config = {{"mode", "entailment"}};
  ASSERT_EQ(r.templates.size(), 3u);
  double sum = 0.0;
  for (const auto& t : r.templates) {
    EXPECT_EQ(t.count, 10u);
    EXPECT_GE(t.metrics.hits3, 0.0);
    EXPECT_LE(t.metrics.hits3, 1.0);
    sum += t.metrics.hits3;
  }
  EXPECT_DOUBLE_EQ(r.average.hits3, sum / 3.0);
  EXPECT_EQ(r.find(Template::k1p)->metrics.hits3, 1.0);
  EXPECT_EQ(r.find(Template::k3p), nullptr);

  const std::string table = format_table(r, false);
  EXPECT_NE(table.find("# mode = entailment"), std::string::npos);
  EXPECT_NE(table.find("Hits@3"), std::string::npos);
  EXPECT_NE(table.find("100.0"), std::string::npos);
  EXPECT_NE(table.find("Avg"), std::string::npos);
  EXPECT_EQ(table.find("wall clock"), std::string::npos);
  const std::string tsv = format_tsv(r);
  EXPECT_EQ(tsv.rfind("template\tqueries\thits1", 0), 0u);
  EXPECT_NE(tsv.find("\navg\t30\t"), std::string::npos);

  EvalReport again = evaluate_queries(engine, qs, o);
  again.config = r.config;
  EXPECT_TRUE(same_results(r, again));
}

TEST(EvalReport, FilterKnownScoresOnlyNewAnswers) {
  const KnowledgeBase kb = make_localist_kb(20, 5, 16, 77);
  const TripleStore store = make_localist_store(kb);
  const QueryEngine engine(store);
  // The engine ranks the true answers; pretend all but the last are known.
  const auto q = make_follow(make_basic({kb.triples[0].subject}), {kb.triples[0].relation});
  const SymbolicKb sym(kb.triples, 20, 5);
  GeneratedQuery g{Template::k1p, q, symbolic_evaluate(*q, sym), {}};
  EvalOptions o;
  o.mode.k = 20;
  o.mode.relation_scale = 100.0;
  o.filter_known = true;
  EXPECT_EQ(evaluate_queries(engine, std::vector{g}, o).average.hits1, 1.0);
  g.known = {g.gold.begin(), g.gold.end() - 1};
  if (!g.known.empty()) {
    const auto r = evaluate_queries(engine, std::vector{g}, o);
    EXPECT_EQ(r.average.hits1, 1.0);
    EXPECT_NEAR(r.templates[0].random_hits3, random_hits_at_k(20 - g.known.size(), 1, 3), 1e-12);
  }
}

TEST(SketchBench, RateWithinTheoreticalBound) {
  SketchBenchConfig c;
  c.trials = 200;
  c.seed = 3;
  const auto r = run_sketch_bench(c);
  EXPECT_EQ(r.trials, 200u);
  EXPECT_NEAR(r.delta, 500.0 / 65536.0, 1e-15);
  EXPECT_LE(r.failure_rate, r.bound);
  EXPECT_EQ(run_sketch_bench(c), r);
}

TEST(SketchBench, TinySketchesFail) {
  SketchBenchConfig c;
  c.width = 4;
  c.depth = 1;
  c.trials = 20;
  EXPECT_EQ(run_sketch_bench(c).failures, 20u);
  c.set_size = 600;
  EXPECT_THROW(run_sketch_bench(c), ArgumentError);
}

}  // namespace
}  // namespace emql
