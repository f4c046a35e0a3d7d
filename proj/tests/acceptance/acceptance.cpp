// Acceptance gate: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "emql/bench.hpp"
#include "emql/cms.hpp"
#include "emql/mips.hpp"
#include "emql/queryeval.hpp"
#include "emql/synthetic.hpp"
#include "emql/trainer.hpp"

using namespace emql;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// ---- criterion 1 ----------------------------------------------------------

struct SketchTheorem {
  SketchBenchResult result;
  double seconds = 0.0;
};

SketchTheorem sketch_theorem(std::uint64_t seed) {
  const auto t = Clock::now();
  SketchBenchConfig c;
  c.set_size = 50;
  c.candidates = 500;
  c.width = 128;
  c.depth = 16;
  c.trials = 2000;
  c.seed = seed;
  SketchTheorem out{run_sketch_bench(c), 0.0};
  out.seconds = seconds_since(t);
  return out;
}

// ---- criterion 2 ----------------------------------------------------------

struct Linearity {
  std::size_t add_pairs = 0;
  std::size_t add_exact = 0;
  std::size_t hadamard_pairs = 0;
  std::size_t hadamard_exact = 0;
  double seconds = 0.0;

  bool operator==(const Linearity& o) const {
    return add_pairs == o.add_pairs && add_exact == o.add_exact &&
           hadamard_pairs == o.hadamard_pairs && hadamard_exact == o.hadamard_exact;
  }
};

WeightedSet random_weighted(std::mt19937_64& rng, std::size_t count, std::size_t universe) {
  std::uniform_int_distribution<ElementId> id(0, static_cast<ElementId>(universe - 1));
  std::uniform_int_distribution<int> w(1, 16);
  WeightedSet s(universe);
  while (s.size() < count) s.set(id(rng), w(rng) / 4.0);
  return s;
}

bool collision_free(const WeightedSet& s, const HashFamily& f) {
  for (std::uint32_t j = 0; j < f.depth(); ++j) {
    std::set<std::uint32_t> cells;
    for (const auto& [id, w] : s) {
      if (!cells.insert(f.bucket(j, id)).second) return false;
    }
  }
  return true;
}

Linearity linearity(std::uint64_t seed) {
  const auto t = Clock::now();
  std::mt19937_64 rng(seed);
  Linearity out;
  constexpr std::size_t kUniverse = 100000;
  // Sum identity on arbitrary pairs.
  for (; out.add_pairs < 500; ++out.add_pairs) {
    const auto f = make_hash_family(rng(), 8, 64, kUniverse);
    const WeightedSet a = random_weighted(rng, 1 + rng() % 40, kUniverse);
    const WeightedSet b = random_weighted(rng, 1 + rng() % 40, kUniverse);
    WeightedSet sum = a;
    for (const auto& [id, w] : b) sum.add(id, w);
    out.add_exact +=
        sketch_add(sketch_from_set(a, f), sketch_from_set(b, f)) == sketch_from_set(sum, f);
  }
  // The product identity is exact only when no two members share a cell, so
  // pairs are drawn until their joint support is collision-free.
  while (out.hadamard_pairs < 500) {
    const auto f = make_hash_family(rng(), 8, 512, kUniverse);
    const WeightedSet a = random_weighted(rng, 1 + rng() % 6, kUniverse);
    WeightedSet b = random_weighted(rng, 1 + rng() % 6, kUniverse);
    for (const auto& [id, w] : a) {
      if (rng() % 2) b.set(id, w * 2.0);
    }
    WeightedSet joint = a;
    for (const auto& [id, w] : b) joint.set(id, 1.0);
    if (!collision_free(joint, *f)) continue;
    WeightedSet prod(kUniverse);
    for (const auto& [id, w] : a) {
      if (b.contains(id)) prod.set(id, w * b.weight(id));
    }
    ++out.hadamard_pairs;
    out.hadamard_exact +=
        sketch_hadamard(sketch_from_set(a, f), sketch_from_set(b, f)) == sketch_from_set(prod, f);
  }
  out.seconds = seconds_since(t);
  return out;
}

// ---- criterion 3 ----------------------------------------------------------

struct Localist {
  std::vector<std::size_t> exact;  // per template
  std::vector<std::size_t> total;
  double seconds = 0.0;

  bool operator==(const Localist& o) const { return exact == o.exact && total == o.total; }
};

Localist localist(std::uint64_t seed) {
  const auto t = Clock::now();
  const KnowledgeBase kb = make_localist_kb(20, 5, 16, seed);
  const TripleStore store = make_localist_store(kb);
  const QueryEngine engine(store);
  EvalMode mode;
  mode.k = 20;
  mode.relation_scale = 100.0;
  const KbSplit split{kb.triples, kb.triples};
  QueryGenOptions gen;
  gen.distinct = false;
  Localist out;
  for (Template tmpl : kAllTemplates) {
    const auto qs = generate_queries(split, 20, 5, tmpl, 100, seed, gen);
    std::size_t ok = 0;
    for (const auto& q : qs) ok += engine.evaluate_set(*q.query, mode).support() == q.gold;
    out.exact.push_back(ok);
    out.total.push_back(qs.size());
  }
  out.seconds = seconds_since(t);
  return out;
}

// ---- criteria 4-6 ---------------------------------------------------------

struct Trained {
  EvalReport entailment;
  EvalReport no_sketch;
  EvalReport generalization;
  double entailment_seconds = 0.0;  // KB, training and both evaluations
  double generalization_seconds = 0.0;
};

TrainConfig train_config(std::uint64_t seed) {
  TrainConfig c;
  c.dim = 64;
  c.learning_rate = 0.5;
  c.momentum = 0.9;
  c.batch_size = 64;
  c.steps = 400;
  c.seed = seed;
  return c;
}

std::vector<GeneratedQuery> query_set(const KbSplit& split, const KnowledgeBase& kb,
                                      std::uint64_t seed, const QueryGenOptions& gen,
                                      const std::vector<Template>& templates) {
  std::vector<GeneratedQuery> out;
  for (Template t : templates) {
    auto qs = generate_queries(split, kb.num_entities(), kb.num_relations(), t, 100, seed, gen);
    out.insert(out.end(), qs.begin(), qs.end());
  }
  return out;
}

Trained trained(std::uint64_t seed) {
  Trained out;
  SyntheticKbConfig sc;
  sc.seed = seed;
  const KnowledgeBase kb = make_synthetic_kb(sc);
  const std::vector<Template> all(kAllTemplates.begin(), kAllTemplates.end());

  {
    const auto t = Clock::now();
    const KbSplit split = make_splits(kb.triples, 0.0, seed);
    TrainConfig c = train_config(seed);
    c.mode = Regime::kEntailment;
    TripleStore store(kb.num_entities(), kb.num_relations(), split.full, c.dim);
    store.initialize_embeddings(seed);
    const auto examples = make_training_examples(split.full, kb.num_entities(), {}, seed);
    train(c, store, examples);
    const QueryEngine engine(store);
    const auto qs = query_set(split, kb, seed, {}, all);
    EvalOptions exact;
    out.entailment = evaluate_queries(engine, qs, exact);
    EvalOptions ablated;
    ablated.mode.use_sketches = false;
    out.no_sketch = evaluate_queries(engine, qs, ablated);
    out.entailment_seconds = seconds_since(t);
  }
  {
    const auto t = Clock::now();
    const KbSplit split = make_splits(kb.triples, 0.1, seed);
    TrainConfig c = train_config(seed);
    c.mode = Regime::kGeneralization;
    TripleStore store(kb.num_entities(), kb.num_relations(), split.training, c.dim);
    store.initialize_embeddings(seed);
    const auto examples = make_training_examples(split.training, kb.num_entities(), {}, seed);
    train(c, store, examples);
    const QueryEngine engine(store);
    QueryGenOptions gen;
    gen.mode = Regime::kGeneralization;
    const auto qs = query_set(split, kb, seed, gen, {Template::k1p});
    EvalOptions o;
    o.mode.final_sketch = FinalSketch::kVacuous;
    o.filter_known = true;
    out.generalization = evaluate_queries(engine, qs, o);
    out.generalization_seconds = seconds_since(t);
  }
  return out;
}

// ---- criterion 7 ----------------------------------------------------------

struct GradientCheck {
  std::size_t checked = 0;
  std::size_t within = 0;
  double worst = 0.0;
  double seconds = 0.0;
};

GradientCheck gradient_check(std::uint64_t seed) {
  const auto t = Clock::now();
  SyntheticKbConfig sc;
  sc.num_entities = 100;
  sc.num_relations = 5;
  sc.community_size = 10;
  sc.max_fanout = 4;
  sc.seed = seed;
  const KnowledgeBase kb = make_synthetic_kb(sc);
  TripleStore store(kb.num_entities(), kb.num_relations(), kb.triples, 16);
  store.initialize_embeddings(seed);
  store.build_triple_matrix();
  const auto examples = make_training_examples(kb.triples, kb.num_entities(), {}, seed);
  // Retrieving every triple keeps the candidate set fixed under perturbation.
  const TrainContext ctx = make_train_context(store, {}, kb.triples.size(), 1.0);

  std::vector<std::size_t> pools[2];
  for (std::size_t i = 0; i < examples.size(); ++i) {
    pools[examples[i].task == TrainTask::kFollow ? 0 : 1].push_back(i);
  }
  std::mt19937_64 rng(seed);
  GradientCheck out;
  while (out.checked < 20) {
    const auto& pool = pools[out.checked % 2];
    const TrainingExample& ex = examples[pool[rng() % pool.size()]];
    const Gradients g = loss_gradients(ex, store, ctx);
    const bool rel = ex.task == TrainTask::kFollow && rng() % 2 == 0;
    const auto& grad = rel ? g.relations : g.entities;
    // Draw among parameters the example actually touches.
    std::vector<std::size_t> touched;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      if (std::abs(grad[i]) > 1e-5) touched.push_back(i);
    }
    if (touched.empty()) continue;
    const std::size_t i = touched[rng() % touched.size()];
    Matrix& m = rel ? store.mutable_relations() : store.mutable_entities();
    float& p = m.data()[i];
    const float orig = p;
    p = orig + 1e-3f;
    const float up = p;
    store.build_triple_matrix();
    const double lp = example_loss(ex, store, ctx);
    p = orig - 1e-3f;
    const float down = p;
    store.build_triple_matrix();
    const double lm = example_loss(ex, store, ctx);
    p = orig;
    store.build_triple_matrix();
    const double fd = (lp - lm) / (static_cast<double>(up) - static_cast<double>(down));
    const double err = std::abs(fd - grad[i]) / std::max(std::abs(fd), std::abs(grad[i]));
    out.worst = std::max(out.worst, err);
    out.within += err <= 1e-3;
    ++out.checked;
  }
  out.seconds = seconds_since(t);
  return out;
}

// ---- criterion 8 ----------------------------------------------------------

struct MipsCheck {
  std::size_t instances = 0;
  std::size_t exact = 0;
  std::size_t with_ties = 0;
  double seconds = 0.0;
};

std::vector<std::uint32_t> full_scan(std::span<const float> q, const Matrix& m, std::size_t k) {
  std::vector<std::pair<double, std::uint32_t>> s;
  for (std::uint32_t r = 0; r < m.rows(); ++r) {
    double v = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) v += static_cast<double>(q[c]) * m(r, c);
    s.push_back({v, r});
  }
  std::stable_sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < std::min(k, s.size()); ++i) ids.push_back(s[i].second);
  return ids;
}

MipsCheck mips_check(std::uint64_t seed) {
  const auto t = Clock::now();
  std::mt19937_64 rng(seed);
  MipsCheck out;
  for (; out.instances < 100; ++out.instances) {
    const std::size_t rows = 50 + rng() % 2000, cols = 1 + rng() % 64, k = 1 + rng() % 100;
    Matrix m(rows, cols);
    std::vector<float> q(cols);
    const bool ties = out.instances % 2 == 0;
    if (ties) {
      // Few distinct integer values and duplicated rows force equal scores.
      std::uniform_int_distribution<int> v(-1, 1);
      for (auto& x : m.data()) x = static_cast<float>(v(rng));
      for (std::size_t r = 1; r < rows; r += 3) {
        std::copy(m.row(r - 1).begin(), m.row(r - 1).end(), m.row(r).begin());
      }
      for (auto& x : q) x = static_cast<float>(v(rng));
      ++out.with_ties;
    } else {
      std::normal_distribution<float> v(0.0f, 1.0f);
      for (auto& x : m.data()) x = v(rng);
      for (auto& x : q) x = v(rng);
    }
    out.exact += top_k(q, m, k).ids == full_scan(q, m, k);
  }
  out.seconds = seconds_since(t);
  return out;
}

// ---- suite ------------------------------------------------------------------

struct Suite {
  SketchTheorem c1;
  Linearity c2;
  Localist c3;
  Trained c456;
};

Suite run_suite(std::uint64_t seed) {
  return {sketch_theorem(seed), linearity(seed), localist(seed), trained(seed)};
}

bool same(const Suite& a, const Suite& b) {
  return a.c1.result == b.c1.result && a.c2 == b.c2 && a.c3 == b.c3 &&
         same_results(a.c456.entailment, b.c456.entailment) &&
         same_results(a.c456.no_sketch, b.c456.no_sketch) &&
         same_results(a.c456.generalization, b.c456.generalization);
}

int failures = 0;

void report(int id, const std::string& name, const Verdict& v) {
  std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << v.detail
            << std::endl;
  failures += !v.pass;
}

}  // namespace

int main() {
  constexpr std::uint64_t kSeed = 20240601;
  const Suite first = run_suite(kSeed);

  {
    const auto& r = first.c1.result;
    report(1, "sketch recovery theorem",
           {r.failure_rate <= r.bound && first.c1.seconds <= 10.0,
            fmt("failure rate %.4f (%zu/%zu) vs bound %.4f (delta %.4f), %.2f s", r.failure_rate,
                r.failures, r.trials, r.bound, r.delta, first.c1.seconds)});
  }
  {
    const auto& r = first.c2;
    report(2, "sketch linearity",
           {r.add_exact == r.add_pairs && r.hadamard_exact == r.hadamard_pairs && r.seconds <= 1.0,
            fmt("add %zu/%zu bit-exact, hadamard %zu/%zu bit-exact (collision-free pairs), %.2f s",
                r.add_exact, r.add_pairs, r.hadamard_exact, r.hadamard_pairs, r.seconds)});
  }
  {
    const auto& r = first.c3;
    std::size_t ok = 0, total = 0;
    bool full = true;
    std::string per;
    for (std::size_t i = 0; i < r.total.size(); ++i) {
      ok += r.exact[i];
      total += r.total[i];
      full = full && r.total[i] == 100 && r.exact[i] == r.total[i];
      per += fmt(" %s=%zu/%zu", std::string(template_name(kAllTemplates[i])).c_str(), r.exact[i],
                 r.total[i]);
    }
    report(3, "localist faithfulness",
           {full && r.seconds <= 30.0,
            fmt("%zu/%zu exact support matches;", ok, total) + per + fmt(", %.2f s", r.seconds)});
  }
  const auto& tr = first.c456;
  {
    const double avg = 100.0 * tr.entailment.average.hits3;
    const auto* p1 = tr.entailment.find(Template::k1p);
    const double one = p1 ? 100.0 * p1->metrics.hits3 : 0.0;
    report(4, "trained entailment faithfulness",
           {avg >= 85.0 && one >= 95.0 && tr.entailment_seconds <= 900.0,
            fmt("avg Hits@3 %.1f (>= 85), 1p Hits@3 %.1f (>= 95), %.1f s", avg, one,
                tr.entailment_seconds)});
  }
  {
    const double with = 100.0 * tr.entailment.average.hits3;
    const double without = 100.0 * tr.no_sketch.average.hits3;
    report(5, "sketch ablation",
           {with - without >= 10.0,
            fmt("avg Hits@3 %.1f with sketches, %.1f without (drop %.1f >= 10)", with, without,
                with - without)});
  }
  {
    const auto* p1 = tr.generalization.find(Template::k1p);
    const double hits = p1 ? p1->metrics.hits3 : 0.0;
    const double base = p1 ? p1->random_hits3 : 0.0;
    report(6, "generalization smoke test",
           {p1 && hits > 0.0 && hits >= 20.0 * base,
            fmt("1p Hits@3 %.4f on %zu queries vs random %.4f (ratio %.1f >= 20), %.1f s", hits,
                p1 ? p1->count : 0, base, base > 0 ? hits / base : 0.0,
                tr.generalization_seconds)});
  }
  {
    const GradientCheck r = gradient_check(kSeed);
    report(7, "gradient check",
           {r.within == r.checked && r.checked == 20 && r.seconds <= 5.0,
            fmt("%zu/%zu parameters within 1e-3 relative error (worst %.2e), %.2f s", r.within,
                r.checked, r.worst, r.seconds)});
  }
  {
    const MipsCheck r = mips_check(kSeed);
    report(8, "MIPS exactness",
           {r.exact == r.instances && r.seconds <= 2.0,
            fmt("%zu/%zu instances equal the full scan (%zu with ties), %.2f s", r.exact,
                r.instances, r.with_ties, r.seconds)});
  }
  {
    const Suite second = run_suite(kSeed);
    report(9, "determinism", {same(first, second), "criteria 1-6 rerun with the same seed"});
  }
  return failures == 0 ? 0 : 1;
}
