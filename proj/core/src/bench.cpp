#include "emql/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "emql/cms.hpp"
#include "emql/errors.hpp"

namespace emql {

KbSplit make_splits(std::span<const Triple> kb, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ArgumentError("holdout fraction must be in [0, 1)");
  }
  KbSplit split;
  split.full.assign(kb.begin(), kb.end());
  const auto held =
      static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(kb.size())));
  std::vector<std::size_t> order(kb.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> drop(kb.size(), false);
  for (std::size_t i = 0; i < held; ++i) drop[order[i]] = true;
  for (std::size_t i = 0; i < kb.size(); ++i) {
    if (!drop[i]) split.training.push_back(kb[i]);
  }
  return split;
}

std::vector<EntityId> entities_missing_from_training(const KbSplit& split) {
  std::set<EntityId> seen;
  for (const auto& t : split.training) {
    seen.insert(t.subject);
    seen.insert(t.object);
  }
  std::set<EntityId> missing;
  for (const auto& t : split.full) {
    for (EntityId e : {t.subject, t.object}) {
      if (!seen.contains(e)) missing.insert(e);
    }
  }
  return {missing.begin(), missing.end()};
}

std::string_view template_name(Template t) {
  static constexpr std::array<std::string_view, 9> names = {"1p", "2p", "3p", "2i", "3i",
                                                            "ip", "pi", "2u", "up"};
  return names[static_cast<std::size_t>(t)];
}

Template parse_template(std::string_view name) {
  for (Template t : kAllTemplates) {
    if (template_name(t) == name) return t;
  }
  throw ArgumentError("unknown query template '" + std::string(name) + "'");
}

std::vector<Template> parse_templates(std::string_view list) {
  if (list == "all") return {kAllTemplates.begin(), kAllTemplates.end()};
  std::vector<Template> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    const Template t = parse_template(list.substr(pos, comma - pos));
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    pos = comma + 1;
  }
  return out;
}

namespace {

using Key = std::vector<std::uint32_t>;

class PathSampler {
 public:
  PathSampler(std::span<const Triple> triples, std::size_t num_entities)
      : triples_(triples), out_(num_entities), in_(num_entities) {
    for (std::size_t i = 0; i < triples.size(); ++i) {
      out_[triples[i].subject].push_back(i);
      in_[triples[i].object].push_back(i);
    }
  }

  const Triple& any(std::mt19937_64& rng) const { return triples_[uniform(triples_.size(), rng)]; }

  const Triple* out_of(EntityId x, std::mt19937_64& rng) const { return pick(out_[x], rng); }
  const Triple* into(EntityId y, std::mt19937_64& rng) const { return pick(in_[y], rng); }

  // `count` triples into y with pairwise distinct (subject, relation).
  std::optional<std::vector<Triple>> distinct_into(EntityId y, std::size_t count,
                                                   std::mt19937_64& rng) const {
    std::vector<std::size_t> ids = in_[y];
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<Triple> out;
    for (std::size_t i : ids) {
      const Triple& t = triples_[i];
      const bool dup = std::any_of(out.begin(), out.end(), [&](const Triple& o) {
        return o.subject == t.subject && o.relation == t.relation;
      });
      if (!dup) out.push_back(t);
      if (out.size() == count) return out;
    }
    return std::nullopt;
  }

 private:
  static std::size_t uniform(std::size_t n, std::mt19937_64& rng) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  }
  const Triple* pick(const std::vector<std::size_t>& ids, std::mt19937_64& rng) const {
    if (ids.empty()) return nullptr;
    return &triples_[ids[uniform(ids.size(), rng)]];
  }

  std::span<const Triple> triples_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

QueryPtr hop(EntityId x, RelationId r) { return make_follow(make_basic({x}), {r}); }

struct Draft {
  QueryPtr query;
  Key key;
};

std::optional<Draft> draft(Template tmpl, const PathSampler& s, std::mt19937_64& rng) {
  const auto tag = static_cast<std::uint32_t>(tmpl);
  switch (tmpl) {
    case Template::k1p: {
      const Triple& t = s.any(rng);
      return Draft{hop(t.subject, t.relation), {tag, t.subject, t.relation}};
    }
    case Template::k2p:
    case Template::k3p: {
      const Triple& t1 = s.any(rng);
      const Triple* t2 = s.out_of(t1.object, rng);
      if (!t2) return std::nullopt;
      if (tmpl == Template::k2p) {
        return Draft{make_follow(hop(t1.subject, t1.relation), {t2->relation}),
                     {tag, t1.subject, t1.relation, t2->relation}};
      }
      const Triple* t3 = s.out_of(t2->object, rng);
      if (!t3) return std::nullopt;
      return Draft{
          make_follow(make_follow(hop(t1.subject, t1.relation), {t2->relation}), {t3->relation}),
          {tag, t1.subject, t1.relation, t2->relation, t3->relation}};
    }
    case Template::k2i:
    case Template::k3i:
    case Template::kIp: {
      const EntityId y = s.any(rng).object;
      const std::size_t arity = tmpl == Template::k3i ? 3 : 2;
      const auto branches = s.distinct_into(y, arity, rng);
      if (!branches) return std::nullopt;
      std::vector<QueryPtr> ops;
      Key key{tag};
      for (const auto& t : *branches) {
        ops.push_back(hop(t.subject, t.relation));
        key.push_back(t.subject);
        key.push_back(t.relation);
      }
      if (tmpl != Template::kIp) return Draft{make_intersect(std::move(ops)), std::move(key)};
      const Triple* t3 = s.out_of(y, rng);
      if (!t3) return std::nullopt;
      key.push_back(t3->relation);
      return Draft{make_follow(make_intersect(std::move(ops)), {t3->relation}), std::move(key)};
    }
    case Template::kPi: {
      const Triple& t2 = s.any(rng);
      const Triple* t1 = s.into(t2.subject, rng);
      const Triple* t3 = s.into(t2.object, rng);
      if (!t1 || !t3) return std::nullopt;
      if (t3->subject == t2.subject && t3->relation == t2.relation) return std::nullopt;
      return Draft{make_intersect({make_follow(hop(t1->subject, t1->relation), {t2.relation}),
                                   hop(t3->subject, t3->relation)}),
                   {tag, t1->subject, t1->relation, t2.relation, t3->subject, t3->relation}};
    }
    case Template::k2u:
    case Template::kUp: {
      const Triple& t1 = s.any(rng);
      const Triple& t2 = s.any(rng);
      if (t1.subject == t2.subject && t1.relation == t2.relation) return std::nullopt;
      QueryPtr u = make_union({hop(t1.subject, t1.relation), hop(t2.subject, t2.relation)});
      Key key{tag, t1.subject, t1.relation, t2.subject, t2.relation};
      if (tmpl == Template::k2u) return Draft{std::move(u), std::move(key)};
      const Triple* t3 = s.out_of(t1.object, rng);
      if (!t3) return std::nullopt;
      key.push_back(t3->relation);
      return Draft{make_follow(std::move(u), {t3->relation}), std::move(key)};
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<GeneratedQuery> generate_queries(const KbSplit& split, std::size_t num_entities,
                                             std::size_t num_relations, Template tmpl,
                                             std::size_t n, std::uint64_t seed,
                                             const QueryGenOptions& options) {
  if (split.full.empty()) throw EmptyKbError("cannot generate queries from an empty KB");
  const bool generalize = options.mode == Regime::kGeneralization;
  if (generalize && split.training.size() == split.full.size()) {
    throw ArgumentError("generalization queries need a non-empty holdout");
  }
  const SymbolicKb full(split.full, num_entities, num_relations);
  const SymbolicKb training(split.training, num_entities, num_relations);
  const PathSampler sampler(split.full, num_entities);
  std::mt19937_64 rng(seed ^ (0x7175657279ULL + static_cast<std::uint64_t>(tmpl)));

  std::vector<GeneratedQuery> out;
  std::set<Key> seen;
  const std::size_t budget = n * options.attempts_per_query;
  for (std::size_t attempt = 0; attempt < budget && out.size() < n; ++attempt) {
    auto d = draft(tmpl, sampler, rng);
    if (!d) continue;
    if (options.distinct && !seen.insert(d->key).second) continue;
    GeneratedQuery q{tmpl, d->query, symbolic_evaluate(*d->query, full), {}};
    if (q.gold.empty()) continue;
    if (options.max_answers != 0 && q.gold.size() > options.max_answers) continue;
    if (generalize) {
      q.known = symbolic_evaluate(*d->query, training);
      if (!std::includes(q.gold.begin(), q.gold.end(), q.known.begin(), q.known.end())) {
        throw Error("training-KB answers are not a subset of full-KB answers");
      }
      if (q.known.size() == q.gold.size()) continue;
      if (options.disjoint && !q.known.empty()) continue;
    }
    out.push_back(std::move(q));
  }
  return out;
}

QueryMetrics score(std::span<const EntityId> ranked, std::span<const EntityId> gold) {
  if (gold.empty()) throw ArgumentError("gold answer set is empty");
  QueryMetrics m;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!std::binary_search(gold.begin(), gold.end(), ranked[i])) continue;
    const std::size_t rank = i + 1;
    m.hits1 = rank <= 1 ? 1.0 : 0.0;
    m.hits3 = rank <= 3 ? 1.0 : 0.0;
    m.hits10 = rank <= 10 ? 1.0 : 0.0;
    m.rr = 1.0 / static_cast<double>(rank);
    break;
  }
  return m;
}

double random_hits_at_k(std::size_t candidates, std::size_t gold, std::size_t k) {
  if (gold == 0 || candidates == 0) return 0.0;
  if (gold > candidates) throw ArgumentError("more gold answers than candidates");
  // 1 - C(M - g, k) / C(M, k)
  double miss = 1.0;
  for (std::size_t i = 0; i < k && i < candidates; ++i) {
    const double num = static_cast<double>(candidates) - static_cast<double>(gold) -
                       static_cast<double>(i);
    if (num <= 0.0) return 1.0;
    miss *= num / static_cast<double>(candidates - i);
  }
  return 1.0 - miss;
}

const TemplateReport* EvalReport::find(Template t) const {
  for (const auto& r : templates) {
    if (r.tmpl == t) return &r;
  }
  return nullptr;
}

bool same_results(const EvalReport& a, const EvalReport& b) {
  return a.templates == b.templates && a.average == b.average && a.config == b.config;
}

EvalReport evaluate_queries(const QueryEngine& engine, std::span<const GeneratedQuery> queries,
                            const EvalOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t num_entities = engine.store().num_entities();
  EvalReport report;
  for (Template t : kAllTemplates) {
    TemplateReport tr{t, 0, {}, 0.0};
    for (const auto& q : queries) {
      if (q.tmpl != t) continue;
      std::vector<EntityId> ranked;
      for (const auto& a : engine.evaluate(*q.query, options.mode)) ranked.push_back(a.id);
      EntitySet gold = q.gold;
      std::size_t candidates = num_entities;
      if (options.filter_known && !q.known.empty()) {
        std::erase_if(ranked, [&](EntityId e) {
          return std::binary_search(q.known.begin(), q.known.end(), e);
        });
        EntitySet fresh;
        std::set_difference(q.gold.begin(), q.gold.end(), q.known.begin(), q.known.end(),
                            std::back_inserter(fresh));
        if (!fresh.empty()) gold = std::move(fresh);
        candidates -= q.known.size();
      }
      const QueryMetrics m = score(ranked, gold);
      tr.metrics.hits1 += m.hits1;
      tr.metrics.hits3 += m.hits3;
      tr.metrics.hits10 += m.hits10;
      tr.metrics.rr += m.rr;
      tr.random_hits3 += random_hits_at_k(candidates, gold.size(), 3);
      ++tr.count;
    }
    if (tr.count == 0) continue;
    const auto c = static_cast<double>(tr.count);
    tr.metrics = {tr.metrics.hits1 / c, tr.metrics.hits3 / c, tr.metrics.hits10 / c,
                  tr.metrics.rr / c};
    tr.random_hits3 /= c;
    report.templates.push_back(tr);
  }
  if (!report.templates.empty()) {
    for (const auto& tr : report.templates) {
      report.average.hits1 += tr.metrics.hits1;
      report.average.hits3 += tr.metrics.hits3;
      report.average.hits10 += tr.metrics.hits10;
      report.average.rr += tr.metrics.rr;
    }
    const auto c = static_cast<double>(report.templates.size());
    report.average = {report.average.hits1 / c, report.average.hits3 / c,
                      report.average.hits10 / c, report.average.rr / c};
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

}  // namespace

std::string format_table(const EvalReport& report, bool include_timing) {
  std::ostringstream os;
  for (const auto& [k, v] : report.config) os << "# " << k << " = " << v << '\n';
  constexpr int label = 8;
  constexpr int col = 7;
  os << std::left << std::setw(label) << "metric" << std::right;
  for (const auto& tr : report.templates) os << std::setw(col) << template_name(tr.tmpl);
  os << std::setw(col) << "Avg" << '\n';
  auto line = [&](std::string_view name, auto get) {
    os << std::left << std::setw(label) << name << std::right;
    for (const auto& tr : report.templates) os << std::setw(col) << pct(get(tr.metrics));
    os << std::setw(col) << pct(get(report.average)) << '\n';
  };
  line("Hits@1", [](const QueryMetrics& m) { return m.hits1; });
  line("Hits@3", [](const QueryMetrics& m) { return m.hits3; });
  line("Hits@10", [](const QueryMetrics& m) { return m.hits10; });
  line("MRR", [](const QueryMetrics& m) { return m.rr; });
  os << std::left << std::setw(label) << "queries" << std::right;
  std::size_t total = 0;
  for (const auto& tr : report.templates) {
    os << std::setw(col) << tr.count;
    total += tr.count;
  }
  os << std::setw(col) << total << '\n';
  if (include_timing) {
    os << "# wall clock " << std::fixed << std::setprecision(2) << report.seconds << " s\n";
  }
  return os.str();
}

std::string format_tsv(const EvalReport& report) {
  std::ostringstream os;
  os << "template\tqueries\thits1\thits3\thits10\tmrr\trandom_hits3\n";
  os << std::fixed << std::setprecision(6);
  std::size_t total = 0;
  for (const auto& tr : report.templates) {
    os << template_name(tr.tmpl) << '\t' << tr.count << '\t' << tr.metrics.hits1 << '\t'
       << tr.metrics.hits3 << '\t' << tr.metrics.hits10 << '\t' << tr.metrics.rr << '\t'
       << tr.random_hits3 << '\n';
    total += tr.count;
  }
  const auto& a = report.average;
  os << "avg\t" << total << '\t' << a.hits1 << '\t' << a.hits3 << '\t' << a.hits10 << '\t' << a.rr
     << "\t\n";
  return os.str();
}

SketchBenchResult run_sketch_bench(const SketchBenchConfig& c) {
  if (c.set_size > c.candidates || c.candidates > c.universe) {
    throw ArgumentError("sketch bench needs set_size <= candidates <= universe");
  }
  if (c.trials == 0) throw ArgumentError("sketch bench needs at least one trial");
  std::mt19937_64 rng(c.seed);
  std::uniform_int_distribution<ElementId> any_id(0, static_cast<ElementId>(c.universe - 1));
  std::uniform_int_distribution<int> any_weight(1, 4);
  SketchBenchResult r;
  r.trials = c.trials;
  for (std::size_t trial = 0; trial < c.trials; ++trial) {
    const auto family = make_hash_family(rng(), c.depth, c.width, c.universe);
    std::set<ElementId> pool;
    while (pool.size() < c.candidates) pool.insert(any_id(rng));
    std::vector<ElementId> cand(pool.begin(), pool.end());
    std::shuffle(cand.begin(), cand.end(), rng);
    WeightedSet set(c.universe);
    for (std::size_t i = 0; i < c.set_size; ++i) set.set(cand[i], any_weight(rng));
    const CountMinSketch sketch = sketch_from_set(set, family);
    const bool exact = std::all_of(cand.begin(), cand.end(), [&](ElementId id) {
      return sketch.lookup(id) == set.weight(id);
    });
    if (!exact) ++r.failures;
  }
  r.failure_rate = static_cast<double>(r.failures) / static_cast<double>(r.trials);
  r.delta = static_cast<double>(c.candidates) / std::ldexp(1.0, static_cast<int>(c.depth));
  r.bound = r.delta + 3.0 * std::sqrt(r.delta * (1.0 - r.delta) / static_cast<double>(r.trials));
  return r;
}

}  // namespace emql
