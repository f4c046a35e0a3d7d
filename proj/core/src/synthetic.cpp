#include "emql/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "emql/errors.hpp"

namespace emql {
namespace {

std::string padded(std::string_view prefix, std::size_t i, std::size_t n) {
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  std::string digits = std::to_string(i);
  return std::string(prefix) + std::string(width - digits.size(), '0') + digits;
}

void add_names(KnowledgeBase& kb, std::size_t num_entities, std::size_t num_relations) {
  for (std::size_t i = 0; i < num_entities; ++i) kb.vocab.add_entity(padded("ent_", i, num_entities));
  for (std::size_t j = 0; j < num_relations; ++j) {
    kb.vocab.add_relation(padded("rel_", j, num_relations));
  }
}

}  // namespace

KnowledgeBase make_synthetic_kb(const SyntheticKbConfig& c) {
  if (c.num_entities < 2 || c.num_relations == 0) {
    throw ArgumentError("synthetic KB needs at least 2 entities and 1 relation");
  }
  if (c.community_size == 0 || c.community_size > c.num_entities) {
    throw ArgumentError("community size must be in [1, num_entities]");
  }
  if (c.max_fanout == 0) throw ArgumentError("max fanout must be positive");
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<EntityId> order(c.num_entities);
  std::iota(order.begin(), order.end(), EntityId{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<EntityId>> communities;
  for (std::size_t i = 0; i + c.community_size <= order.size(); i += c.community_size) {
    communities.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                             order.begin() + static_cast<std::ptrdiff_t>(i + c.community_size));
  }

  std::vector<double> fan_weights(c.max_fanout);
  for (std::size_t f = 0; f < c.max_fanout; ++f) {
    fan_weights[f] = 1.0 / std::pow(static_cast<double>(f + 1), c.zipf_exponent);
  }
  std::discrete_distribution<std::size_t> fanout(fan_weights.begin(), fan_weights.end());
  std::uniform_int_distribution<std::size_t> pick_community(0, communities.size() - 1);

  std::set<Triple> triples;
  for (RelationId r = 0; r < c.num_relations; ++r) {
    for (std::size_t d = 0; d < communities.size(); ++d) {
      if (unit(rng) >= c.relation_coverage) continue;
      const auto& target = communities[pick_community(rng)];
      std::vector<std::size_t> perm(c.community_size);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t i = 0; i < c.community_size; ++i) {
        if (unit(rng) >= c.membership) continue;
        const EntityId x = communities[d][i];
        const std::size_t extra = std::min(fanout(rng), c.community_size - 1);
        triples.insert({r, x, target[perm[i]]});
        std::vector<std::size_t> others(perm.begin(), perm.end());
        others.erase(std::find(others.begin(), others.end(), perm[i]));
        std::shuffle(others.begin(), others.end(), rng);
        for (std::size_t k = 0; k < extra; ++k) triples.insert({r, x, target[others[k]]});
      }
    }
  }

  const auto structured = static_cast<double>(triples.size());
  const auto num_noise = static_cast<std::size_t>(std::llround(c.noise * structured));
  std::uniform_int_distribution<EntityId> any_entity(0, static_cast<EntityId>(c.num_entities - 1));
  std::uniform_int_distribution<RelationId> any_relation(
      0, static_cast<RelationId>(c.num_relations - 1));
  for (std::size_t i = 0; i < num_noise; ++i) {
    const RelationId r = any_relation(rng);
    const EntityId x = any_entity(rng);
    triples.insert({r, x, any_entity(rng)});
  }

  KnowledgeBase kb;
  add_names(kb, c.num_entities, c.num_relations);
  kb.triples.assign(triples.begin(), triples.end());
  if (kb.triples.empty()) throw EmptyKbError("synthetic KB configuration produced no triples");
  return kb;
}

KnowledgeBase make_localist_kb(std::size_t num_entities, std::size_t num_relations,
                               std::size_t triples_per_relation, std::uint64_t seed) {
  if (num_entities == 0 || num_relations == 0 || triples_per_relation == 0) {
    throw ArgumentError("localist KB dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<EntityId> any_entity(0, static_cast<EntityId>(num_entities - 1));
  std::set<Triple> triples;
  for (RelationId r = 0; r < num_relations; ++r) {
    for (std::size_t i = 0; i < triples_per_relation; ++i) {
      const EntityId x = any_entity(rng);
      triples.insert({r, x, any_entity(rng)});
    }
  }
  KnowledgeBase kb;
  add_names(kb, num_entities, num_relations);
  kb.triples.assign(triples.begin(), triples.end());
  return kb;
}

TripleStore make_localist_store(const KnowledgeBase& kb) {
  const std::size_t n = kb.num_entities();
  const std::size_t nr = kb.num_relations();
  const std::size_t dim = std::max(n, nr);
  Matrix entities(n, dim);
  Matrix relations(nr, dim);
  for (std::size_t i = 0; i < n; ++i) entities(i, i) = 1.0f;
  for (std::size_t j = 0; j < nr; ++j) relations(j, j) = 1.0f;
  TripleStore store(n, nr, kb.triples, dim);
  store.set_embeddings(std::move(entities), std::move(relations));
  store.build_triple_matrix();
  return store;
}

}  // namespace emql
