#pragma once

#include <cstddef>
#include <cstdint>

#include "emql/kbstore.hpp"

namespace emql {

/// Seeded generator for community-structured KBs.
///
/// Entities are split into communities. Each relation links a random subset of
/// communities to target communities through a random bijection, so a member
/// x of domain community D gets r(x, pi(x)) plus a Zipf-distributed number of
/// extra objects inside pi(D). A small fraction of uniformly random triples is
/// mixed in as noise.
struct SyntheticKbConfig {
  std::size_t num_entities = 1000;
  std::size_t num_relations = 20;
  std::size_t community_size = 20;
  double relation_coverage = 0.4;  // fraction of communities each relation applies to
  double membership = 0.6;         // chance a community member has the relation
  double zipf_exponent = 1.5;
  std::size_t max_fanout = 8;
  double noise = 0.05;  // noise triples as a fraction of structured ones
  std::uint64_t seed = 1;
};

KnowledgeBase make_synthetic_kb(const SyntheticKbConfig& config);

/// Small random KB for localist tests: every relation has at most
/// `triples_per_relation` triples.
KnowledgeBase make_localist_kb(std::size_t num_entities, std::size_t num_relations,
                               std::size_t triples_per_relation, std::uint64_t seed);

/// One-hot embeddings with d = max(N, N_R): entity i is e_i, relation j is e_j.
/// The returned store has a current triple matrix.
TripleStore make_localist_store(const KnowledgeBase& kb);

}  // namespace emql
