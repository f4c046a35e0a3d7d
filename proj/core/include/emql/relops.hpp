#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "emql/kbstore.hpp"
#include "emql/setrep.hpp"

namespace emql {

struct RelOpOptions {
  /// Number of triples retrieved from K.
  std::size_t k = 1000;
  /// Scale lambda applied to the relation centroid in the query vector.
  double relation_scale = 1.0;
};

enum class TripleQueryMode : std::uint8_t { kFollow, kFilter };

/// Query against K: [lambda a_R ; a_X ; 0] for follow, [lambda a_R ; a_X ; a_Y]
/// for filter.
struct TripleQuery {
  std::vector<float> vector;
  TripleQueryMode mode = TripleQueryMode::kFollow;
  double relation_scale = 1.0;
};

TripleQuery make_follow_query(const SetRep& x, const SetRep& r, double relation_scale);
TripleQuery make_filter_query(const SetRep& x, const SetRep& r, const SetRep& y,
                              double relation_scale);

/// A retrieved triple and its sketch-weighted score s(r_t).
struct ScoredTriple {
  std::uint32_t triple = 0;
  RelationId relation = 0;
  EntityId subject = 0;
  EntityId object = 0;
  double score = 0.0;
};

/// Retrieved candidates with scores CM(r, b_R) CM(x, b_X) softmax(q . r_t),
/// in retrieval order. Zero-score candidates are kept.
std::vector<ScoredTriple> score_follow(const SetRep& x, const SetRep& r, const TripleStore& store,
                                       const RelOpOptions& options);
/// As score_follow with the extra factor CM(y, b_Y).
std::vector<ScoredTriple> score_filter(const SetRep& x, const SetRep& r, const SetRep& y,
                                       const TripleStore& store, const RelOpOptions& options);

/// X.follow(R): object weights summed over scored triples, then re-encoded.
SetRep follow(const SetRep& x, const SetRep& r, const TripleStore& store,
              const RelOpOptions& options = {});
/// X.filter(R, Y): subject weights summed over scored triples, then re-encoded.
SetRep filter(const SetRep& x, const SetRep& r, const SetRep& y, const TripleStore& store,
              const RelOpOptions& options = {});

/// encode() for intermediate results; an all-zero vector gives empty_rep().
SetRep reencode(const WeightedSet& v, const Matrix& embeddings, HashFamilyPtr family);

}  // namespace emql
