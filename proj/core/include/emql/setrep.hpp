#pragma once

#include <cstddef>
#include <vector>

#include "emql/cms.hpp"
#include "emql/matrix.hpp"
#include "emql/types.hpp"

namespace emql {

/// Centroid-sketch representation of a weighted set: the weighted sum of the
/// members' embeddings plus a count-min sketch of their exact weights. The
/// sketch may be the all-ones vacuous sketch.
struct SetRep {
  std::vector<float> centroid;
  CountMinSketch sketch;
  Universe universe = Universe::kEntities;
};

/// a_X = sum_i w_i e_i, b_X = sketch of X. Throws EmptySetError for an empty
/// set and UniverseError for ids beyond the embedding matrix.
SetRep encode(const WeightedSet& set, const Matrix& embeddings, HashFamilyPtr family,
              Universe universe = Universe::kEntities);

/// Zero centroid and all-zero sketch; decodes to the empty set.
SetRep empty_rep(std::size_t dim, HashFamilyPtr family, Universe universe = Universe::kEntities);

SetRep with_vacuous_sketch(SetRep rep);

/// Retrieves TOP_k(centroid, E), takes a softmax over those k scores and
/// weights each candidate by its sketch lookup. Zero-weight candidates are
/// dropped, so the result may be empty.
WeightedSet decode(const SetRep& rep, const Matrix& embeddings, std::size_t k);

// Binary set operators. Both operands must share a universe (TypeError) and a
// hash family (IncompatibleSketchError).

/// Centroid (a_A + a_B) / 2, sketch b_A (.) b_B.
SetRep intersect(const SetRep& a, const SetRep& b);
/// Centroid (a_A + a_B) / 2, sketch b_A + b_B.
SetRep unite(const SetRep& a, const SetRep& b);
/// Centroid a_A, sketch b_A with every cell zeroed where b_B is nonzero.
SetRep difference(const SetRep& a, const SetRep& b);

struct RankedAnswer {
  ElementId id;
  double weight;

  bool operator==(const RankedAnswer&) const = default;
};

/// Entries by descending weight, ascending id on ties.
std::vector<RankedAnswer> rank(const WeightedSet& set);

}  // namespace emql
