#include "emql/setrep.hpp"

#include <algorithm>
#include <string>

#include "emql/errors.hpp"
#include "emql/mips.hpp"
#include "emql/numeric.hpp"

namespace emql {
namespace {

void check_binary(const SetRep& a, const SetRep& b, const char* op) {
  if (a.universe != b.universe) {
    throw TypeError(std::string(op) + ": cannot combine a set of " +
                    std::string(universe_name(a.universe)) + " with a set of " +
                    std::string(universe_name(b.universe)));
  }
  if (a.centroid.size() != b.centroid.size()) {
    throw ShapeError(std::string(op) + ": centroid dimensions differ");
  }
}

std::vector<float> midpoint(const std::vector<float>& a, const std::vector<float>& b) {
  std::vector<float> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = static_cast<float>(0.5 * (static_cast<double>(a[i]) + static_cast<double>(b[i])));
  }
  return out;
}

}  // namespace

SetRep encode(const WeightedSet& set, const Matrix& embeddings, HashFamilyPtr family,
              Universe universe) {
  if (set.empty()) throw EmptySetError("cannot encode an empty set: centroid is undefined");
  std::vector<double> acc(embeddings.cols(), 0.0);
  for (const auto& [id, w] : set) {
    if (id >= embeddings.rows()) {
      throw UniverseError("element id " + std::to_string(id) + " has no embedding");
    }
    const auto row = embeddings.row(id);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += w * static_cast<double>(row[c]);
  }
  SetRep rep{std::vector<float>(acc.begin(), acc.end()), sketch_from_set(set, std::move(family)),
             universe};
  return rep;
}

SetRep empty_rep(std::size_t dim, HashFamilyPtr family, Universe universe) {
  return SetRep{std::vector<float>(dim, 0.0f), CountMinSketch(std::move(family)), universe};
}

SetRep with_vacuous_sketch(SetRep rep) {
  rep.sketch = vacuous_sketch(rep.sketch.shared_family());
  return rep;
}

WeightedSet decode(const SetRep& rep, const Matrix& embeddings, std::size_t k) {
  const TopKResult candidates = top_k(rep.centroid, embeddings, k);
  const std::vector<double> probs = softmax(candidates.scores);
  WeightedSet out(embeddings.rows());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double w = rep.sketch.lookup(candidates.ids[i]) * probs[i];
    if (w > 0.0) out.set(candidates.ids[i], w);
  }
  return out;
}

SetRep intersect(const SetRep& a, const SetRep& b) {
  check_binary(a, b, "intersect");
  return SetRep{midpoint(a.centroid, b.centroid), sketch_hadamard(a.sketch, b.sketch), a.universe};
}

SetRep unite(const SetRep& a, const SetRep& b) {
  check_binary(a, b, "union");
  return SetRep{midpoint(a.centroid, b.centroid), sketch_add(a.sketch, b.sketch), a.universe};
}

SetRep difference(const SetRep& a, const SetRep& b) {
  check_binary(a, b, "difference");
  return SetRep{a.centroid, sketch_mask_nonmembers(a.sketch, b.sketch), a.universe};
}

std::vector<RankedAnswer> rank(const WeightedSet& set) {
  std::vector<RankedAnswer> out;
  out.reserve(set.size());
  for (const auto& [id, w] : set) out.push_back({id, w});
  std::stable_sort(out.begin(), out.end(), [](const RankedAnswer& x, const RankedAnswer& y) {
    return x.weight > y.weight;
  });
  return out;
}

}  // namespace emql
