#include "emql/relops.hpp"

#include <string>

#include "emql/errors.hpp"
#include "emql/mips.hpp"
#include "emql/numeric.hpp"

namespace emql {
namespace {

void require_universe(const SetRep& rep, Universe expected, const char* what) {
  if (rep.universe != expected) {
    throw TypeError(std::string(what) + " must be a set of " +
                    std::string(universe_name(expected)));
  }
}

void append_scaled(std::vector<float>& out, const std::vector<float>& v, double scale,
                   std::size_t dim) {
  if (v.size() != dim) throw ShapeError("centroid dimension does not match the triple store");
  for (float x : v) out.push_back(static_cast<float>(scale * static_cast<double>(x)));
}

std::vector<ScoredTriple> score_candidates(const TripleQuery& q, const SetRep& x, const SetRep& r,
                                           const SetRep* y, const TripleStore& store,
                                           const RelOpOptions& options) {
  const TopKResult hits = top_k(q.vector, store.triple_matrix(), options.k);
  const std::vector<double> probs = softmax(hits.scores);
  const auto triples = store.triples();
  std::vector<ScoredTriple> out;
  out.reserve(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const Triple& t = triples[hits.ids[i]];
    double s = r.sketch.lookup(t.relation) * x.sketch.lookup(t.subject);
    if (y != nullptr && s > 0.0) s *= y->sketch.lookup(t.object);
    out.push_back({hits.ids[i], t.relation, t.subject, t.object, s * probs[i]});
  }
  return out;
}

}  // namespace

TripleQuery make_follow_query(const SetRep& x, const SetRep& r, double relation_scale) {
  require_universe(x, Universe::kEntities, "follow input");
  require_universe(r, Universe::kRelations, "follow relation set");
  const std::size_t dim = x.centroid.size();
  TripleQuery q{{}, TripleQueryMode::kFollow, relation_scale};
  q.vector.reserve(3 * dim);
  append_scaled(q.vector, r.centroid, relation_scale, dim);
  append_scaled(q.vector, x.centroid, 1.0, dim);
  q.vector.resize(3 * dim, 0.0f);
  return q;
}

TripleQuery make_filter_query(const SetRep& x, const SetRep& r, const SetRep& y,
                              double relation_scale) {
  require_universe(x, Universe::kEntities, "filter input");
  require_universe(r, Universe::kRelations, "filter relation set");
  require_universe(y, Universe::kEntities, "filter object set");
  const std::size_t dim = x.centroid.size();
  TripleQuery q{{}, TripleQueryMode::kFilter, relation_scale};
  q.vector.reserve(3 * dim);
  append_scaled(q.vector, r.centroid, relation_scale, dim);
  append_scaled(q.vector, x.centroid, 1.0, dim);
  append_scaled(q.vector, y.centroid, 1.0, dim);
  return q;
}

std::vector<ScoredTriple> score_follow(const SetRep& x, const SetRep& r, const TripleStore& store,
                                       const RelOpOptions& options) {
  const TripleQuery q = make_follow_query(x, r, options.relation_scale);
  return score_candidates(q, x, r, nullptr, store, options);
}

std::vector<ScoredTriple> score_filter(const SetRep& x, const SetRep& r, const SetRep& y,
                                       const TripleStore& store, const RelOpOptions& options) {
  const TripleQuery q = make_filter_query(x, r, y, options.relation_scale);
  return score_candidates(q, x, r, &y, store, options);
}

SetRep follow(const SetRep& x, const SetRep& r, const TripleStore& store,
              const RelOpOptions& options) {
  WeightedSet objects(store.num_entities());
  for (const auto& st : score_follow(x, r, store, options)) {
    if (st.score > 0.0) objects.add(st.object, st.score);
  }
  return reencode(objects, store.entities(), x.sketch.shared_family());
}

SetRep filter(const SetRep& x, const SetRep& r, const SetRep& y, const TripleStore& store,
              const RelOpOptions& options) {
  WeightedSet subjects(store.num_entities());
  for (const auto& st : score_filter(x, r, y, store, options)) {
    if (st.score > 0.0) subjects.add(st.subject, st.score);
  }
  return reencode(subjects, store.entities(), x.sketch.shared_family());
}

SetRep reencode(const WeightedSet& v, const Matrix& embeddings, HashFamilyPtr family) {
  if (v.empty()) return empty_rep(embeddings.cols(), std::move(family), Universe::kEntities);
  return encode(v, embeddings, std::move(family), Universe::kEntities);
}

}  // namespace emql
