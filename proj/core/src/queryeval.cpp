#include "emql/queryeval.hpp"

#include <algorithm>
#include <iterator>

#include "emql/errors.hpp"

namespace emql {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void normalize(EntitySet& s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

EntitySet set_intersection(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

EntitySet set_union(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

EntitySet set_difference(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

// --- SymbolicKb ---------------------------------------------------------------

SymbolicKb::SymbolicKb(std::span<const Triple> triples, std::size_t num_entities,
                       std::size_t num_relations)
    : triples_(triples.begin(), triples.end()),
      num_entities_(num_entities),
      num_relations_(num_relations) {
  std::sort(triples_.begin(), triples_.end());
  triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());
  for (const auto& t : triples_) {
    out_[key(t.subject, t.relation)].push_back(t.object);
    in_[key(t.relation, t.object)].push_back(t.subject);
  }
  for (auto& [k, v] : out_) normalize(v);
  for (auto& [k, v] : in_) normalize(v);
}

std::span<const EntityId> SymbolicKb::objects(EntityId subject, RelationId relation) const {
  auto it = out_.find(key(subject, relation));
  if (it == out_.end()) return {};
  return it->second;
}

std::span<const EntityId> SymbolicKb::subjects(RelationId relation, EntityId object) const {
  auto it = in_.find(key(relation, object));
  if (it == in_.end()) return {};
  return it->second;
}

bool SymbolicKb::contains(const Triple& t) const {
  return std::binary_search(triples_.begin(), triples_.end(), t);
}

EntitySet SymbolicKb::follow(std::span<const EntityId> xs, std::span<const RelationId> rs) const {
  EntitySet out;
  for (EntityId x : xs) {
    for (RelationId r : rs) {
      const auto ys = objects(x, r);
      out.insert(out.end(), ys.begin(), ys.end());
    }
  }
  normalize(out);
  return out;
}

EntitySet SymbolicKb::filter(std::span<const EntityId> xs, std::span<const RelationId> rs,
                             std::span<const EntityId> ys) const {
  EntitySet out;
  for (EntityId x : xs) {
    const bool keep = std::any_of(rs.begin(), rs.end(), [&](RelationId r) {
      const auto objs = objects(x, r);
      return std::any_of(objs.begin(), objs.end(), [&](EntityId y) {
        return std::binary_search(ys.begin(), ys.end(), y);
      });
    });
    if (keep) out.push_back(x);
  }
  normalize(out);
  return out;
}

EntitySet symbolic_evaluate(const Query& query, const SymbolicKb& kb) {
  return std::visit(
      overloaded{
          [&](const BasicSet& b) {
            EntitySet s = b.entities;
            normalize(s);
            return s;
          },
          [&](const FollowNode& f) {
            return kb.follow(symbolic_evaluate(*f.input, kb), f.relations.relations);
          },
          [&](const FilterNode& f) {
            return kb.filter(symbolic_evaluate(*f.input, kb), f.relations.relations,
                             symbolic_evaluate(*f.objects, kb));
          },
          [&](const IntersectNode& n) {
            EntitySet acc = symbolic_evaluate(*n.operands.front(), kb);
            for (std::size_t i = 1; i < n.operands.size(); ++i) {
              acc = set_intersection(acc, symbolic_evaluate(*n.operands[i], kb));
            }
            return acc;
          },
          [&](const UnionNode& n) {
            EntitySet acc = symbolic_evaluate(*n.operands.front(), kb);
            for (std::size_t i = 1; i < n.operands.size(); ++i) {
              acc = set_union(acc, symbolic_evaluate(*n.operands[i], kb));
            }
            return acc;
          },
          [&](const DifferenceNode& d) {
            return set_difference(symbolic_evaluate(*d.left, kb), symbolic_evaluate(*d.right, kb));
          },
      },
      query.node);
}

// --- QueryEngine --------------------------------------------------------------

HashFamilyPtr make_entity_family(const SketchConfig& sketch, std::size_t num_entities) {
  return make_hash_family(sketch.seed, sketch.depth, sketch.width, num_entities);
}

HashFamilyPtr make_relation_family(const SketchConfig& sketch, std::size_t num_relations) {
  return make_hash_family(sketch.seed ^ 0x72656c6174696f6eULL, sketch.depth, sketch.width,
                          num_relations);
}

QueryEngine::QueryEngine(const TripleStore& store, const SketchConfig& sketch)
    : store_(&store),
      entity_family_(make_entity_family(sketch, store.num_entities())),
      relation_family_(make_relation_family(sketch, store.num_relations())) {}

SetRep QueryEngine::encode_entities(std::span<const EntityId> ids) const {
  return encode(WeightedSet::uniform(store_->num_entities(), ids), store_->entities(),
                entity_family_, Universe::kEntities);
}

SetRep QueryEngine::encode_relations(std::span<const RelationId> ids) const {
  return encode(WeightedSet::uniform(store_->num_relations(), ids), store_->relations(),
                relation_family_, Universe::kRelations);
}

SetRep QueryEngine::eval(const Query& query, const EvalMode& mode) const {
  const RelOpOptions ops{mode.k, mode.relation_scale};
  auto strip = [&](SetRep rep) {
    return mode.use_sketches ? rep : with_vacuous_sketch(std::move(rep));
  };
  return std::visit(
      overloaded{
          [&](const BasicSet& b) { return strip(encode_entities(b.entities)); },
          [&](const FollowNode& f) {
            const SetRep x = eval(*f.input, mode);
            const SetRep r = strip(encode_relations(f.relations.relations));
            return strip(follow(x, r, *store_, ops));
          },
          [&](const FilterNode& f) {
            const SetRep x = eval(*f.input, mode);
            const SetRep r = strip(encode_relations(f.relations.relations));
            const SetRep y = eval(*f.objects, mode);
            return strip(filter(x, r, y, *store_, ops));
          },
          [&](const IntersectNode& n) {
            SetRep acc = eval(*n.operands.front(), mode);
            for (std::size_t i = 1; i < n.operands.size(); ++i) {
              acc = strip(intersect(acc, eval(*n.operands[i], mode)));
            }
            return acc;
          },
          [&](const UnionNode& n) {
            SetRep acc = eval(*n.operands.front(), mode);
            for (std::size_t i = 1; i < n.operands.size(); ++i) {
              acc = strip(unite(acc, eval(*n.operands[i], mode)));
            }
            return acc;
          },
          [&](const DifferenceNode& d) {
            return strip(difference(eval(*d.left, mode), eval(*d.right, mode)));
          },
      },
      query.node);
}

SetRep QueryEngine::represent(const Query& query, const EvalMode& mode) const {
  validate(query);
  SetRep rep = eval(query, mode);
  if (mode.final_sketch == FinalSketch::kVacuous) rep = with_vacuous_sketch(std::move(rep));
  return rep;
}

WeightedSet QueryEngine::evaluate_set(const Query& query, const EvalMode& mode) const {
  return decode(represent(query, mode), store_->entities(), mode.k);
}

std::vector<RankedAnswer> QueryEngine::evaluate(const Query& query, const EvalMode& mode) const {
  return rank(evaluate_set(query, mode));
}

}  // namespace emql
