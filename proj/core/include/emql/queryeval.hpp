#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "emql/cms.hpp"
#include "emql/kbstore.hpp"
#include "emql/query.hpp"
#include "emql/relops.hpp"
#include "emql/setrep.hpp"

namespace emql {

/// Sorted, duplicate-free entity ids.
using EntitySet = std::vector<EntityId>;

/// Indexed triple list for exact logical evaluation.
class SymbolicKb {
 public:
  SymbolicKb(std::span<const Triple> triples, std::size_t num_entities,
             std::size_t num_relations);

  std::span<const EntityId> objects(EntityId subject, RelationId relation) const;
  std::span<const EntityId> subjects(RelationId relation, EntityId object) const;
  bool contains(const Triple& t) const;

  /// {y | exists r in R, x in X : r(x, y)}
  EntitySet follow(std::span<const EntityId> xs, std::span<const RelationId> rs) const;
  /// {x in X | exists r in R, y in Y : r(x, y)}; `ys` must be sorted.
  EntitySet filter(std::span<const EntityId> xs, std::span<const RelationId> rs,
                   std::span<const EntityId> ys) const;

  std::span<const Triple> triples() const noexcept { return triples_; }
  std::size_t num_entities() const noexcept { return num_entities_; }
  std::size_t num_relations() const noexcept { return num_relations_; }

 private:
  static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  std::vector<Triple> triples_;
  std::size_t num_entities_;
  std::size_t num_relations_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> out_;  // (x, r) -> ys
  std::unordered_map<std::uint64_t, std::vector<EntityId>> in_;   // (r, y) -> xs
};

/// Exact set semantics of a query over a triple list.
EntitySet symbolic_evaluate(const Query& query, const SymbolicKb& kb);

enum class FinalSketch : std::uint8_t { kExact, kVacuous };

struct EvalMode {
  /// kVacuous swaps only the outermost result's sketch for the all-ones
  /// sketch before decoding.
  FinalSketch final_sketch = FinalSketch::kExact;
  /// false replaces every sketch, including intermediate ones, with the
  /// vacuous sketch (the "no sketch" ablation).
  bool use_sketches = true;
  std::size_t k = 1000;
  double relation_scale = 1.0;
};

struct SketchConfig {
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
  std::uint32_t depth = 20;
  std::uint32_t width = 2000;
};

/// Hash families over the entity and relation universes. Relations use a
/// derived seed so the two families are independent.
HashFamilyPtr make_entity_family(const SketchConfig& sketch, std::size_t num_entities);
HashFamilyPtr make_relation_family(const SketchConfig& sketch, std::size_t num_relations);

/// Evaluates queries bottom-up over centroid-sketch representations. The store
/// must outlive the engine and its triple matrix must be current.
class QueryEngine {
 public:
  explicit QueryEngine(const TripleStore& store, const SketchConfig& sketch = {});

  SetRep encode_entities(std::span<const EntityId> ids) const;
  SetRep encode_relations(std::span<const RelationId> ids) const;

  /// Representation of the whole query, with the final-sketch swap applied.
  SetRep represent(const Query& query, const EvalMode& mode) const;
  /// Decoded answer weights.
  WeightedSet evaluate_set(const Query& query, const EvalMode& mode) const;
  /// Decoded answers ranked by weight (descending, ties by ascending id).
  std::vector<RankedAnswer> evaluate(const Query& query, const EvalMode& mode) const;

  const TripleStore& store() const noexcept { return *store_; }
  const HashFamilyPtr& entity_family() const noexcept { return entity_family_; }
  const HashFamilyPtr& relation_family() const noexcept { return relation_family_; }

 private:
  SetRep eval(const Query& query, const EvalMode& mode) const;

  const TripleStore* store_;
  HashFamilyPtr entity_family_;
  HashFamilyPtr relation_family_;
};

}  // namespace emql
