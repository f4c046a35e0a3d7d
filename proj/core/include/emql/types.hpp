#pragma once

#include <compare>
#include <cstdint>
#include <string_view>

namespace emql {

using ElementId = std::uint32_t;
using EntityId = ElementId;
using RelationId = ElementId;

/// Which id space a set lives in. Operators refuse to mix the two.
enum class Universe : std::uint8_t { kEntities, kRelations };

constexpr std::string_view universe_name(Universe u) {
  return u == Universe::kEntities ? "entities" : "relations";
}

/// Entailment trains and scores on the full KB; generalization trains on a
/// KB with held-out triples and scores against the full KB.
enum class Regime : std::uint8_t { kEntailment, kGeneralization };

constexpr std::string_view regime_name(Regime r) {
  return r == Regime::kEntailment ? "entailment" : "generalization";
}

/// A KB fact relation(subject, object).
struct Triple {
  RelationId relation = 0;
  EntityId subject = 0;
  EntityId object = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

}  // namespace emql
