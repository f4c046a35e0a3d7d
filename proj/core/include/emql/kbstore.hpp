#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emql/matrix.hpp"
#include "emql/types.hpp"

namespace emql {

/// Bidirectional name <-> dense id maps for entities and relations. Ids are
/// assigned in first-appearance order.
class Vocab {
 public:
  EntityId add_entity(std::string_view name);
  RelationId add_relation(std::string_view name);

  /// Throws UnknownNameError for names not in the vocabulary.
  EntityId entity_id(std::string_view name) const;
  RelationId relation_id(std::string_view name) const;
  std::optional<EntityId> find_entity(std::string_view name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;

  const std::string& entity_name(EntityId id) const { return entities_.at(id); }
  const std::string& relation_name(RelationId id) const { return relations_.at(id); }

  std::size_t num_entities() const noexcept { return entities_.size(); }
  std::size_t num_relations() const noexcept { return relations_.size(); }

 private:
  std::vector<std::string> entities_;
  std::vector<std::string> relations_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

/// A vocabulary plus a deduplicated list of triples over it.
struct KnowledgeBase {
  Vocab vocab;
  std::vector<Triple> triples;

  std::size_t num_entities() const noexcept { return vocab.num_entities(); }
  std::size_t num_relations() const noexcept { return vocab.num_relations(); }
};

struct LoadOptions {
  /// Drop every (subject, relation) group with more objects than this.
  std::optional<std::size_t> max_fanout;
  bool add_inverses = false;
};

/// Reads `subject\trelation\tobject` lines. Blank lines are skipped; any other
/// line without exactly three non-empty fields is a ParseError carrying the
/// 1-based line number. An input with no triples throws EmptyKbError.
KnowledgeBase parse_kb(std::istream& in, const LoadOptions& options = {});
KnowledgeBase load_kb(const std::filesystem::path& path, const LoadOptions& options = {});

void write_kb(std::ostream& out, const Vocab& vocab, std::span<const Triple> triples);
void save_kb(const std::filesystem::path& path, const Vocab& vocab,
             std::span<const Triple> triples);

/// Adds `<r>_inv` for every relation r and the triple r_inv(y, x) for every
/// r(x, y). Doubles the relation count.
void add_inverse_relations(KnowledgeBase& kb);

/// Training KB and full KB. Held-out triples are full minus training.
struct KbSplit {
  std::vector<Triple> training;
  std::vector<Triple> full;

  std::vector<Triple> held_out() const;
};

/// Entity and relation embeddings plus the triple matrix K, whose row t is
/// [e_r ; e_x ; e_y] for triple t = r(x, y).
///
/// Mutable access to the embeddings marks K stale; triple_matrix() throws
/// StaleTripleMatrixError until build_triple_matrix() runs again.
class TripleStore {
 public:
  TripleStore(std::size_t num_entities, std::size_t num_relations, std::vector<Triple> triples,
              std::size_t dim);

  /// Uniform in [-1/sqrt(d), 1/sqrt(d)].
  void initialize_embeddings(std::uint64_t seed);
  void set_embeddings(Matrix entities, Matrix relations, std::uint64_t seed = 0);

  const Matrix& entities() const { return entities_; }
  const Matrix& relations() const { return relations_; }
  Matrix& mutable_entities();
  Matrix& mutable_relations();

  void build_triple_matrix();
  const Matrix& triple_matrix() const;
  bool triple_matrix_current() const noexcept { return built_version_ == version_; }

  std::span<const Triple> triples() const noexcept { return triples_; }
  std::size_t num_entities() const noexcept { return num_entities_; }
  std::size_t num_relations() const noexcept { return num_relations_; }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool initialized() const noexcept { return initialized_; }

 private:
  std::size_t num_entities_;
  std::size_t num_relations_;
  std::size_t dim_;
  std::vector<Triple> triples_;
  Matrix entities_;
  Matrix relations_;
  Matrix triples_matrix_;
  std::uint64_t seed_ = 0;
  bool initialized_ = false;
  std::uint64_t version_ = 1;
  std::uint64_t built_version_ = 0;
};

// Checkpoint: "EMQE", u32 version, u32 N, u32 N_R, u32 d, u64 seed, then E and
// R as row-major little-endian float32.
struct Checkpoint {
  Matrix entities;
  Matrix relations;
  std::uint64_t seed = 0;
};

void write_checkpoint(std::ostream& out, const TripleStore& store);
void save_checkpoint(const std::filesystem::path& path, const TripleStore& store);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace emql
