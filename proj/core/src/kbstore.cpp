#include "emql/kbstore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "emql/errors.hpp"

namespace emql {
namespace {

constexpr char kCheckpointMagic[5] = "EMQE";
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Id>
Id intern(std::string_view name, std::vector<std::string>& names,
          std::unordered_map<std::string, Id>& ids) {
  auto [it, inserted] = ids.try_emplace(std::string(name), static_cast<Id>(names.size()));
  if (inserted) names.emplace_back(name);
  return it->second;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

// --- Vocab ------------------------------------------------------------------

EntityId Vocab::add_entity(std::string_view name) { return intern(name, entities_, entity_ids_); }

RelationId Vocab::add_relation(std::string_view name) {
  return intern(name, relations_, relation_ids_);
}

std::optional<EntityId> Vocab::find_entity(std::string_view name) const {
  auto it = entity_ids_.find(std::string(name));
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocab::find_relation(std::string_view name) const {
  auto it = relation_ids_.find(std::string(name));
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

EntityId Vocab::entity_id(std::string_view name) const {
  if (auto id = find_entity(name)) return *id;
  throw UnknownNameError("unknown entity: " + std::string(name));
}

RelationId Vocab::relation_id(std::string_view name) const {
  if (auto id = find_relation(name)) return *id;
  throw UnknownNameError("unknown relation: " + std::string(name));
}

// --- KB files -----------------------------------------------------------------

KnowledgeBase parse_kb(std::istream& in, const LoadOptions& options) {
  KnowledgeBase kb;
  std::set<Triple> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       line_no, 0);
    }
    for (std::size_t f = 0; f < 3; ++f) {
      if (fields[f].empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": empty field",
                         line_no, static_cast<std::size_t>(fields[f].data() - line.data()));
      }
    }
    Triple t;
    t.subject = kb.vocab.add_entity(fields[0]);
    t.relation = kb.vocab.add_relation(fields[1]);
    t.object = kb.vocab.add_entity(fields[2]);
    if (seen.insert(t).second) kb.triples.push_back(t);
  }
  if (kb.triples.empty()) throw EmptyKbError("knowledge base contains no triples");

  if (options.max_fanout) {
    std::map<std::pair<EntityId, RelationId>, std::size_t> fanout;
    for (const auto& t : kb.triples) ++fanout[{t.subject, t.relation}];
    std::erase_if(kb.triples, [&](const Triple& t) {
      return fanout[{t.subject, t.relation}] > *options.max_fanout;
    });
    if (kb.triples.empty()) throw EmptyKbError("fan-out filter removed every triple");
  }
  if (options.add_inverses) add_inverse_relations(kb);
  return kb;
}

KnowledgeBase load_kb(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_kb(in, options);
}

void write_kb(std::ostream& out, const Vocab& vocab, std::span<const Triple> triples) {
  for (const auto& t : triples) {
    out << vocab.entity_name(t.subject) << '\t' << vocab.relation_name(t.relation) << '\t'
        << vocab.entity_name(t.object) << '\n';
  }
}

void save_kb(const std::filesystem::path& path, const Vocab& vocab,
             std::span<const Triple> triples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_kb(out, vocab, triples);
}

void add_inverse_relations(KnowledgeBase& kb) {
  const std::size_t base = kb.vocab.num_relations();
  std::vector<RelationId> inverse(base);
  for (RelationId r = 0; r < base; ++r) {
    inverse[r] = kb.vocab.add_relation(kb.vocab.relation_name(r) + "_inv");
  }
  const std::size_t n = kb.triples.size();
  kb.triples.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Triple t = kb.triples[i];
    kb.triples.push_back({inverse[t.relation], t.object, t.subject});
  }
}

std::vector<Triple> KbSplit::held_out() const {
  std::set<Triple> train(training.begin(), training.end());
  std::vector<Triple> out;
  for (const auto& t : full) {
    if (!train.contains(t)) out.push_back(t);
  }
  return out;
}

// --- TripleStore --------------------------------------------------------------

TripleStore::TripleStore(std::size_t num_entities, std::size_t num_relations,
                         std::vector<Triple> triples, std::size_t dim)
    : num_entities_(num_entities),
      num_relations_(num_relations),
      dim_(dim),
      triples_(std::move(triples)) {
  if (dim == 0) throw ArgumentError("embedding dimension must be positive");
  for (const auto& t : triples_) {
    if (t.subject >= num_entities || t.object >= num_entities) {
      throw UniverseError("triple references an entity outside the vocabulary");
    }
    if (t.relation >= num_relations) {
      throw UniverseError("triple references a relation outside the vocabulary");
    }
  }
}

void TripleStore::initialize_embeddings(std::uint64_t seed) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(dim_));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> uniform(-bound, bound);
  Matrix entities(num_entities_, dim_);
  Matrix relations(num_relations_, dim_);
  for (float& v : entities.data()) v = uniform(rng);
  for (float& v : relations.data()) v = uniform(rng);
  set_embeddings(std::move(entities), std::move(relations), seed);
}

void TripleStore::set_embeddings(Matrix entities, Matrix relations, std::uint64_t seed) {
  if (entities.rows() != num_entities_ || entities.cols() != dim_ ||
      relations.rows() != num_relations_ || relations.cols() != dim_) {
    throw ShapeError("embedding matrices do not match the store's shape");
  }
  entities_ = std::move(entities);
  relations_ = std::move(relations);
  seed_ = seed;
  initialized_ = true;
  ++version_;
}

Matrix& TripleStore::mutable_entities() {
  ++version_;
  return entities_;
}

Matrix& TripleStore::mutable_relations() {
  ++version_;
  return relations_;
}

void TripleStore::build_triple_matrix() {
  if (!initialized_) throw UninitializedEmbeddingError("embeddings have not been initialized");
  if (triples_matrix_.rows() != triples_.size() || triples_matrix_.cols() != 3 * dim_) {
    triples_matrix_ = Matrix(triples_.size(), 3 * dim_);
  }
  for (std::size_t t = 0; t < triples_.size(); ++t) {
    auto row = triples_matrix_.row(t);
    const auto& tr = triples_[t];
    std::ranges::copy(relations_.row(tr.relation), row.begin());
    std::ranges::copy(entities_.row(tr.subject), row.begin() + static_cast<std::ptrdiff_t>(dim_));
    std::ranges::copy(entities_.row(tr.object),
                      row.begin() + static_cast<std::ptrdiff_t>(2 * dim_));
  }
  built_version_ = version_;
}

const Matrix& TripleStore::triple_matrix() const {
  if (built_version_ != version_) {
    throw StaleTripleMatrixError("triple matrix is stale; call build_triple_matrix()");
  }
  return triples_matrix_;
}

// --- Checkpoints --------------------------------------------------------------

void write_checkpoint(std::ostream& out, const TripleStore& store) {
  if (!store.initialized()) throw UninitializedEmbeddingError("nothing to checkpoint");
  detail::write_magic(out, kCheckpointMagic);
  detail::write_le<std::uint32_t>(out, kCheckpointVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.num_entities()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.num_relations()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
  detail::write_le<std::uint64_t>(out, store.seed());
  detail::write_f32s(out, store.entities().data());
  detail::write_f32s(out, store.relations().data());
  if (!out) throw FormatError("failed to write checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const TripleStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_checkpoint(out, store);
}

Checkpoint read_checkpoint(std::istream& in) {
  detail::expect_magic(in, kCheckpointMagic);
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto n = detail::read_le<std::uint32_t>(in);
  const auto n_rel = detail::read_le<std::uint32_t>(in);
  const auto dim = detail::read_le<std::uint32_t>(in);
  Checkpoint ckpt;
  ckpt.seed = detail::read_le<std::uint64_t>(in);
  ckpt.entities = Matrix(n, dim);
  ckpt.relations = Matrix(n_rel, dim);
  detail::read_f32s(in, ckpt.entities.data());
  detail::read_f32s(in, ckpt.relations.data());
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace emql
