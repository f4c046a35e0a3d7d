#include "emql/cms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "emql/errors.hpp"

namespace emql {
namespace {

constexpr char kSketchMagic[5] = "EMQS";
constexpr std::uint32_t kSketchVersion = 1;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void require_compatible(const CountMinSketch& a, const CountMinSketch& b, const char* op) {
  if (!compatible(a, b)) {
    throw IncompatibleSketchError(std::string(op) + ": sketches use different hash families");
  }
}

}  // namespace

// --- WeightedSet ------------------------------------------------------------

WeightedSet WeightedSet::uniform(std::size_t universe_size, std::span<const ElementId> ids,
                                 double weight) {
  WeightedSet s(universe_size);
  for (ElementId id : ids) s.set(id, weight);
  return s;
}

void WeightedSet::check(ElementId id, double weight) const {
  if (id >= universe_size_) {
    throw UniverseError("element id " + std::to_string(id) + " outside universe of size " +
                        std::to_string(universe_size_));
  }
  if (!std::isfinite(weight) || weight < 0.0) {
    throw ArgumentError("weights must be finite and non-negative");
  }
}

void WeightedSet::set(ElementId id, double weight) {
  check(id, weight);
  if (weight == 0.0) {
    entries_.erase(id);
  } else {
    entries_[id] = weight;
  }
}

void WeightedSet::add(ElementId id, double weight) {
  check(id, weight);
  if (weight == 0.0) return;
  entries_[id] += weight;
}

double WeightedSet::weight(ElementId id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? 0.0 : it->second;
}

double WeightedSet::total_weight() const {
  double total = 0.0;
  for (const auto& [id, w] : entries_) total += w;
  return total;
}

std::vector<ElementId> WeightedSet::support() const {
  std::vector<ElementId> ids;
  ids.reserve(entries_.size());
  for (const auto& [id, w] : entries_) ids.push_back(id);
  return ids;
}

// --- HashFamily -------------------------------------------------------------

HashFamily::HashFamily(std::uint64_t seed, std::uint32_t depth, std::uint32_t width,
                       std::size_t universe_size)
    : seed_(seed), depth_(depth), width_(width), universe_size_(universe_size) {
  if (depth == 0 || width == 0) throw ArgumentError("sketch depth and width must be positive");
  row_keys_.reserve(depth);
  for (std::uint32_t j = 0; j < depth; ++j) {
    row_keys_.push_back(mix64(seed ^ mix64(0x5bd1e995ULL + j)));
  }
}

std::uint32_t HashFamily::bucket(std::uint32_t row, ElementId id) const noexcept {
  return static_cast<std::uint32_t>(mix64(row_keys_[row] ^ static_cast<std::uint64_t>(id)) %
                                    width_);
}

HashFamilyPtr make_hash_family(std::uint64_t seed, std::uint32_t depth, std::uint32_t width,
                               std::size_t universe_size) {
  return std::make_shared<const HashFamily>(seed, depth, width, universe_size);
}

// --- CountMinSketch ---------------------------------------------------------

CountMinSketch::CountMinSketch(HashFamilyPtr family)
    : family_(std::move(family)),
      table_(static_cast<std::size_t>(family_->depth()) * family_->width(), 0.0f) {}

void CountMinSketch::check_id(ElementId id) const {
  if (id >= family_->universe_size()) {
    throw UniverseError("element id " + std::to_string(id) + " outside universe of size " +
                        std::to_string(family_->universe_size()));
  }
}

void CountMinSketch::insert(ElementId id, double weight) {
  check_id(id);
  if (!std::isfinite(weight) || weight < 0.0) {
    throw ArgumentError("sketch weights must be finite and non-negative");
  }
  if (weight == 0.0) return;
  const auto w = static_cast<float>(weight);
  const std::uint32_t width = family_->width();
  for (std::uint32_t j = 0; j < family_->depth(); ++j) {
    table_[static_cast<std::size_t>(j) * width + family_->bucket(j, id)] += w;
  }
}

double CountMinSketch::lookup(ElementId id) const {
  check_id(id);
  const std::uint32_t width = family_->width();
  float best = table_[family_->bucket(0, id)];
  for (std::uint32_t j = 1; j < family_->depth(); ++j) {
    best = std::min(best, table_[static_cast<std::size_t>(j) * width + family_->bucket(j, id)]);
  }
  return best;
}

bool CountMinSketch::is_zero() const noexcept {
  return std::all_of(table_.begin(), table_.end(), [](float v) { return v == 0.0f; });
}

bool CountMinSketch::operator==(const CountMinSketch& o) const {
  if (!compatible(*this, o)) return false;
  return std::equal(table_.begin(), table_.end(), o.table_.begin(), [](float x, float y) {
    return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y);
  });
}

bool compatible(const CountMinSketch& a, const CountMinSketch& b) noexcept {
  return a.shared_family() == b.shared_family() || a.family() == b.family();
}

CountMinSketch sketch_insert(CountMinSketch sketch, ElementId id, double weight) {
  sketch.insert(id, weight);
  return sketch;
}

CountMinSketch sketch_from_set(const WeightedSet& set, HashFamilyPtr family) {
  CountMinSketch sketch(std::move(family));
  for (const auto& [id, w] : set) sketch.insert(id, w);
  return sketch;
}

double cm_lookup(const CountMinSketch& sketch, ElementId id) { return sketch.lookup(id); }

CountMinSketch sketch_add(const CountMinSketch& a, const CountMinSketch& b) {
  require_compatible(a, b, "sketch_add");
  CountMinSketch out = a;
  for (std::size_t i = 0; i < out.table_.size(); ++i) out.table_[i] += b.table_[i];
  return out;
}

CountMinSketch sketch_hadamard(const CountMinSketch& a, const CountMinSketch& b) {
  require_compatible(a, b, "sketch_hadamard");
  CountMinSketch out = a;
  for (std::size_t i = 0; i < out.table_.size(); ++i) out.table_[i] *= b.table_[i];
  return out;
}

CountMinSketch sketch_mask_nonmembers(const CountMinSketch& a, const CountMinSketch& b) {
  require_compatible(a, b, "sketch_mask_nonmembers");
  CountMinSketch out = a;
  for (std::size_t i = 0; i < out.table_.size(); ++i) {
    if (b.table_[i] != 0.0f) out.table_[i] = 0.0f;
  }
  return out;
}

CountMinSketch vacuous_sketch(HashFamilyPtr family) {
  CountMinSketch out(std::move(family));
  std::fill(out.table_.begin(), out.table_.end(), 1.0f);
  return out;
}

void write_sketch(std::ostream& out, const CountMinSketch& sketch) {
  detail::write_magic(out, kSketchMagic);
  detail::write_le<std::uint32_t>(out, kSketchVersion);
  detail::write_le<std::uint64_t>(out, sketch.family().seed());
  detail::write_le<std::uint32_t>(out, sketch.depth());
  detail::write_le<std::uint32_t>(out, sketch.width());
  detail::write_f32s(out, sketch.table());
  if (!out) throw FormatError("failed to write sketch");
}

CountMinSketch read_sketch(std::istream& in, std::size_t universe_size) {
  detail::expect_magic(in, kSketchMagic);
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kSketchVersion) {
    throw FormatError("unsupported sketch version " + std::to_string(version));
  }
  const auto seed = detail::read_le<std::uint64_t>(in);
  const auto depth = detail::read_le<std::uint32_t>(in);
  const auto width = detail::read_le<std::uint32_t>(in);
  CountMinSketch sketch(make_hash_family(seed, depth, width, universe_size));
  detail::read_f32s(in, sketch.table_);
  return sketch;
}

}  // namespace emql
