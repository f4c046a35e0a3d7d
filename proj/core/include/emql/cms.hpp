#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "emql/types.hpp"

namespace emql {

/// Sparse map from element id to a strictly positive weight. Zero weights are
/// never stored; ids must be below the universe size.
class WeightedSet {
 public:
  using Map = std::map<ElementId, double>;
  static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

  WeightedSet() = default;
  explicit WeightedSet(std::size_t universe_size) : universe_size_(universe_size) {}

  static WeightedSet uniform(std::size_t universe_size, std::span<const ElementId> ids,
                             double weight = 1.0);

  /// Sets the weight of `id`; a zero weight removes it.
  void set(ElementId id, double weight);
  /// Adds to the current weight of `id`.
  void add(ElementId id, double weight);

  double weight(ElementId id) const;
  bool contains(ElementId id) const { return entries_.contains(id); }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t universe_size() const noexcept { return universe_size_; }
  double total_weight() const;
  std::vector<ElementId> support() const;

  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

  bool operator==(const WeightedSet&) const = default;

 private:
  void check(ElementId id, double weight) const;

  std::size_t universe_size_ = kUnbounded;
  Map entries_;
};

/// N_D seeded hash functions h_j : [0, N) -> [0, N_W). Row keys are derived by
/// mixing the global seed with the row index, so equal parameters always give
/// bit-identical buckets.
class HashFamily {
 public:
  HashFamily(std::uint64_t seed, std::uint32_t depth, std::uint32_t width,
             std::size_t universe_size = WeightedSet::kUnbounded);

  std::uint32_t bucket(std::uint32_t row, ElementId id) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint32_t depth() const noexcept { return depth_; }
  std::uint32_t width() const noexcept { return width_; }
  std::size_t universe_size() const noexcept { return universe_size_; }

  bool operator==(const HashFamily& o) const noexcept {
    return seed_ == o.seed_ && depth_ == o.depth_ && width_ == o.width_ &&
           universe_size_ == o.universe_size_;
  }

 private:
  std::uint64_t seed_;
  std::uint32_t depth_;
  std::uint32_t width_;
  std::size_t universe_size_;
  std::vector<std::uint64_t> row_keys_;
};

using HashFamilyPtr = std::shared_ptr<const HashFamily>;

HashFamilyPtr make_hash_family(std::uint64_t seed, std::uint32_t depth, std::uint32_t width,
                               std::size_t universe_size = WeightedSet::kUnbounded);

/// Count-min sketch: a depth x width table of float cells, stored row-major.
/// Row j is the primitive sketch of the encoded set under h_j.
class CountMinSketch {
 public:
  /// All-zero sketch, i.e. the sketch of the empty set.
  explicit CountMinSketch(HashFamilyPtr family);

  const HashFamily& family() const noexcept { return *family_; }
  const HashFamilyPtr& shared_family() const noexcept { return family_; }
  std::uint32_t depth() const noexcept { return family_->depth(); }
  std::uint32_t width() const noexcept { return family_->width(); }

  float cell(std::uint32_t row, std::uint32_t col) const {
    return table_[static_cast<std::size_t>(row) * width() + col];
  }
  std::span<const float> table() const noexcept { return table_; }

  void insert(ElementId id, double weight);
  double lookup(ElementId id) const;
  bool is_zero() const noexcept;

  /// Same hash parameters and bit-identical cells.
  bool operator==(const CountMinSketch& o) const;

 private:
  friend CountMinSketch sketch_add(const CountMinSketch&, const CountMinSketch&);
  friend CountMinSketch sketch_hadamard(const CountMinSketch&, const CountMinSketch&);
  friend CountMinSketch sketch_mask_nonmembers(const CountMinSketch&, const CountMinSketch&);
  friend CountMinSketch vacuous_sketch(HashFamilyPtr);
  friend CountMinSketch read_sketch(std::istream&, std::size_t);

  void check_id(ElementId id) const;

  HashFamilyPtr family_;
  std::vector<float> table_;
};

CountMinSketch sketch_insert(CountMinSketch sketch, ElementId id, double weight);
CountMinSketch sketch_from_set(const WeightedSet& set, HashFamilyPtr family);
double cm_lookup(const CountMinSketch& sketch, ElementId id);

// The combinators require both operands to share hash parameters and throw
// IncompatibleSketchError otherwise.
CountMinSketch sketch_add(const CountMinSketch& a, const CountMinSketch& b);
CountMinSketch sketch_hadamard(const CountMinSketch& a, const CountMinSketch& b);
/// Keeps a cell of `a` only where the same cell of `b` is zero.
CountMinSketch sketch_mask_nonmembers(const CountMinSketch& a, const CountMinSketch& b);
/// All-ones sketch; every lookup returns 1.
CountMinSketch vacuous_sketch(HashFamilyPtr family);

bool compatible(const CountMinSketch& a, const CountMinSketch& b) noexcept;

// Binary format: "EMQS", u32 version, u64 seed, u32 depth, u32 width, then
// depth*width little-endian float32 cells.
void write_sketch(std::ostream& out, const CountMinSketch& sketch);
CountMinSketch read_sketch(std::istream& in,
                           std::size_t universe_size = WeightedSet::kUnbounded);

}  // namespace emql
