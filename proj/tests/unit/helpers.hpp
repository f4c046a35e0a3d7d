#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "emql/cms.hpp"
#include "emql/matrix.hpp"

namespace emql::test {

inline std::vector<ElementId> random_ids(std::mt19937_64& rng, std::size_t count,
                                         std::size_t universe) {
  std::uniform_int_distribution<ElementId> pick(0, static_cast<ElementId>(universe - 1));
  std::set<ElementId> ids;
  while (ids.size() < count) ids.insert(pick(rng));
  return {ids.begin(), ids.end()};
}

// Weights are small dyadic rationals so float sums stay exact.
inline WeightedSet random_set(std::mt19937_64& rng, std::size_t count, std::size_t universe) {
  std::uniform_int_distribution<int> w(1, 16);
  WeightedSet s(universe);
  for (ElementId id : random_ids(rng, count, universe)) s.set(id, w(rng) / 4.0);
  return s;
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            float scale = 1.0f) {
  std::uniform_real_distribution<float> u(-scale, scale);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

// Table filled straight from the hash family, without CountMinSketch::insert.
inline std::vector<float> oracle_table(const WeightedSet& s, const HashFamily& f) {
  std::vector<float> t(static_cast<std::size_t>(f.depth()) * f.width(), 0.0f);
  for (const auto& [id, w] : s) {
    for (std::uint32_t j = 0; j < f.depth(); ++j) {
      t[static_cast<std::size_t>(j) * f.width() + f.bucket(j, id)] += static_cast<float>(w);
    }
  }
  return t;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("emql-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace emql::test
