#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emql/matrix.hpp"

namespace emql {

/// Rows with the largest inner products, best first. Equal scores are ordered
/// by ascending row id.
struct TopKResult {
  std::vector<std::uint32_t> ids;
  std::vector<double> scores;

  std::size_t size() const noexcept { return ids.size(); }
};

/// Exact TOP_k by full scan. Returns min(k, rows) results.
/// Throws ShapeError if the query length differs from the column count and
/// ArgumentError if k == 0.
TopKResult top_k(std::span<const float> query, const Matrix& matrix, std::size_t k);

/// Same as top_k for each query, sharing one pass over the matrix.
std::vector<TopKResult> top_k_batch(std::span<const std::vector<float>> queries,
                                    const Matrix& matrix, std::size_t k);

/// Retrieval backend over a fixed matrix. Callers depend on this so that an
/// approximate engine can be substituted for the exact scan.
class MipsIndex {
 public:
  virtual ~MipsIndex() = default;
  virtual TopKResult search(std::span<const float> query, std::size_t k) const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t size() const = 0;
};

class ExactMipsIndex final : public MipsIndex {
 public:
  /// The matrix must outlive the index.
  explicit ExactMipsIndex(const Matrix& matrix) : matrix_(&matrix) {}

  TopKResult search(std::span<const float> query, std::size_t k) const override {
    return top_k(query, *matrix_, k);
  }
  std::size_t dim() const override { return matrix_->cols(); }
  std::size_t size() const override { return matrix_->rows(); }

 private:
  const Matrix* matrix_;
};

}  // namespace emql
