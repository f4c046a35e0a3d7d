#include "emql/mips.hpp"

#include <algorithm>
#include <numeric>

#include "emql/errors.hpp"

namespace emql {
namespace {

void check_args(std::size_t query_len, const Matrix& matrix, std::size_t k) {
  if (k == 0) throw ArgumentError("top_k: k must be positive");
  if (query_len != matrix.cols()) {
    throw ShapeError("top_k: query has " + std::to_string(query_len) + " dims, matrix has " +
                     std::to_string(matrix.cols()));
  }
}

TopKResult select(const std::vector<double>& scores, std::size_t k) {
  const std::size_t n = scores.size();
  k = std::min(k, n);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  auto better = [&scores](std::uint32_t a, std::uint32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  if (k < n) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                     better);
    order.resize(k);
  }
  std::sort(order.begin(), order.end(), better);

  TopKResult out;
  out.ids = std::move(order);
  out.scores.reserve(k);
  for (auto id : out.ids) out.scores.push_back(scores[id]);
  return out;
}

}  // namespace

TopKResult top_k(std::span<const float> query, const Matrix& matrix, std::size_t k) {
  check_args(query.size(), matrix, k);
  // Skip trailing all-zero query blocks: follow queries pad the object slot
  // with zeros and those columns cannot change any score.
  std::size_t active = query.size();
  while (active > 0 && query[active - 1] == 0.0f) --active;
  const auto q = query.first(active);

  std::vector<double> scores(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    scores[r] = dot(q, matrix.row(r).first(active));
  }
  return select(scores, k);
}

std::vector<TopKResult> top_k_batch(std::span<const std::vector<float>> queries,
                                    const Matrix& matrix, std::size_t k) {
  for (const auto& q : queries) check_args(q.size(), matrix, k);
  std::vector<std::vector<double>> scores(queries.size(), std::vector<double>(matrix.rows()));
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto row = matrix.row(r);
    for (std::size_t i = 0; i < queries.size(); ++i) scores[i][r] = dot(queries[i], row);
  }
  std::vector<TopKResult> out;
  out.reserve(queries.size());
  for (const auto& s : scores) out.push_back(select(s, k));
  return out;
}

}  // namespace emql
