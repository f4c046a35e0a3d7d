#pragma once

#include <span>
#include <vector>

namespace emql {

/// Max-shifted softmax in double precision. Empty input gives empty output.
std::vector<double> softmax(std::span<const double> logits);

double log_sum_exp(std::span<const double> logits);

}  // namespace emql
