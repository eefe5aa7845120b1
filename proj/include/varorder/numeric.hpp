#pragma once

#include <cstddef>
#include <vector>

namespace varorder {

// Kahan compensated sum.
inline double kahan_sum(const std::vector<double>& xs) {
  double s = 0.0, c = 0.0;
  for (double x : xs) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

// Sum of xs[begin, end) with a fixed recursive splitting, so the result
// is a pure function of the operand values and independent of chunking
// done by any caller.
inline double pairwise_sum(const double* xs, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += xs[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs, half) + pairwise_sum(xs + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& xs) {
  return pairwise_sum(xs.data(), xs.size());
}

}  // namespace varorder
