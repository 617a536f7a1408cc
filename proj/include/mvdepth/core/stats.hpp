#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace mvdepth {

/// Median of a copy of the values; even counts average the two middle elements.
inline double median_of(std::vector<double> values) {
  if (values.empty()) throw std::domain_error("median_of: empty input");
  size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace mvdepth
