#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace relcl::detail {

// log(sum exp(x)), max-shifted; fills `probs` with softmax(x).
inline double log_sum_exp(std::span<const double> x, std::vector<double>& probs) {
  probs.resize(x.size());
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probs[i] = std::exp(x[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return mx + std::log(sum);
}

}  // namespace relcl::detail
