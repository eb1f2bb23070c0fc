#pragma once

// Central-difference gradient checking. Error is measured on whole gradient
// vectors: |analytic - numeric| / max(|analytic|, |numeric|, floor).

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "relcl/matrix.hpp"

namespace relcl::testing {

inline std::vector<double> numeric_gradient(Matrix& x, const std::function<double()>& f, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + h;
    const double up = f();
    x.data()[i] = saved - h;
    const double down = f();
    x.data()[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                             double floor = 1e-8) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
}

inline double relative_error(const Matrix& analytic, const std::vector<double>& numeric, double floor = 1e-8) {
  return relative_error(analytic.values(), numeric, floor);
}

}  // namespace relcl::testing
