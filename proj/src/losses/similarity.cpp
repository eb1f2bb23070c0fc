#include <cmath>

#include "relcl/error.hpp"
#include "relcl/kernels.hpp"
#include "relcl/losses.hpp"

namespace relcl {

Temperature::Temperature(double value) : value_(value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ArgumentError("temperature must be positive");
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("cosine_sim: dimension mismatch");
  const double na = std::max(std::sqrt(kernels::dot(a.data(), a.data(), a.size())), kNormFloor);
  const double nb = std::max(std::sqrt(kernels::dot(b.data(), b.data(), b.size())), kNormFloor);
  return kernels::dot(a.data(), b.data(), a.size()) / (na * nb);
}

NormalizedRows normalize_rows(const Matrix& z) {
  NormalizedRows out{Matrix(z.rows(), z.cols()), std::vector<double>(z.rows())};
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double n = std::max(std::sqrt(kernels::dot(z.row(i), z.row(i), z.cols())), kNormFloor);
    out.norms[i] = n;
    for (std::size_t j = 0; j < z.cols(); ++j) out.unit(i, j) = z(i, j) / n;
  }
  return out;
}

void normalize_rows_backward(const NormalizedRows& n, const Matrix& d_unit, Matrix& d_z) {
  const std::size_t d = n.unit.cols();
  for (std::size_t i = 0; i < n.unit.rows(); ++i) {
    const double* u = n.unit.row(i);
    const double* du = d_unit.row(i);
    const double proj = kernels::dot(u, du, d);
    double* dz = d_z.row(i);
    // below the floor the norm is a constant
    if (n.norms[i] <= kNormFloor) {
      for (std::size_t j = 0; j < d; ++j) dz[j] += du[j] / n.norms[i];
      continue;
    }
    for (std::size_t j = 0; j < d; ++j) dz[j] += (du[j] - u[j] * proj) / n.norms[i];
  }
}

}  // namespace relcl
