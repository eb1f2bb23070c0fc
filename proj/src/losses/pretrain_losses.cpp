#include <cmath>

#include "relcl/error.hpp"
#include "relcl/kernels.hpp"
#include "relcl/losses.hpp"
#include "softmax.hpp"

namespace relcl {

LossResult loss_rel(const Matrix& z, std::span<const std::pair<std::size_t, std::size_t>> positives,
                    const std::vector<std::vector<std::size_t>>& negatives, Temperature tau) {
  if (positives.empty()) throw UndefinedLossError("loss_rel: no positive pairs in batch");
  const std::size_t n = z.rows(), d = z.cols();
  if (negatives.size() != n) throw ArgumentError("loss_rel: need one negative list per row");
  const NormalizedRows u = normalize_rows(z);
  Matrix du(n, d);
  const double inv_t = 1.0 / tau.value();
  const double scale = 1.0 / static_cast<double>(positives.size());
  double total = 0.0;
  std::vector<double> logits, probs;
  std::vector<std::size_t> others;
  for (const auto& [i, j] : positives) {
    if (i >= n || j >= n || i == j) throw ArgumentError("loss_rel: bad positive pair");
    others.assign(1, j);
    others.insert(others.end(), negatives[i].begin(), negatives[i].end());
    logits.resize(others.size());
    for (std::size_t k = 0; k < others.size(); ++k) {
      logits[k] = kernels::dot(u.unit.row(i), u.unit.row(others[k]), d) * inv_t;
    }
    total += detail::log_sum_exp(logits, probs) - logits[0];
    for (std::size_t k = 0; k < others.size(); ++k) {
      const double g = (probs[k] - (k == 0 ? 1.0 : 0.0)) * inv_t * scale;
      kernels::axpy(g, u.unit.row(others[k]), du.row(i), d);
      kernels::axpy(g, u.unit.row(i), du.row(others[k]), d);
    }
  }
  LossResult out{total * scale, Matrix(n, d)};
  normalize_rows_backward(u, du, out.grad);
  return out;
}

DualLossResult loss_self(const Matrix& z, const Matrix& z_hat, std::span<const std::size_t> anchors,
                         Temperature tau) {
  const std::size_t n = z.rows(), d = z.cols();
  if (!z.same_shape(z_hat)) throw ArgumentError("loss_self: z and z_hat must align");
  DualLossResult out{0.0, Matrix(n, d), Matrix(n, d)};
  if (anchors.empty()) return out;
  const NormalizedRows u = normalize_rows(z);
  const NormalizedRows v = normalize_rows(z_hat);
  Matrix du(n, d), dv(n, d);
  const double inv_t = 1.0 / tau.value();
  const double scale = 1.0 / static_cast<double>(anchors.size());
  std::vector<double> logits(n), probs;
  for (std::size_t i : anchors) {
    if (i >= n) throw ArgumentError("loss_self: anchor out of range");
    for (std::size_t k = 0; k < n; ++k) logits[k] = kernels::dot(u.unit.row(i), v.unit.row(k), d) * inv_t;
    out.value += (detail::log_sum_exp(logits, probs) - logits[i]) * scale;
    for (std::size_t k = 0; k < n; ++k) {
      const double g = (probs[k] - (k == i ? 1.0 : 0.0)) * inv_t * scale;
      kernels::axpy(g, v.unit.row(k), du.row(i), d);
      kernels::axpy(g, u.unit.row(i), dv.row(k), d);
    }
  }
  normalize_rows_backward(u, du, out.grad_z);
  normalize_rows_backward(v, dv, out.grad_z_hat);
  return out;
}

LossResult loss_mlm(const Matrix& logits, std::span<const int> targets) {
  if (targets.size() != logits.rows()) throw ArgumentError("loss_mlm: one target per row required");
  LossResult out{0.0, Matrix(logits.rows(), logits.cols())};
  if (logits.rows() == 0) return out;
  const double scale = 1.0 / static_cast<double>(logits.rows());
  std::vector<double> probs;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto t = static_cast<std::size_t>(targets[i]);
    if (targets[i] < 0 || t >= logits.cols()) throw ArgumentError("loss_mlm: target outside vocabulary");
    const double lse = detail::log_sum_exp(logits.row_span(i), probs);
    out.value += (lse - logits(i, t)) * scale;
    for (std::size_t j = 0; j < logits.cols(); ++j) out.grad(i, j) = (probs[j] - (j == t ? 1.0 : 0.0)) * scale;
  }
  return out;
}

}  // namespace relcl
