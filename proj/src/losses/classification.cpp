#include <algorithm>
#include <cmath>

#include "relcl/error.hpp"
#include "relcl/kernels.hpp"
#include "relcl/losses.hpp"
#include "softmax.hpp"

namespace relcl {

namespace {

void check_classifier(const Matrix& z, std::size_t n_labels, const Matrix& w, const Matrix& b) {
  if (n_labels != z.rows()) throw ArgumentError("classifier: one label set per row required");
  if (w.cols() != z.cols()) throw ArgumentError("classifier: weight width must equal embedding width");
  if (b.rows() != 1 || b.cols() != w.rows()) throw ArgumentError("classifier: bias must be 1 x R");
}

// logits(i, r) = w_r . z_i + b_r
Matrix classifier_logits(const Matrix& z, const Matrix& w, const Matrix& b) {
  Matrix logits(z.rows(), w.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t r = 0; r < w.rows(); ++r) logits(i, r) = b(0, r);
  }
  kernels::matmul_nt_acc(z, w, logits);
  return logits;
}

ClassifierLossResult classifier_backward(double value, const Matrix& z, const Matrix& w, const Matrix& d_logits) {
  ClassifierLossResult out{value, Matrix(z.rows(), z.cols()), Matrix(w.rows(), w.cols()), Matrix(1, w.rows())};
  kernels::matmul_acc(d_logits, w, out.grad_z);
  kernels::matmul_tn_acc(d_logits, z, out.grad_w);
  for (std::size_t i = 0; i < d_logits.rows(); ++i) {
    for (std::size_t r = 0; r < d_logits.cols(); ++r) out.grad_b(0, r) += d_logits(i, r);
  }
  return out;
}

}  // namespace

ClassifierLossResult loss_ce(const Matrix& z, std::span<const LabelSet> labels, const Matrix& w, const Matrix& b) {
  check_classifier(z, labels.size(), w, b);
  const std::size_t n = z.rows(), n_rel = w.rows();
  if (n == 0) throw UndefinedLossError("loss_ce: empty batch");
  const Matrix logits = classifier_logits(z, w, b);
  Matrix d_logits(n, n_rel);
  const double scale = 1.0 / static_cast<double>(n);
  double value = 0.0;
  std::vector<double> probs;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i].size() != 1) throw ArgumentError("loss_ce: single-label rows required");
    const auto y = static_cast<std::size_t>(labels[i][0]);
    if (labels[i][0] < 0 || y >= n_rel) throw ArgumentError("loss_ce: label outside inventory");
    value += (detail::log_sum_exp(logits.row_span(i), probs) - logits(i, y)) * scale;
    for (std::size_t r = 0; r < n_rel; ++r) d_logits(i, r) = (probs[r] - (r == y ? 1.0 : 0.0)) * scale;
  }
  return classifier_backward(value, z, w, d_logits);
}

ClassifierLossResult loss_classifier_atl(const Matrix& z, std::span<const LabelSet> labels, const Matrix& w,
                                         const Matrix& b, RelationId na) {
  check_classifier(z, labels.size(), w, b);
  const std::size_t n = z.rows(), n_rel = w.rows();
  if (n == 0) throw UndefinedLossError("loss_classifier_atl: empty batch");
  const Matrix logits = classifier_logits(z, w, b);
  Matrix d_logits(n, n_rel);
  const double scale = 1.0 / static_cast<double>(n);
  double value = 0.0;
  std::vector<RelationId> pos, neg;
  for (std::size_t i = 0; i < n; ++i) {
    pos.clear();
    neg.clear();
    for (RelationId r = 0; r < static_cast<RelationId>(n_rel); ++r) {
      if (r == na) continue;
      const bool positive = std::find(labels[i].begin(), labels[i].end(), r) != labels[i].end();
      (positive ? pos : neg).push_back(r);
    }
    const AtlResult atl = loss_atl(logits.row_span(i), pos, neg, na);
    value += atl.value * scale;
    for (std::size_t r = 0; r < n_rel; ++r) d_logits(i, r) = atl.grad[r] * scale;
  }
  return classifier_backward(value, z, w, d_logits);
}

LossResult loss_supcon(const Matrix& z, std::span<const RelationId> labels, Temperature tau) {
  const std::size_t n = z.rows(), d = z.cols();
  if (labels.size() != n) throw ArgumentError("loss_supcon: one label per row required");
  const NormalizedRows u = normalize_rows(z);
  const double inv_t = 1.0 / tau.value();
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) {
        anchors.push_back(i);
        break;
      }
    }
  }
  if (anchors.empty()) throw UndefinedLossError("loss_supcon: no anchor has a same-label peer");
  const double scale = 1.0 / static_cast<double>(anchors.size());
  Matrix du(n, d);
  double value = 0.0;
  std::vector<double> logits, probs;
  std::vector<std::size_t> others;
  for (std::size_t i : anchors) {
    others.clear();
    for (std::size_t a = 0; a < n; ++a) {
      if (a != i) others.push_back(a);
    }
    logits.resize(others.size());
    for (std::size_t k = 0; k < others.size(); ++k) {
      logits[k] = kernels::dot(u.unit.row(i), u.unit.row(others[k]), d) * inv_t;
    }
    const double lse = detail::log_sum_exp(logits, probs);
    std::size_t n_pos = 0;
    for (std::size_t k = 0; k < others.size(); ++k) n_pos += labels[others[k]] == labels[i];
    const double inv_pos = 1.0 / static_cast<double>(n_pos);
    for (std::size_t k = 0; k < others.size(); ++k) {
      const bool positive = labels[others[k]] == labels[i];
      if (positive) value += (lse - logits[k]) * inv_pos * scale;
      const double g = (probs[k] - (positive ? inv_pos : 0.0)) * inv_t * scale;
      kernels::axpy(g, u.unit.row(others[k]), du.row(i), d);
      kernels::axpy(g, u.unit.row(i), du.row(others[k]), d);
    }
  }
  LossResult out{value, Matrix(n, d)};
  normalize_rows_backward(u, du, out.grad);
  return out;
}

}  // namespace relcl
