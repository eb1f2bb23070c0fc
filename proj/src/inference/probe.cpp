#include <random>

#include "relcl/error.hpp"
#include "relcl/inference.hpp"
#include "relcl/kernels.hpp"

namespace relcl {

// Inputs are unit-normalized, matching the cosine geometry of the other probes.

RelationId SoftmaxProbe::predict(std::span<const double> z) const {
  if (z.size() != w.cols()) throw ArgumentError("SoftmaxProbe: dimension mismatch");
  Matrix row(1, z.size());
  std::copy(z.begin(), z.end(), row.data());
  const NormalizedRows u = normalize_rows(row);
  RelationId best = 0;
  double best_value = 0.0;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double v = kernels::dot(w.row(r), u.unit.row(0), w.cols()) + b(0, r);
    if (r == 0 || v > best_value) {
      best = static_cast<RelationId>(r);
      best_value = v;
    }
  }
  return best;
}

SoftmaxProbe softmax_probe_fit(const Matrix& z, std::span<const RelationId> labels, std::size_t n_relations,
                               const ProbeFitOptions& options, std::vector<double>* loss_trace) {
  if (labels.size() != z.rows()) throw ArgumentError("softmax_probe_fit: one label per row required");
  if (n_relations == 0) throw ArgumentError("softmax_probe_fit: no relations");
  const Matrix u = normalize_rows(z).unit;
  std::vector<LabelSet> sets;
  for (RelationId y : labels) sets.push_back({y});
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> init(0.0, 0.01);
  SoftmaxProbe probe{Matrix(n_relations, z.cols()), Matrix(1, n_relations)};
  for (double& x : probe.w.values()) x = init(rng);
  if (z.rows() == 0) return probe;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const ClassifierLossResult r = loss_ce(u, sets, probe.w, probe.b);
    if (loss_trace) loss_trace->push_back(r.value);
    kernels::axpy(-options.learning_rate, r.grad_w.data(), probe.w.data(), probe.w.size());
    kernels::axpy(-options.learning_rate, r.grad_b.data(), probe.b.data(), probe.b.size());
  }
  return probe;
}

}  // namespace relcl
