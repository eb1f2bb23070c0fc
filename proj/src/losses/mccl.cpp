#include <algorithm>
#include <cmath>

#include "relcl/error.hpp"
#include "relcl/kernels.hpp"
#include "relcl/losses.hpp"
#include "softmax.hpp"

namespace relcl {

std::vector<double> mccl_weights(std::span<const double> sims, Temperature tau1) {
  if (sims.empty()) throw ArgumentError("mccl_weights: no candidates");
  std::vector<double> scaled(sims.size());
  for (std::size_t k = 0; k < sims.size(); ++k) scaled[k] = sims[k] / tau1.value();
  std::vector<double> w;
  detail::log_sum_exp(scaled, w);
  return w;
}

std::vector<std::vector<std::size_t>> relation_groups(std::span<const LabelSet> labels, std::size_t n_relations,
                                                      RelationId na) {
  std::vector<std::vector<std::size_t>> groups(n_relations);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) {
      groups.at(static_cast<std::size_t>(na)).push_back(i);
      continue;
    }
    for (RelationId r : labels[i]) groups.at(static_cast<std::size_t>(r)).push_back(i);
  }
  return groups;
}

namespace {

// Candidate index >= n refers to proxy (index - n).
struct ScoreTerm {
  std::vector<std::size_t> candidates;
  std::vector<double> sims;
  std::vector<double> weights;
};

struct ScoreCache {
  NormalizedRows u;
  NormalizedRows p;
  bool has_proxies = false;
  McclScores scores;
  std::vector<std::vector<ScoreTerm>> terms;  // n x R
};

ScoreCache compute_scores(const Matrix& z, std::span<const LabelSet> labels, const Matrix& proxies,
                          std::size_t n_relations, RelationId na, Temperature tau1, CandidateWeighting weighting) {
  const std::size_t n = z.rows(), d = z.cols();
  if (labels.size() != n) throw ArgumentError("mccl: one label set per row required");
  if (na < 0 || static_cast<std::size_t>(na) >= n_relations) throw ArgumentError("mccl: NA id outside inventory");
  ScoreCache cache;
  cache.has_proxies = !proxies.empty();
  if (cache.has_proxies && (proxies.rows() != n_relations || proxies.cols() != d)) {
    throw ArgumentError("mccl: proxies must be R x d");
  }
  cache.u = normalize_rows(z);
  if (cache.has_proxies) cache.p = normalize_rows(proxies);
  const auto groups = relation_groups(labels, n_relations, na);
  cache.scores.s = Matrix(n, n_relations);
  cache.scores.defined.assign(n, std::vector<char>(n_relations, 0));
  cache.terms.assign(n, std::vector<ScoreTerm>(n_relations));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < n_relations; ++r) {
      ScoreTerm& t = cache.terms[i][r];
      for (std::size_t j : groups[r]) {
        if (j == i) continue;
        t.candidates.push_back(j);
        t.sims.push_back(kernels::dot(cache.u.unit.row(i), cache.u.unit.row(j), d));
      }
      if (cache.has_proxies) {
        t.candidates.push_back(n + r);
        t.sims.push_back(kernels::dot(cache.u.unit.row(i), cache.p.unit.row(r), d));
      }
      if (t.candidates.empty()) continue;
      if (weighting == CandidateWeighting::softmax) {
        t.weights = mccl_weights(t.sims, tau1);
      } else {
        t.weights.assign(t.sims.size(), 1.0 / static_cast<double>(t.sims.size()));
      }
      double s = 0.0;
      for (std::size_t k = 0; k < t.sims.size(); ++k) s += t.weights[k] * t.sims[k];
      cache.scores.s(i, r) = s;
      cache.scores.defined[i][r] = 1;
    }
  }
  return cache;
}

// Pulls dL/ds back to embeddings and proxies.
void scores_backward(const ScoreCache& cache, const Matrix& grad_s, Temperature tau1, CandidateWeighting weighting,
                     ObjectiveResult& out) {
  const std::size_t n = cache.u.unit.rows(), d = cache.u.unit.cols();
  Matrix du(n, d);
  Matrix dp(cache.has_proxies ? cache.p.unit.rows() : 0, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < grad_s.cols(); ++r) {
      const double g = grad_s(i, r);
      if (g == 0.0 || !cache.scores.defined[i][r]) continue;
      const ScoreTerm& t = cache.terms[i][r];
      const double s = cache.scores.s(i, r);
      for (std::size_t k = 0; k < t.candidates.size(); ++k) {
        const double ds_dx = weighting == CandidateWeighting::softmax
                                 ? t.weights[k] * (1.0 + (t.sims[k] - s) / tau1.value())
                                 : t.weights[k];
        const double gx = g * ds_dx;
        const std::size_t c = t.candidates[k];
        const double* other = c < n ? cache.u.unit.row(c) : cache.p.unit.row(c - n);
        double* d_other = c < n ? du.row(c) : dp.row(c - n);
        kernels::axpy(gx, other, du.row(i), d);
        kernels::axpy(gx, cache.u.unit.row(i), d_other, d);
      }
    }
  }
  out.grad_z = Matrix(n, d);
  normalize_rows_backward(cache.u, du, out.grad_z);
  if (cache.has_proxies) {
    out.grad_proxies = Matrix(dp.rows(), d);
    normalize_rows_backward(cache.p, dp, out.grad_proxies);
  }
}

void check_biases(const Matrix& biases, std::size_t n_relations) {
  if (biases.rows() != 1 || biases.cols() != n_relations) throw ArgumentError("mccl: biases must be 1 x R");
}

}  // namespace

McclScores mccl_scores(const Matrix& z, std::span<const LabelSet> labels, const Matrix& proxies,
                       std::size_t n_relations, RelationId na, Temperature tau1, CandidateWeighting weighting) {
  return compute_scores(z, labels, proxies, n_relations, na, tau1, weighting).scores;
}

ScoreLossResult loss_mccl(const McclScores& scores, const Matrix& biases, Temperature tau2,
                          std::span<const LabelSet> labels) {
  const std::size_t n = scores.s.rows(), n_rel = scores.s.cols();
  if (labels.size() != n) throw ArgumentError("loss_mccl: one label set per row required");
  check_biases(biases, n_rel);
  ScoreLossResult out{0.0, Matrix(n, n_rel), Matrix(1, n_rel)};
  const double inv_t = 1.0 / tau2.value();
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i].size() != 1) throw ArgumentError("loss_mccl: single-label rows required");
    const auto y = static_cast<std::size_t>(labels[i][0]);
    if (labels[i][0] < 0 || y >= n_rel) throw ArgumentError("loss_mccl: label outside inventory");
    if (scores.defined[i][y]) rows.push_back(i);
  }
  if (rows.empty()) throw UndefinedLossError("loss_mccl: no row has a defined gold score");
  const double scale = 1.0 / static_cast<double>(rows.size());
  std::vector<double> logits, probs;
  std::vector<std::size_t> rel;
  for (std::size_t i : rows) {
    const auto y = static_cast<std::size_t>(labels[i][0]);
    rel.clear();
    logits.clear();
    std::size_t gold = 0;
    for (std::size_t r = 0; r < n_rel; ++r) {
      if (!scores.defined[i][r]) continue;
      if (r == y) gold = rel.size();
      rel.push_back(r);
      logits.push_back((scores.s(i, r) + biases(0, r)) * inv_t);
    }
    out.value += (detail::log_sum_exp(logits, probs) - logits[gold]) * scale;
    for (std::size_t k = 0; k < rel.size(); ++k) {
      const double g = (probs[k] - (k == gold ? 1.0 : 0.0)) * inv_t * scale;
      out.grad_s(i, rel[k]) += g;
      out.grad_b(0, rel[k]) += g;
    }
  }
  return out;
}

AtlResult loss_atl(std::span<const double> logits, std::span<const RelationId> positives,
                   std::span<const RelationId> negatives, RelationId na) {
  const auto at = [&](RelationId r) {
    if (r < 0 || static_cast<std::size_t>(r) >= logits.size()) throw ArgumentError("loss_atl: relation outside logits");
    return static_cast<std::size_t>(r);
  };
  AtlResult out{0.0, std::vector<double>(logits.size(), 0.0)};
  const std::size_t na_idx = at(na);
  std::vector<double> x, probs;
  if (!positives.empty()) {
    x.clear();
    for (RelationId r : positives) x.push_back(logits[at(r)]);
    x.push_back(logits[na_idx]);
    const double lse = detail::log_sum_exp(x, probs);
    const double n_pos = static_cast<double>(positives.size());
    for (std::size_t k = 0; k < positives.size(); ++k) {
      out.value += lse - x[k];
      out.grad[at(positives[k])] += n_pos * probs[k] - 1.0;
    }
    out.grad[na_idx] += n_pos * probs.back();
  }
  x.clear();
  for (RelationId r : negatives) x.push_back(logits[at(r)]);
  x.push_back(logits[na_idx]);
  const double lse = detail::log_sum_exp(x, probs);
  out.value += lse - x.back();
  for (std::size_t k = 0; k < negatives.size(); ++k) out.grad[at(negatives[k])] += probs[k];
  out.grad[na_idx] += probs.back() - 1.0;
  return out;
}

ObjectiveResult loss_mccl_multilabel(const Matrix& z, std::span<const LabelSet> labels, const Matrix& proxies,
                                     const Matrix& biases, RelationId na, double tau1, double tau2) {
  const std::size_t n_rel = biases.cols();
  check_biases(biases, n_rel);
  const Temperature t1(tau1), t2(tau2);
  const ScoreCache cache = compute_scores(z, labels, proxies, n_rel, na, t1, CandidateWeighting::softmax);
  const std::size_t n = z.rows();
  const auto na_idx = static_cast<std::size_t>(na);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (cache.scores.defined[i][na_idx]) rows.push_back(i);
  }
  if (rows.empty()) throw UndefinedLossError("loss_mccl_multilabel: NA threshold undefined for every row");
  const double scale = 1.0 / static_cast<double>(rows.size());
  const double inv_t = 1.0 / t2.value();
  ObjectiveResult out;
  out.grad_b = Matrix(1, n_rel);
  Matrix grad_s(n, n_rel);
  std::vector<double> logits(n_rel);
  std::vector<RelationId> pos, neg;
  for (std::size_t i : rows) {
    pos.clear();
    neg.clear();
    for (std::size_t r = 0; r < n_rel; ++r) {
      logits[r] = (cache.scores.s(i, r) + biases(0, r)) * inv_t;
      const auto rid = static_cast<RelationId>(r);
      if (rid == na || !cache.scores.defined[i][r]) continue;
      const bool positive = std::find(labels[i].begin(), labels[i].end(), rid) != labels[i].end();
      (positive ? pos : neg).push_back(rid);
    }
    const AtlResult atl = loss_atl(logits, pos, neg, na);
    out.value += atl.value * scale;
    for (std::size_t r = 0; r < n_rel; ++r) {
      const double g = atl.grad[r] * inv_t * scale;
      grad_s(i, r) += g;
      out.grad_b(0, r) += g;
    }
  }
  scores_backward(cache, grad_s, t1, CandidateWeighting::softmax, out);
  return out;
}

ObjectiveResult mccl_objective(const Matrix& z, std::span<const LabelSet> labels, const Matrix& proxies,
                               const Matrix& biases, RelationId na, const McclOptions& options) {
  if (options.mode == LabelMode::multi) {
    return loss_mccl_multilabel(z, labels, proxies, biases, na, options.tau1, options.tau2);
  }
  const std::size_t n_rel = biases.cols();
  check_biases(biases, n_rel);
  const Temperature t1(options.tau1), t2(options.tau2);
  const ScoreCache cache = compute_scores(z, labels, proxies, n_rel, na, t1, options.weighting);
  const ScoreLossResult loss = loss_mccl(cache.scores, biases, t2, labels);
  ObjectiveResult out;
  out.value = loss.value;
  out.grad_b = loss.grad_b;
  scores_backward(cache, loss.grad_s, t1, options.weighting, out);
  return out;
}

}  // namespace relcl
