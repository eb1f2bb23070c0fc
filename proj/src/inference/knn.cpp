#include <algorithm>
#include <cmath>
#include <functional>

#include "relcl/error.hpp"
#include "relcl/inference.hpp"
#include "relcl/kernels.hpp"
#include "relcl/trainer.hpp"

namespace relcl {

namespace {

std::vector<double> unit(std::span<const double> v) {
  const double n = std::max(std::sqrt(kernels::dot(v.data(), v.data(), v.size())), kNormFloor);
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

}  // namespace

EmbeddingIndex build_index(const Matrix& z, std::span<const LabelSet> labels, const RelationInventory& inventory,
                           std::vector<double> biases) {
  if (labels.size() != z.rows()) throw ArgumentError("build_index: one label set per row required");
  const std::size_t n_rel = inventory.size();
  if (biases.empty()) biases.assign(n_rel, 0.0);
  if (biases.size() != n_rel) throw ArgumentError("build_index: one bias per relation required");
  EmbeddingIndex index;
  index.dim = z.cols();
  index.na = inventory.na();
  index.mode = inventory.mode();
  index.biases = std::move(biases);
  index.instance_ids.resize(n_rel);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (labels[i].empty()) {
      index.instance_ids[static_cast<std::size_t>(inventory.na())].push_back(i);
      continue;
    }
    for (RelationId r : labels[i]) {
      if (!inventory.valid(r)) throw ArgumentError("build_index: label outside inventory");
      index.instance_ids[static_cast<std::size_t>(r)].push_back(i);
    }
  }
  index.groups.resize(n_rel);
  for (std::size_t r = 0; r < n_rel; ++r) {
    Matrix& g = index.groups[r];
    g = Matrix(index.instance_ids[r].size(), index.dim);
    for (std::size_t k = 0; k < index.instance_ids[r].size(); ++k) {
      const auto u = unit(z.row_span(index.instance_ids[r][k]));
      std::copy(u.begin(), u.end(), g.row(k));
    }
  }
  return index;
}

EmbeddingIndex build_index(const Model& model, const Corpus& corpus, const std::vector<PairInstance>& pairs) {
  const Matrix z = embed_pairs(model, corpus, pairs);
  std::vector<LabelSet> labels;
  for (const PairInstance& p : pairs) labels.push_back(p.labels);
  std::vector<double> biases;
  if (!model.rel_bias.empty()) biases = model.rel_bias.values();
  return build_index(z, labels, corpus.inventory, std::move(biases));
}

std::vector<double> knn_scores(const EmbeddingIndex& index, std::span<const double> query, std::size_t k) {
  if (k == 0) throw ArgumentError("knn_scores: k must be >= 1");
  if (query.size() != index.dim) throw ArgumentError("knn_scores: query dimension mismatch");
  const std::vector<double> q = unit(query);
  std::vector<double> scores(index.n_relations(), kEmptyGroupScore);
  std::vector<double> sims;
  for (std::size_t r = 0; r < index.n_relations(); ++r) {
    const Matrix& g = index.groups[r];
    if (g.rows() == 0) continue;
    sims.resize(g.rows());
    for (std::size_t i = 0; i < g.rows(); ++i) sims[i] = kernels::dot(q.data(), g.row(i), index.dim);
    const std::size_t take = std::min(k, sims.size());
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(take), sims.end(),
                      std::greater<double>());
    double sum = 0.0;
    for (std::size_t i = 0; i < take; ++i) sum += sims[i];
    scores[r] = sum / static_cast<double>(take);
  }
  return scores;
}

RelationId predict_single(std::span<const double> scores, std::span<const double> biases) {
  if (scores.size() != biases.size()) throw ArgumentError("predict_single: scores and biases differ in length");
  RelationId best = -1;
  double best_value = 0.0;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    if (!std::isfinite(scores[r])) continue;
    const double v = scores[r] + biases[r];
    if (best < 0 || v > best_value) {
      best = static_cast<RelationId>(r);
      best_value = v;
    }
  }
  if (best < 0) throw PredictionError("predict_single: no relation has a finite score (empty index)");
  return best;
}

LabelSet predict_multi(std::span<const double> scores, std::span<const double> biases, RelationId na) {
  if (scores.size() != biases.size()) throw ArgumentError("predict_multi: scores and biases differ in length");
  const auto na_idx = static_cast<std::size_t>(na);
  if (!std::isfinite(scores[na_idx])) throw PredictionError("predict_multi: NA group is empty");
  const double threshold = scores[na_idx] + biases[na_idx];
  LabelSet out;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    if (r == na_idx || !std::isfinite(scores[r])) continue;
    if (scores[r] + biases[r] > threshold) out.push_back(static_cast<RelationId>(r));
  }
  return out;
}

RelationId nearest_centroid_predict(const EmbeddingIndex& index, std::span<const double> query) {
  if (query.size() != index.dim) throw ArgumentError("nearest_centroid_predict: query dimension mismatch");
  const std::vector<double> q = unit(query);
  RelationId best = -1;
  double best_sim = 0.0;
  std::vector<double> centroid(index.dim);
  for (std::size_t r = 0; r < index.n_relations(); ++r) {
    const Matrix& g = index.groups[r];
    if (g.rows() == 0) continue;
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < g.rows(); ++i) kernels::axpy(1.0, g.row(i), centroid.data(), index.dim);
    const std::vector<double> c = unit(centroid);
    const double sim = kernels::dot(q.data(), c.data(), index.dim);
    if (best < 0 || sim > best_sim) {
      best = static_cast<RelationId>(r);
      best_sim = sim;
    }
  }
  if (best < 0) throw PredictionError("nearest_centroid_predict: empty index");
  return best;
}

}  // namespace relcl
