#include <cmath>
#include <cstdio>
#include <random>

#include "relcl/error.hpp"
#include "relcl/eval.hpp"

namespace relcl {

std::string ProbeReport::to_csv() const {
  std::string out = "probe,f1\n";
  char buf[96];
  for (const ProbeRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f\n", row.name.c_str(), row.f1);
    out += buf;
  }
  return out;
}

namespace {

double single_label_f1(std::span<const RelationId> predicted, std::span<const RelationId> gold, RelationId na) {
  std::vector<PredictionRecord> records(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    records[i].predicted = {predicted[i]};
    records[i].gold = {gold[i]};
  }
  return micro_f1(records, na).f1;
}

}  // namespace

ProbeReport probe(const Matrix& train_z, std::span<const RelationId> train_labels, const Matrix& test_z,
                  std::span<const RelationId> test_labels, const RelationInventory& inventory, std::size_t k,
                  const ProbeFitOptions& options) {
  if (inventory.mode() != LabelMode::single) throw ArgumentError("probe: single-label data required");
  if (test_labels.size() != test_z.rows()) throw ArgumentError("probe: one test label per row required");
  std::vector<LabelSet> sets;
  for (RelationId y : train_labels) sets.push_back({y});
  const EmbeddingIndex index = build_index(train_z, sets, inventory);
  const SoftmaxProbe softmax = softmax_probe_fit(train_z, train_labels, inventory.size(), options);

  std::vector<RelationId> by_softmax, by_centroid, by_knn;
  for (std::size_t i = 0; i < test_z.rows(); ++i) {
    const auto q = test_z.row_span(i);
    by_softmax.push_back(softmax.predict(q));
    by_centroid.push_back(nearest_centroid_predict(index, q));
    by_knn.push_back(predict_single(knn_scores(index, q, k), index.biases));
  }
  const RelationId na = inventory.na();
  return ProbeReport{{{"softmax", single_label_f1(by_softmax, test_labels, na)},
                      {"nearest_centroid", single_label_f1(by_centroid, test_labels, na)},
                      {"classwise_knn", single_label_f1(by_knn, test_labels, na)}}};
}

ClusterGeometry make_cluster_geometry(const ClusterGeometryConfig& config) {
  if (config.n_relations < 2 || config.dim < 2 || config.clusters_per_relation < 1) {
    throw ArgumentError("make_cluster_geometry: need >= 2 relations, dim >= 2, >= 1 cluster");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = config.dim;
  const auto random_direction = [&](double norm) {
    std::vector<double> v(d);
    double sq = 0.0;
    for (double& x : v) {
      x = normal(rng);
      sq += x * x;
    }
    for (double& x : v) x *= norm / std::sqrt(sq);
    return v;
  };
  const std::vector<double> center = random_direction(config.center_norm);

  // Cluster means of one relation: the offsets sum to zero around the shared center.
  std::vector<std::vector<std::vector<double>>> means(config.n_relations);
  for (auto& rel : means) {
    const std::size_t c = config.clusters_per_relation;
    std::vector<std::vector<double>> offsets;
    for (std::size_t j = 0; j < c; ++j) {
      if (c % 2 == 0 && j % 2 == 1) {
        offsets.push_back(offsets.back());
        for (double& x : offsets.back()) x = -x;
      } else {
        offsets.push_back(j + 1 == c && c > 1 ? std::vector<double>(d, 0.0) : random_direction(config.offset_norm));
      }
    }
    for (const auto& off : offsets) {
      std::vector<double> m(d);
      for (std::size_t i = 0; i < d; ++i) m[i] = center[i] + off[i];
      rel.push_back(std::move(m));
    }
  }

  std::vector<std::string> names = {"NA"};
  for (std::size_t r = 1; r < config.n_relations; ++r) names.push_back("R" + std::to_string(r));
  ClusterGeometry g;
  g.inventory = RelationInventory(names, "NA", LabelMode::single);
  const auto sample = [&](std::size_t per_cluster, Matrix& z, std::vector<RelationId>& labels) {
    z = Matrix(config.n_relations * config.clusters_per_relation * per_cluster, d);
    std::size_t row = 0;
    for (std::size_t r = 0; r < config.n_relations; ++r) {
      for (const auto& m : means[r]) {
        for (std::size_t k = 0; k < per_cluster; ++k, ++row) {
          for (std::size_t i = 0; i < d; ++i) z(row, i) = m[i] + config.noise * normal(rng);
          labels.push_back(static_cast<RelationId>(r));
        }
      }
    }
  };
  sample(config.train_per_cluster, g.train_z, g.train_labels);
  sample(config.test_per_cluster, g.test_z, g.test_labels);
  return g;
}

}  // namespace relcl
