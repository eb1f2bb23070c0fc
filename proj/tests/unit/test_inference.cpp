#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "loss_trials.hpp"
#include "oracles.hpp"
#include "relcl/error.hpp"
#include "relcl/inference.hpp"
#include "relcl/kernels.hpp"

using namespace relcl;
using namespace relcl::testing;

namespace {

struct RandomIndex {
  RelationInventory inventory;
  Matrix z;
  std::vector<LabelSet> labels;
  std::vector<double> biases;
};

RandomIndex random_index(std::size_t n, std::size_t r, std::size_t d, LabelMode mode, std::mt19937_64& rng) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < r; ++i) names.push_back(i == 0 ? "NA" : "R" + std::to_string(i));
  RandomIndex out{RelationInventory(names, "NA", mode), gaussian(n, d, rng), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    LabelSet l;
    if (mode == LabelMode::single) {
      l = {static_cast<RelationId>(uniform_int(rng, 0, r - 1))};
    } else {
      for (RelationId k = 1; k < static_cast<RelationId>(r); ++k) {
        if (uniform_real(rng, 0, 1) < 0.3) l.push_back(k);
      }
    }
    out.labels.push_back(l);
  }
  for (std::size_t i = 0; i < r; ++i) out.biases.push_back(uniform_real(rng, -0.05, 0.05));
  return out;
}

struct ScalarBackend {
  kernels::Backend saved = kernels::active_backend();
  ScalarBackend() { kernels::set_backend(kernels::Backend::scalar); }
  ~ScalarBackend() { kernels::set_backend(saved); }
};

}  // namespace

TEST_CASE("index construction") {
  std::mt19937_64 rng(1);
  const RandomIndex ri = random_index(200, 5, 6, LabelMode::multi, rng);
  const EmbeddingIndex idx = build_index(ri.z, ri.labels, ri.inventory, ri.biases);
  std::vector<std::size_t> histogram(5, 0);
  for (const LabelSet& l : ri.labels) {
    if (l.empty()) ++histogram[0];
    for (RelationId r : l) ++histogram[static_cast<std::size_t>(r)];
  }
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(idx.groups[r].rows() == histogram[r]);
    for (std::size_t i = 0; i < idx.groups[r].rows(); ++i) {
      const double n = std::sqrt(kernels::dot(idx.groups[r].row(i), idx.groups[r].row(i), 6));
      CHECK(std::abs(n - 1.0) <= 1e-6);
    }
  }
  const EmbeddingIndex empty = build_index(Matrix(0, 6), std::vector<LabelSet>{}, ri.inventory);
  CHECK(empty.n_relations() == 5);
  for (const Matrix& g : empty.groups) CHECK(g.rows() == 0);
  CHECK(empty.biases == std::vector<double>(5, 0.0));
  CHECK_THROWS_AS(build_index(ri.z, std::vector<LabelSet>{}, ri.inventory), ArgumentError);
}

TEST_CASE("knn score examples") {
  const RelationInventory inv({"NA", "R1"}, "NA", LabelMode::single);
  Matrix z(3, 2);
  z(0, 0) = 1;
  z(1, 1) = 1;
  z(2, 0) = 1;
  z(2, 1) = 1;
  const EmbeddingIndex idx = build_index(z, std::vector<LabelSet>{{1}, {1}, {0}}, inv);
  const std::vector<double> q = {1, 0};
  CHECK(knn_scores(idx, q, 1)[1] == 1.0);
  CHECK(knn_scores(idx, q, 5)[1] == doctest::Approx(0.5));
  CHECK(knn_scores(idx, q, 20)[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(knn_scores(idx, q, 0), ArgumentError);
  CHECK_THROWS_AS(knn_scores(idx, std::vector<double>{1, 0, 0}, 1), ArgumentError);
  const EmbeddingIndex na_only = build_index(z, std::vector<LabelSet>{{0}, {0}, {0}}, inv);
  const auto s = knn_scores(na_only, q, 3);
  CHECK(std::isinf(s[1]));
  CHECK(predict_single(s, na_only.biases) == 0);
}

TEST_CASE("knn matches the exhaustive-sort oracle exactly") {
  ScalarBackend scalar;
  std::mt19937_64 rng(2);
  for (LabelMode mode : {LabelMode::single, LabelMode::multi}) {
    const RandomIndex ri = random_index(200, 5, 8, mode, rng);
    const EmbeddingIndex idx = build_index(ri.z, ri.labels, ri.inventory, ri.biases);
    for (int t = 0; t < 50; ++t) {
      const Matrix q = gaussian(1, 8, rng);
      for (std::size_t k : {1u, 3u, 5u, 10u, 20u}) {
        const auto got = knn_scores(idx, q.values(), k);
        const auto want = brute_knn_scores(ri.z, ri.labels, 5, 0, q.values(), k);
        CHECK(got == want);
        CHECK(predict_single(got, ri.biases) == brute_argmax(want, ri.biases));
        CHECK(predict_multi(got, ri.biases, 0) == brute_above_na(want, ri.biases, 0));
      }
    }
  }
}

TEST_CASE("knn invariants") {
  std::mt19937_64 rng(3);
  RandomIndex ri = random_index(60, 4, 5, LabelMode::single, rng);
  const EmbeddingIndex idx = build_index(ri.z, ri.labels, ri.inventory);
  const Matrix q = gaussian(1, 5, rng);
  std::vector<double> q3 = q.values();
  for (double& x : q3) x *= 3.0;
  const auto base = knn_scores(idx, q.values(), 5);
  const auto scaled = knn_scores(idx, q3, 5);
  for (std::size_t r = 0; r < 4; ++r) CHECK(scaled[r] == doctest::Approx(base[r]).epsilon(1e-12));

  Matrix z_scaled = ri.z;
  for (std::size_t c = 0; c < 5; ++c) z_scaled(7, c) *= 4.0;
  const auto stored = knn_scores(build_index(z_scaled, ri.labels, ri.inventory), q.values(), 5);
  for (std::size_t r = 0; r < 4; ++r) CHECK(stored[r] == doctest::Approx(base[r]).epsilon(1e-12));

  // adding the query itself to relation 2 never lowers its score
  Matrix grown(61, 5);
  std::copy(ri.z.data(), ri.z.data() + ri.z.size(), grown.data());
  std::copy(q.data(), q.data() + 5, grown.row(60));
  auto labels = ri.labels;
  labels.push_back({2});
  for (std::size_t k : {1u, 3u, 5u, 10u, 20u}) {
    CHECK(knn_scores(build_index(grown, labels, ri.inventory), q.values(), k)[2] >= knn_scores(idx, q.values(), k)[2]);
  }

  // k at least the group size gives the mean similarity to the whole class
  const auto all = knn_scores(idx, q.values(), 1000);
  for (std::size_t r = 0; r < 4; ++r) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < 60; ++i) {
      if (ri.labels[i][0] == static_cast<RelationId>(r)) {
        sum += cosine_sim(q.values(), ri.z.row_span(i));
        ++n;
      }
    }
    CHECK(all[r] == doctest::Approx(sum / n).epsilon(1e-12));
  }
}

TEST_CASE("prediction rules") {
  const std::vector<double> zero(2, 0.0);
  CHECK(predict_single(std::vector<double>{0.2, 0.9}, zero) == 1);
  CHECK(predict_single(std::vector<double>{0.5, 0.5}, zero) == 0);
  CHECK(predict_single(std::vector<double>{0.5, 0.4}, std::vector<double>{0.0, 0.2}) == 1);
  CHECK_THROWS_AS(predict_single(std::vector<double>(2, kEmptyGroupScore), zero), PredictionError);
  const std::vector<double> z4(4, 0.0);
  CHECK(predict_multi(std::vector<double>{0.9, 0.1, 0.2, 0.3}, z4, 0).empty());
  CHECK(predict_multi(std::vector<double>{0.5, 0.6, 0.2, 0.7}, z4, 0) == LabelSet{1, 3});
  CHECK(predict_multi(std::vector<double>{0.5, kEmptyGroupScore, 0.2, 0.7}, z4, 0) == LabelSet{3});
  CHECK_THROWS_AS(predict_multi(std::vector<double>{kEmptyGroupScore, 0.6, 0.2, 0.7}, z4, 0), PredictionError);
}

TEST_CASE("nearest centroid") {
  std::mt19937_64 rng(4);
  const RelationInventory inv({"NA", "R1", "R2"}, "NA", LabelMode::single);
  const Matrix one = gaussian(3, 4, rng);
  const EmbeddingIndex single = build_index(one, std::vector<LabelSet>{{0}, {1}, {2}}, inv);
  for (int t = 0; t < 50; ++t) {
    const Matrix q = gaussian(1, 4, rng);
    const auto s = knn_scores(single, q.values(), 1);
    CHECK(nearest_centroid_predict(single, q.values()) == predict_single(s, std::vector<double>(3, 0.0)));
  }
  const RandomIndex ri = random_index(90, 3, 4, LabelMode::single, rng);
  const EmbeddingIndex idx = build_index(ri.z, ri.labels, inv);
  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<double> c(4, 0.0);
    for (std::size_t i = 0; i < idx.groups[r].rows(); ++i) kernels::axpy(1.0, idx.groups[r].row(i), c.data(), 4);
    CHECK(nearest_centroid_predict(idx, c) == static_cast<RelationId>(r));
  }
  const EmbeddingIndex empty = build_index(Matrix(0, 4), std::vector<LabelSet>{}, inv);
  CHECK_THROWS_AS(nearest_centroid_predict(empty, std::vector<double>(4, 1.0)), PredictionError);
}

TEST_CASE("softmax probe") {
  Matrix z(40, 2);
  std::vector<RelationId> labels(40);
  std::mt19937_64 rng(5);
  for (std::size_t i = 0; i < 40; ++i) {
    labels[i] = static_cast<RelationId>(i % 2);
    z(i, 0) = (i % 2 ? 1.0 : -1.0) + uniform_real(rng, -0.3, 0.3);
    z(i, 1) = uniform_real(rng, -1.0, 1.0);
  }
  std::vector<double> trace;
  const SoftmaxProbe probe = softmax_probe_fit(z, labels, 2, ProbeFitOptions{}, &trace);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 40; ++i) correct += probe.predict(z.row_span(i)) == labels[i] ? 1 : 0;
  CHECK(correct == 40);
  REQUIRE(trace.size() == ProbeFitOptions{}.epochs);
  for (std::size_t e = 1; e < trace.size(); ++e) CHECK(trace[e] <= trace[e - 1] + 1e-12);
  const SoftmaxProbe again = softmax_probe_fit(z, labels, 2);
  CHECK(again.w == probe.w);
}

TEST_CASE("index file round trip") {
  std::mt19937_64 rng(6);
  const RandomIndex ri = random_index(50, 4, 5, LabelMode::multi, rng);
  const EmbeddingIndex idx = build_index(ri.z, ri.labels, ri.inventory, ri.biases);
  const auto path = std::filesystem::temp_directory_path() / "relcl_test.index";
  save_index(idx, path);
  const EmbeddingIndex back = load_index(path);
  CHECK(back.dim == idx.dim);
  CHECK(back.na == idx.na);
  CHECK(back.mode == idx.mode);
  CHECK(back.biases == idx.biases);
  CHECK(back.instance_ids == idx.instance_ids);
  CHECK(back.groups == idx.groups);
  std::ofstream(path, std::ios::binary) << "not an index";
  CHECK_THROWS(load_index(path));
}
