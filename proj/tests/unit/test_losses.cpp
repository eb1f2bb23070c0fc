#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "loss_trials.hpp"
#include "relcl/error.hpp"
#include "relcl/losses.hpp"

using namespace relcl;
using namespace relcl::testing;

namespace {

Matrix rows(std::initializer_list<std::vector<double>> r) {
  Matrix m(r.size(), r.begin()->size());
  std::size_t i = 0;
  for (const auto& row : r) std::copy(row.begin(), row.end(), m.row(i++));
  return m;
}

Matrix scaled_row(Matrix z, std::size_t row, double factor) {
  for (std::size_t c = 0; c < z.cols(); ++c) z(row, c) *= factor;
  return z;
}

}  // namespace

TEST_CASE("cosine similarity examples") {
  const std::vector<double> v = {0.3, -2.0, 1.0};
  CHECK(cosine_sim(v, v) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_sim(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine_sim(std::vector<double>{1, 1}, std::vector<double>{1, 0}) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(std::isfinite(cosine_sim(std::vector<double>{0, 0}, std::vector<double>{1, 0})));
}

TEST_CASE("pretraining loss examples") {
  const Matrix z = rows({{1, 0}, {1, 0}, {0, 1}});
  const std::vector<std::pair<std::size_t, std::size_t>> pos = {{0, 1}};
  CHECK(loss_rel(z, pos, {{}, {}, {}}, Temperature(0.05)).value == 0.0);
  CHECK(loss_rel(z, pos, {{2}, {}, {}}, Temperature(0.05)).value ==
        doctest::Approx(std::log1p(std::exp(-20.0))).epsilon(1e-12));
  CHECK_THROWS_AS(loss_rel(z, {}, {{}, {}, {}}, Temperature(0.05)), UndefinedLossError);

  const Matrix same = rows({{1, 2}, {1, 2}});
  const std::vector<std::size_t> both = {0, 1};
  CHECK(loss_self(same, same, both, Temperature(0.05)).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const Matrix one = rows({{1, 2}});
  CHECK(loss_self(one, one, std::vector<std::size_t>{0}, Temperature(0.05)).value == 0.0);

  const Matrix uniform(3, 7, 0.25);
  CHECK(loss_mlm(uniform, std::vector<int>{0, 3, 6}).value == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  Matrix sharp(1, 4, -50.0);
  sharp(0, 2) = 50.0;
  CHECK(loss_mlm(sharp, std::vector<int>{2}).value < 1e-12);
  CHECK(loss_mlm(Matrix(0, 4), std::vector<int>{}).value == 0.0);

  PretrainLoss parts;
  CHECK(parts.total() == 0.0);
  parts = {0.5, 1.25, 2.0};
  CHECK(parts.total() == 3.75);
}

TEST_CASE("classification loss examples") {
  const Matrix z = rows({{0.4, -1.0}, {2.0, 0.5}});
  const Matrix w(3, 2, 0.0), b(1, 3, 0.0);
  const std::vector<LabelSet> labels = {{0}, {2}};
  CHECK(loss_ce(z, labels, w, b).value == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  Matrix w_big = w;
  w_big(0, 0) = 1e3;
  CHECK(loss_ce(rows({{1, 0}}), std::vector<LabelSet>{{0}}, w_big, b).value < 1e-12);
  CHECK_THROWS_AS(loss_ce(z, std::vector<LabelSet>{{0, 1}, {2}}, w, b), ArgumentError);

  CHECK(loss_supcon(rows({{1, 0}, {1, 0}}), std::vector<RelationId>{1, 1}, Temperature(0.1)).value ==
        doctest::Approx(0.0).epsilon(1e-12));
  const double tau = 0.2;
  const double expected = -std::log(std::exp(1.0 / tau) / (std::exp(1.0 / tau) + 2.0));
  CHECK(loss_supcon(rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}}), std::vector<RelationId>{0, 0, 1, 1}, Temperature(tau)).value ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(loss_supcon(rows({{1, 0}, {0, 1}}), std::vector<RelationId>{0, 1}, Temperature(tau)),
                  UndefinedLossError);
}

TEST_CASE("mccl weights and scores") {
  const auto w = mccl_weights(std::vector<double>{0.3, 0.3}, Temperature(0.2));
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(0.5));
  const auto w2 = mccl_weights(std::vector<double>{1.0, 0.0}, Temperature(0.2));
  CHECK(w2[0] == doctest::Approx(0.99331).epsilon(1e-5));
  CHECK(w2[1] == doctest::Approx(0.00669).epsilon(1e-3));
  const auto flat = mccl_weights(std::vector<double>{1.0, -0.5, 0.2}, Temperature(1e6));
  for (double x : flat) CHECK(std::abs(x - 1.0 / 3.0) < 1e-6);

  // relation 1 has no instances: its only candidate is its proxy
  const Matrix z = rows({{1, 0}, {1, 0}, {0.6, 0.8}});
  const std::vector<LabelSet> labels = {{0}, {0}, {2}};
  const Matrix proxies = rows({{0, 1}, {0.6, 0.8}, {1, 1}});
  const McclScores s = mccl_scores(z, labels, proxies, 3, 0, Temperature(0.2));
  CHECK(s.s(0, 1) == doctest::Approx(0.6));
  CHECK(s.s(2, 1) == doctest::Approx(1.0));
  const McclScores no_proxy = mccl_scores(z, labels, Matrix(), 3, 0, Temperature(0.2));
  CHECK(no_proxy.s(0, 0) == doctest::Approx(1.0));  // the other copy of itself
  CHECK(no_proxy.defined[0][1] == 0);
  CHECK(no_proxy.defined[2][2] == 0);  // sole member, anchor excluded
}

TEST_CASE("mccl scores match a two-step oracle on a random batch of 6") {
  std::mt19937_64 rng(6);
  const Matrix z = gaussian(6, 4, rng), proxies = gaussian(3, 4, rng);
  const std::vector<LabelSet> labels = {{0}, {1}, {0}, {2}, {1}, {0}};
  const double tau1 = 0.3;
  const McclScores s = mccl_scores(z, labels, proxies, 3, 0, Temperature(tau1));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t r = 0; r < 3; ++r) {
      std::vector<double> sims;
      for (std::size_t j = 0; j < 6; ++j) {
        if (j != i && labels[j][0] == static_cast<RelationId>(r)) sims.push_back(cosine_sim(z.row_span(i), z.row_span(j)));
      }
      sims.push_back(cosine_sim(z.row_span(i), proxies.row_span(r)));
      double m = *std::max_element(sims.begin(), sims.end()), denom = 0.0, num = 0.0;
      for (double x : sims) denom += std::exp((x - m) / tau1);
      for (double x : sims) num += std::exp((x - m) / tau1) / denom * x;
      CHECK(s.s(i, r) == doctest::Approx(num).epsilon(1e-12));
    }
  }
}

TEST_CASE("mccl and adaptive-thresholding loss examples") {
  McclScores s;
  s.s = rows({{0.25, 0.25, 0.25}});
  s.defined = {{1, 1, 1}};
  CHECK(loss_mccl(s, Matrix(1, 3), Temperature(0.2), std::vector<LabelSet>{{1}}).value ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));
  s.s = rows({{1.0, 0.0}});
  s.defined = {{1, 1}};
  CHECK(loss_mccl(s, Matrix(1, 2), Temperature(0.2), std::vector<LabelSet>{{0}}).value ==
        doctest::Approx(std::log1p(std::exp(-5.0))).epsilon(1e-12));
  CHECK_THROWS_AS(loss_mccl(s, Matrix(1, 2), Temperature(0.2), std::vector<LabelSet>{{0, 1}}), ArgumentError);

  const std::vector<double> logits = {0.0, 2.0, -1.0};
  CHECK(loss_atl(logits, std::vector<RelationId>{}, std::vector<RelationId>{}, 0).value == 0.0);
  CHECK(loss_atl(logits, std::vector<RelationId>{1}, std::vector<RelationId>{}, 0).value ==
        doctest::Approx(std::log1p(std::exp(-2.0))).epsilon(1e-12));
  // P empty: only the NA-versus-negatives term
  CHECK(loss_atl(logits, std::vector<RelationId>{}, std::vector<RelationId>{1, 2}, 0).value ==
        doctest::Approx(std::log(1.0 + std::exp(2.0) + std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("multi-label objective composes adaptive thresholding") {
  std::mt19937_64 rng(9);
  const Matrix z = gaussian(4, 3, rng), proxies = gaussian(4, 3, rng), b = gaussian(1, 4, rng, 0.1);
  const std::vector<LabelSet> labels = {{1}, {}, {1, 3}, {2}};
  const double tau1 = 0.5, tau2 = 0.4;
  const ObjectiveResult all = loss_mccl_multilabel(z, labels, proxies, b, 0, tau1, tau2);
  const McclScores s = mccl_scores(z, labels, proxies, 4, 0, Temperature(tau1));
  double expected = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> l(4);
    for (std::size_t r = 0; r < 4; ++r) l[r] = (s.s(i, r) + b(0, r)) / tau2;
    std::vector<RelationId> neg;
    for (RelationId r = 1; r < 4; ++r) {
      if (std::find(labels[i].begin(), labels[i].end(), r) == labels[i].end()) neg.push_back(r);
    }
    expected += loss_atl(l, labels[i], neg, 0).value;
  }
  CHECK(all.value == doctest::Approx(expected / 4.0).epsilon(1e-12));
}

TEST_CASE("losses are invariant to rescaling one embedding") {
  std::mt19937_64 rng(21);
  const Matrix z = gaussian(6, 4, rng);
  const Matrix z3 = scaled_row(z, 2, 3.0);
  const std::vector<std::pair<std::size_t, std::size_t>> pos = {{0, 1}, {2, 3}, {4, 5}};
  const std::vector<std::vector<std::size_t>> neg = {{2, 4}, {3}, {0, 5}, {1}, {0, 2}, {}};
  CHECK(std::abs(loss_rel(z, pos, neg, Temperature(0.05)).value - loss_rel(z3, pos, neg, Temperature(0.05)).value) <= 1e-9);
  const std::vector<std::size_t> anchors = {0, 1, 2, 3, 4, 5};
  const Matrix zh = gaussian(6, 4, rng);
  CHECK(std::abs(loss_self(z, zh, anchors, Temperature(0.05)).value -
                 loss_self(z3, scaled_row(zh, 4, 3.0), anchors, Temperature(0.05)).value) <= 1e-9);
  const std::vector<RelationId> ids = {0, 0, 1, 1, 2, 2};
  CHECK(std::abs(loss_supcon(z, ids, Temperature(0.1)).value - loss_supcon(z3, ids, Temperature(0.1)).value) <= 1e-9);
  const std::vector<LabelSet> labels = {{0}, {0}, {1}, {1}, {2}, {2}};
  const Matrix proxies = gaussian(3, 4, rng), b(1, 3);
  McclOptions opt;
  CHECK(std::abs(mccl_objective(z, labels, proxies, b, 0, opt).value -
                 mccl_objective(z3, labels, proxies, b, 0, opt).value) <= 1e-9);
  const std::vector<LabelSet> multi = {{1}, {}, {1, 2}, {2}, {}, {1}};
  CHECK(std::abs(loss_mccl_multilabel(z, multi, proxies, b, 0, 0.01, 0.03).value -
                 loss_mccl_multilabel(z3, multi, proxies, b, 0, 0.01, 0.03).value) <= 1e-9);
}

TEST_CASE("mccl is invariant to batch order") {
  std::mt19937_64 rng(4);
  const Matrix z = gaussian(5, 3, rng), proxies = gaussian(3, 3, rng), b = gaussian(1, 3, rng, 0.1);
  const std::vector<LabelSet> labels = {{0}, {2}, {0}, {1}, {2}};
  const std::vector<std::size_t> perm = {3, 0, 4, 2, 1};
  Matrix zp(5, 3);
  std::vector<LabelSet> lp(5);
  for (std::size_t i = 0; i < 5; ++i) {
    std::copy(z.row(perm[i]), z.row(perm[i]) + 3, zp.row(i));
    lp[i] = labels[perm[i]];
  }
  McclOptions opt;
  CHECK(mccl_objective(z, labels, proxies, b, 0, opt).value ==
        doctest::Approx(mccl_objective(zp, lp, proxies, b, 0, opt).value).epsilon(1e-13));
}

TEST_CASE("large tau1 collapses mccl to the mean-similarity variant") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 10; ++t) {
    const Matrix z = gaussian(6, 4, rng), proxies = gaussian(3, 4, rng), b = gaussian(1, 3, rng, 0.1);
    const auto labels = single_labels(6, 3, rng);
    McclOptions soft, mean;
    soft.tau1 = mean.tau1 = 1e6;
    mean.weighting = CandidateWeighting::uniform;
    CHECK(std::abs(mccl_objective(z, labels, proxies, b, 0, soft).value -
                   mccl_objective(z, labels, proxies, b, 0, mean).value) <= 1e-6);
  }
}

TEST_CASE("proxies keep mccl finite when relations are missing from the batch") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const Matrix z = gaussian(3, 4, rng), proxies = gaussian(5, 4, rng), b(1, 5);
    const std::vector<LabelSet> labels = {{1}, {1}, {3}};
    const ObjectiveResult r = mccl_objective(z, labels, proxies, b, 0, McclOptions{});
    CHECK(std::isfinite(r.value));
    for (double g : r.grad_z.values()) CHECK(std::isfinite(g));
  }
}

TEST_CASE("gradients match finite differences for every loss") {
  std::mt19937_64 rng(77);
  for (const LossTrial& trial : all_loss_trials()) {
    CAPTURE(trial.name);
    for (int t = 0; t < 20; ++t) CHECK(trial.run(rng) <= 1e-4);
  }
}
