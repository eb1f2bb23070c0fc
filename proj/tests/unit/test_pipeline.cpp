#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "relcl/error.hpp"
#include "relcl/pipeline.hpp"

using namespace relcl;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentData tiny_data() {
  SyntheticWorldConfig w;
  w.docs = 40;
  return synthetic_experiment_data(w, 10, 10);
}

EncoderConfig tiny_encoder() {
  EncoderConfig e;
  e.layers = 1;
  e.heads = 2;
  e.model_dim = 8;
  e.ffn_dim = 16;
  return e;
}

}  // namespace

TEST_CASE("experiment data splits come from one world") {
  const ExperimentData d = tiny_data();
  CHECK(d.train.documents.size() == 40);
  CHECK(d.dev.documents.size() == 10);
  CHECK(d.test.documents.size() == 10);
  CHECK(d.train.inventory == d.test.inventory);
  CHECK(d.train.documents.front().id.rfind("train", 0) == 0);
  CHECK(d.test.documents.front().id.rfind("test", 0) == 0);
  const Vocabulary v = experiment_vocabulary(d);
  for (const std::string& t : d.entity_types) CHECK(v.id(blank_token(t)) != Vocabulary::kUnk);
  CHECK(parse_init("plm-random") == EncoderInit::random);
  CHECK(parse_init(init_name(EncoderInit::mtb)) == EncoderInit::mtb);
  CHECK_THROWS_AS(parse_init("bert"), ConfigError);
}

TEST_CASE("principal axes of planar points preserve pairwise distances") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const std::size_t d = 6, n = 25;
  std::vector<double> u(d), v(d), o(d);
  for (std::size_t i = 0; i < d; ++i) {
    u[i] = g(rng);
    v[i] = g(rng);
    o[i] = g(rng);
  }
  // Gram-Schmidt: u, v orthonormal
  double nu = 0.0;
  for (double x : u) nu += x * x;
  for (double& x : u) x /= std::sqrt(nu);
  double uv = 0.0;
  for (std::size_t i = 0; i < d; ++i) uv += u[i] * v[i];
  double nv = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    v[i] -= uv * u[i];
    nv += v[i] * v[i];
  }
  for (double& x : v) x /= std::sqrt(nv);
  Matrix z(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const double a = 3.0 * g(rng), b = g(rng);
    for (std::size_t i = 0; i < d; ++i) z(r, i) = o[i] + a * u[i] + b * v[i];
  }
  const Matrix p = principal_axes_2d(z);
  REQUIRE(p.rows() == n);
  REQUIRE(p.cols() == 2);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      double dz = 0.0, dp = 0.0;
      for (std::size_t i = 0; i < d; ++i) dz += (z(a, i) - z(b, i)) * (z(a, i) - z(b, i));
      for (std::size_t i = 0; i < 2; ++i) dp += (p(a, i) - p(b, i)) * (p(a, i) - p(b, i));
      CHECK(std::sqrt(dp) == doctest::Approx(std::sqrt(dz)).epsilon(1e-9));
    }
  }
  CHECK(principal_axes_2d(z) == p);
}

TEST_CASE("embedding export") {
  const ExperimentData d = tiny_data();
  const Model m = init_model(tiny_encoder(), experiment_vocabulary(d), 1);
  std::ostringstream empty;
  export_embeddings(m, d.test, {}, true, empty);
  CHECK(empty.str() == "index,document_id,subject,object,label,pc1,pc2,v0,v1,v2,v3,v4,v5,v6,v7\n");
  std::ostringstream out;
  export_embeddings(m, d.test, d.test.pairs, false, out);
  const auto rows = parse_csv(out.str());
  CHECK(rows.size() == d.test.pairs.size() + 1);
  CHECK(rows[1].size() == 7);
}

TEST_CASE("matrix tables and seed means") {
  const ExperimentData d = tiny_data();
  TrainConfig ft;
  ft.epochs = 1;
  ft.batch_size = 8;
  const std::vector<Cell> one = {{Objective::ce, EncoderInit::random, 0.5}};
  const MatrixResult single = run_matrix(d, nullptr, tiny_encoder(), ft, one, {1});
  CHECK(single.runs.size() == 1);
  CHECK(parse_csv(means_csv(single.runs)).size() == 2);

  const std::vector<Cell> cells = {{Objective::ce, EncoderInit::random, 0.5}, {Objective::mccl, EncoderInit::random, 1.0}};
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const MatrixResult a = run_matrix(d, nullptr, tiny_encoder(), ft, cells, seeds);
  const MatrixResult b = run_matrix(d, nullptr, tiny_encoder(), ft, cells, seeds);
  CHECK(runs_csv(a.runs) == runs_csv(b.runs));
  CHECK(means_csv(a.runs) == means_csv(b.runs));
  CHECK(a.failures.empty());

  const auto runs = parse_csv(runs_csv(a.runs));
  const auto means = parse_csv(means_csv(a.runs));
  CHECK(runs[0] == std::vector<std::string>{"objective", "init", "p", "seed", "train_pairs", "k", "precision", "recall",
                                            "f1", "f1_ign"});
  REQUIRE(means.size() == 3);
  for (std::size_t m = 1; m < means.size(); ++m) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
      if (runs[r][0] == means[m][0] && runs[r][1] == means[m][1] && runs[r][2] == means[m][2]) {
        sum += std::stod(runs[r][8]);
        ++n;
      }
    }
    CHECK(n == 3);
    CHECK(means[m][3] == "3");
    CHECK(std::abs(std::stod(means[m][4]) - sum / 3.0) <= 1e-6);
  }
  CHECK_THROWS(run_cell(d, nullptr, tiny_encoder(), ft, {Objective::ce, EncoderInit::mtb, 0.5}, 1));
}

TEST_CASE("run manifest") {
  const fs::path dir = fs::temp_directory_path() / "relcl_test_manifest";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "in.txt") << "abc";
  CHECK(sha256_file(dir / "in.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  RunManifest m("gen", "seed=3\n", {3});
  m.add_input(dir / "in.txt");
  std::ofstream(dir / "in.txt") << "changed";  // digest was taken already
  m.add_artifact(dir / "out.csv");
  m.set_steps(12);
  m.finish(dir);
  CHECK_THROWS(m.finish(dir));
  CHECK_THROWS(m.add_artifact(dir / "late"));

  std::ifstream in(dir / "manifest-gen.json");
  REQUIRE(in);
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("command") == "gen");
  CHECK(j.at("config") == "seed=3\n");
  CHECK(j.at("seeds") == nlohmann::json::array({3}));
  CHECK(j.at("steps") == 12);
  CHECK(j.at("inputs")[0].at("sha256") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(j.at("artifacts")[0] == (dir / "out.csv").string());
  CHECK(j.at("wall_clock_seconds").get<double>() >= 0.0);
}
