#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "relcl/cli.hpp"

using namespace relcl;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "relcl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kTiny = {"--quiet",       "--set", "docs=30",       "--set", "dev_docs=8",
                                        "--set",         "test_docs=8", "--set", "model_dim=8", "--set",
                                        "ffn_dim=16",    "--set", "heads=2",       "--set", "layers=1"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  const fs::path dir = fs::temp_directory_path() / "relcl_test_cli_codes";
  CHECK(cli({"--run-dir", dir.string(), "--set", "bogus=1", "gen"}).code == 1);
  CHECK(cli({"--run-dir", dir.string(), "--set", "docs=abc", "gen"}).code == 1);
  const Run missing = cli({"--run-dir", dir.string(), "mine", "--docs", (dir / "absent.jsonl").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("absent.jsonl") != std::string::npos);
  CHECK(cli({"--run-dir", dir.string(), "probe"}).code == 1);
}

TEST_CASE("gen, pretrain, finetune, infer and eval chain through files") {
  const fs::path dir = fs::temp_directory_path() / "relcl_test_cli_chain";
  fs::remove_all(dir);
  const std::string d = dir.string();
  const auto base = with(kTiny, {"--run-dir", d});
  REQUIRE(cli(with(base, {"gen"})).code == 0);
  for (const char* f : {"inventory.json", "train.docs.jsonl", "test.labels.jsonl", "manifest-gen.json"}) {
    CHECK(fs::exists(dir / f));
  }
  REQUIRE(cli(with(base, {"mine", "--docs", d + "/train.docs.jsonl", "--top-k", "30"})).code == 0);
  REQUIRE(cli(with(base, {"--set", "pretrain_steps=2", "pretrain", "--inventory", d + "/inventory.json", "--docs",
                          d + "/train.docs.jsonl", "--pairs", d + "/pairs.jsonl"}))
              .code == 0);
  REQUIRE(cli(with(base, {"finetune", "--inventory", d + "/inventory.json", "--docs", d + "/train.docs.jsonl",
                          "--labels", d + "/train.labels.jsonl", "--init", d + "/pretrain.ckpt", "--p", "0.5"}))
              .code == 0);
  REQUIRE(cli(with(base, {"infer", "--checkpoint", d + "/finetune.ckpt", "--inventory", d + "/inventory.json", "--docs",
                          d + "/test.docs.jsonl", "--labels", d + "/test.labels.jsonl", "--train-docs",
                          d + "/train.docs.jsonl", "--train-labels", d + "/train.labels.jsonl", "--k", "3"}))
              .code == 0);
  std::istringstream preds(slurp(dir / "predictions.jsonl"));
  std::string first;
  std::getline(preds, first);
  const auto j = nlohmann::json::parse(first);
  CHECK(j.contains("subject_id"));
  CHECK(j.at("predicted").is_array());

  const Run ev = cli(with(base, {"eval", "--predictions", d + "/predictions.jsonl", "--inventory",
                                 d + "/inventory.json", "--objective", "mccl", "--init", "mtb", "--p", "0.5"}));
  REQUIRE(ev.code == 0);
  const auto metrics = nlohmann::json::parse(ev.out);
  CHECK(metrics.at("f1").get<double>() >= 0.0);
  CHECK(slurp(dir / "metrics.csv").rfind("objective,init,p,precision,recall,f1,f1_ign\nmccl,mtb,0.5,", 0) == 0);
  CHECK(cli(with(base, {"infer", "--checkpoint", d + "/finetune.ckpt", "--inventory", d + "/inventory.json", "--docs",
                        d + "/test.docs.jsonl", "--labels", d + "/test.labels.jsonl", "--index", d + "/index.bin",
                        "--mode", "multi"}))
            .code == 1);
  for (const char* f : {"manifest-mine.json", "manifest-pretrain.json", "manifest-finetune.json", "manifest-infer.json",
                        "manifest-eval.json"}) {
    CHECK(fs::exists(dir / f));
  }
}

TEST_CASE("matrix command is reproducible") {
  const fs::path a = fs::temp_directory_path() / "relcl_test_cli_matrix_a";
  const fs::path b = fs::temp_directory_path() / "relcl_test_cli_matrix_b";
  const std::vector<std::string> args = {"matrix", "--objectives", "ce,mccl", "--inits", "random", "--ps", "0.5",
                                         "--seeds", "1,2"};
  const Run ra = cli(with(with(kTiny, {"--run-dir", a.string()}), args));
  const Run rb = cli(with(with(kTiny, {"--run-dir", b.string()}), args));
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(slurp(a / "matrix_runs.csv") == slurp(b / "matrix_runs.csv"));
  CHECK(slurp(a / "matrix_means.csv") == slurp(b / "matrix_means.csv"));
  CHECK(ra.out == slurp(a / "matrix_means.csv"));
}
