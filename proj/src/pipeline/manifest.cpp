#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <memory>

#include "json.hpp"
#include "relcl/error.hpp"
#include "relcl/pipeline.hpp"

namespace relcl {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

RunManifest::RunManifest(std::string command, std::string config_snapshot, std::vector<std::uint64_t> seeds)
    : command_(std::move(command)),
      config_(std::move(config_snapshot)),
      seeds_(std::move(seeds)),
      start_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  if (finished_) throw ArgumentError("manifest already finished");
  inputs_.emplace_back(path.string(), sha256_file(path));
}

void RunManifest::add_artifact(const std::filesystem::path& path) {
  if (finished_) throw ArgumentError("manifest already finished");
  artifacts_.push_back(path.string());
}

void RunManifest::finish(const std::filesystem::path& run_dir) {
  if (finished_) throw ArgumentError("manifest already finished");
  finished_ = true;
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["config"] = config_;
  j["seeds"] = seeds_;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  for (const auto& [path, digest] : inputs_) inputs.push_back({{"path", path}, {"sha256", digest}});
  j["inputs"] = std::move(inputs);
  j["artifacts"] = artifacts_;
  j["steps"] = steps_;
  j["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  std::filesystem::create_directories(run_dir);
  std::ofstream out(run_dir / ("manifest-" + command_ + ".json"));
  if (!out) throw ValidationError("cannot write manifest in " + run_dir.string());
  out << j.dump(2) << "\n";
}

}  // namespace relcl
