#include <cstring>
#include <fstream>

#include "json.hpp"
#include "relcl/error.hpp"
#include "relcl/inference.hpp"

// Layout: 8-byte magic, u32 version, u64 header size, JSON header, then each
// group's unit rows as raw little-endian doubles in relation order.

namespace relcl {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'L', 'C', 'L', 'I', 'D', 'X'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_index(const EmbeddingIndex& index, const std::filesystem::path& path) {
  nlohmann::ordered_json header;
  header["dim"] = index.dim;
  header["na"] = index.na;
  header["mode"] = index.mode == LabelMode::single ? "single" : "multi";
  header["biases"] = index.biases;
  header["instance_ids"] = index.instance_ids;
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write index " + path.string());
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  const std::uint64_t size = text.size();
  out.write(reinterpret_cast<const char*>(&size), sizeof(size));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Matrix& g : index.groups) {
    out.write(reinterpret_cast<const char*>(g.data()), static_cast<std::streamsize>(g.size() * sizeof(double)));
  }
  if (!out) throw ValidationError("short write on index " + path.string());
}

EmbeddingIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read index " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t size = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&size), sizeof(size));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ValidationError(path.string() + " is not an index");
  if (version != kVersion) throw ValidationError("index: unsupported version");
  std::string text(size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(size));
  if (!in) throw ValidationError("index: truncated header");
  const auto header = nlohmann::json::parse(text);
  EmbeddingIndex index;
  index.dim = header.at("dim").get<std::size_t>();
  index.na = header.at("na").get<RelationId>();
  index.mode = header.at("mode").get<std::string>() == "multi" ? LabelMode::multi : LabelMode::single;
  index.biases = header.at("biases").get<std::vector<double>>();
  index.instance_ids = header.at("instance_ids").get<std::vector<std::vector<std::size_t>>>();
  for (const auto& ids : index.instance_ids) {
    Matrix g(ids.size(), index.dim);
    in.read(reinterpret_cast<char*>(g.data()), static_cast<std::streamsize>(g.size() * sizeof(double)));
    if (!in) throw ValidationError("index: truncated group data");
    index.groups.push_back(std::move(g));
  }
  return index;
}

}  // namespace relcl
