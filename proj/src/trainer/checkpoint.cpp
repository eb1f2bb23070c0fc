#include <cstring>
#include <fstream>
#include <unordered_map>

#include "json.hpp"
#include "relcl/error.hpp"
#include "relcl/trainer.hpp"

// Layout: 8-byte magic, u32 version, u64 header size, JSON header, then the
// tensors listed in the header as raw little-endian doubles, in order.

namespace relcl {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'L', 'C', 'L', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

using json = nlohmann::ordered_json;

json encoder_to_json(const EncoderConfig& c) {
  return json{{"layers", c.layers},   {"heads", c.heads},     {"model_dim", c.model_dim},
              {"ffn_dim", c.ffn_dim}, {"vocab_size", c.vocab_size}, {"max_len", c.max_len},
              {"dropout_rate", c.dropout_rate}, {"seed", c.seed}};
}

EncoderConfig encoder_from_json(const json& j) {
  EncoderConfig c;
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.model_dim = j.at("model_dim").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

template <class T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("checkpoint: truncated file");
  return value;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const Model& model = checkpoint.model;
  std::vector<std::pair<std::string, const Matrix*>> tensors;
  model.visit([&](const std::string& name, const Matrix& m, bool) {
    if (!m.empty()) tensors.emplace_back(name, &m);
  });
  for (const auto& [name, m] : checkpoint.optimizer.m) tensors.emplace_back("adam.m." + name, &m);
  for (const auto& [name, v] : checkpoint.optimizer.v) tensors.emplace_back("adam.v." + name, &v);

  json header;
  header["encoder"] = encoder_to_json(model.config);
  header["vocab"] = {{"tokens", model.vocab.tokens()}, {"special_count", model.vocab.special_count()}};
  header["relations"] = model.relations;
  header["na"] = model.na;
  header["step"] = checkpoint.step;
  header["adam_step"] = checkpoint.optimizer.step;
  header["fingerprint"] = checkpoint.fingerprint;
  json list = json::array();
  for (const auto& [name, m] : tensors) list.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
  header["tensors"] = std::move(list);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : tensors) {
    out.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(double)));
  }
  if (!out) throw ValidationError("short write on checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError(path.string() + " is not a checkpoint");
  }
  if (read_pod<std::uint32_t>(in) != kVersion) throw ValidationError("checkpoint: unsupported version");
  const auto size = read_pod<std::uint64_t>(in);
  std::string text(size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(size));
  if (!in) throw ValidationError("checkpoint: truncated header");
  const json header = json::parse(text);

  Checkpoint ck;
  Model& model = ck.model;
  model.config = encoder_from_json(header.at("encoder"));
  model.vocab = Vocabulary(header.at("vocab").at("tokens").get<std::vector<std::string>>(),
                           header.at("vocab").at("special_count").get<std::size_t>());
  model.relations = header.at("relations").get<std::vector<std::string>>();
  model.na = header.at("na").get<RelationId>();
  ck.step = header.at("step").get<std::uint64_t>();
  ck.optimizer.step = header.at("adam_step").get<std::uint64_t>();
  ck.fingerprint = header.at("fingerprint").get<std::string>();
  model.encoder = EncoderWeights::zeros(model.config);

  std::unordered_map<std::string, Matrix*> slots;
  model.visit([&](const std::string& name, Matrix& m, bool) { slots[name] = &m; });
  for (const json& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const auto rows = t.at("rows").get<std::size_t>();
    const auto cols = t.at("cols").get<std::size_t>();
    Matrix* target = nullptr;
    if (name.rfind("adam.m.", 0) == 0) {
      target = &ck.optimizer.m[name.substr(7)];
    } else if (name.rfind("adam.v.", 0) == 0) {
      target = &ck.optimizer.v[name.substr(7)];
    } else {
      const auto it = slots.find(name);
      if (it == slots.end()) throw ValidationError("checkpoint: unknown tensor " + name);
      target = it->second;
    }
    target->resize(rows, cols);
    in.read(reinterpret_cast<char*>(target->data()), static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!in) throw ValidationError("checkpoint: truncated tensor " + name);
  }
  return ck;
}

}  // namespace relcl
