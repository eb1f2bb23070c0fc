#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "relcl/error.hpp"
#include "relcl/trainer.hpp"

namespace relcl {

Objective parse_objective(const std::string& name) {
  if (name == "ce") return Objective::ce;
  if (name == "supcon") return Objective::supcon;
  if (name == "mccl") return Objective::mccl;
  if (name == "mccl_multilabel") return Objective::mccl_multilabel;
  throw ConfigError("unknown objective '" + name + "' (expected ce|supcon|mccl|mccl_multilabel)");
}

std::string objective_name(Objective objective) {
  switch (objective) {
    case Objective::ce: return "ce";
    case Objective::supcon: return "supcon";
    case Objective::mccl: return "mccl";
    case Objective::mccl_multilabel: return "mccl_multilabel";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (tau1 && !(*tau1 > 0.0)) throw ConfigError("tau1 must be > 0");
  if (tau2 && !(*tau2 > 0.0)) throw ConfigError("tau2 must be > 0");
  if (!(mask_prob >= 0.0 && mask_prob <= 1.0)) throw ConfigError("mask_prob must lie in [0, 1]");
  if (!(mlm_rate >= 0.0 && mlm_rate <= 1.0)) throw ConfigError("mlm_rate must lie in [0, 1]");
  if (!(na_subsample > 0.0 && na_subsample <= 1.0)) throw ConfigError("na_subsample must lie in (0, 1]");
}

double TrainConfig::tau1_for(LabelMode mode) const {
  if (tau1) return *tau1;
  return mode == LabelMode::single ? kSingleLabelTau1 : kMultiLabelTau1;
}

double TrainConfig::tau2_for(LabelMode mode) const {
  if (tau2) return *tau2;
  return mode == LabelMode::single ? kSingleLabelTau2 : kMultiLabelTau2;
}

std::string TrainConfig::fingerprint() const {
  std::ostringstream out;
  out.precision(17);
  out << "batch_size=" << batch_size << "\nlearning_rate=" << learning_rate << "\nweight_decay=" << weight_decay
      << "\nepochs=" << epochs << "\npretrain_steps=" << pretrain_steps << "\nwarmup_steps=" << warmup_steps
      << "\nobjective=" << objective_name(objective) << "\ntau=" << tau
      << "\ntau1=" << (tau1 ? std::to_string(*tau1) : "default")
      << "\ntau2=" << (tau2 ? std::to_string(*tau2) : "default")
      << "\nweighting=" << (weighting == CandidateWeighting::softmax ? "softmax" : "uniform")
      << "\nmask_prob=" << mask_prob << "\nmlm_rate=" << mlm_rate << "\nna_subsample=" << na_subsample
      << "\nseed=" << seed << "\n";
  return out.str();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad value for " + key + ": '" + value + "'");
  return out;
}

// Removes `key` from kv and parses it when present.
template <class T>
void take(KeyValues& kv, const std::string& key, T& target) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  target = parse_number<T>(key, it->second);
  kv.erase(it);
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", number);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", number);
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

void apply_key_values(TrainConfig& config, KeyValues& kv) {
  take(kv, "batch_size", config.batch_size);
  take(kv, "learning_rate", config.learning_rate);
  take(kv, "weight_decay", config.weight_decay);
  take(kv, "epochs", config.epochs);
  take(kv, "pretrain_steps", config.pretrain_steps);
  take(kv, "warmup_steps", config.warmup_steps);
  take(kv, "tau", config.tau);
  take(kv, "mask_prob", config.mask_prob);
  take(kv, "mlm_rate", config.mlm_rate);
  take(kv, "na_subsample", config.na_subsample);
  take(kv, "seed", config.seed);
  for (const char* key : {"tau1", "tau2"}) {
    const auto it = kv.find(key);
    if (it == kv.end()) continue;
    (std::string(key) == "tau1" ? config.tau1 : config.tau2) = parse_number<double>(key, it->second);
    kv.erase(it);
  }
  if (const auto it = kv.find("objective"); it != kv.end()) {
    config.objective = parse_objective(it->second);
    kv.erase(it);
  }
  if (const auto it = kv.find("weighting"); it != kv.end()) {
    if (it->second == "softmax") {
      config.weighting = CandidateWeighting::softmax;
    } else if (it->second == "uniform") {
      config.weighting = CandidateWeighting::uniform;
    } else {
      throw ConfigError("weighting must be softmax or uniform");
    }
    kv.erase(it);
  }
  config.validate();
}

void apply_key_values(EncoderConfig& config, KeyValues& kv) {
  take(kv, "layers", config.layers);
  take(kv, "heads", config.heads);
  take(kv, "model_dim", config.model_dim);
  take(kv, "ffn_dim", config.ffn_dim);
  take(kv, "max_len", config.max_len);
  take(kv, "dropout", config.dropout_rate);
  take(kv, "encoder_seed", config.seed);
}

}  // namespace relcl
