#pragma once

// Model parameters, AdamW, checkpoints, and the pretraining and finetuning
// loops. Every random draw comes from a generator seeded by TrainConfig::seed,
// so (config, corpus, seed) determine all parameters bit for bit.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "relcl/corpus.hpp"
#include "relcl/encoder.hpp"
#include "relcl/losses.hpp"
#include "relcl/matrix.hpp"
#include "relcl/mining.hpp"

namespace relcl {

struct Model {
  EncoderConfig config;
  Vocabulary vocab;
  std::vector<std::string> relations;  // empty until finetuning adds a head
  RelationId na = 0;

  EncoderWeights encoder;
  Matrix w_linear;       // 3d x d
  Matrix w_mlm, b_mlm;   // d x V, 1 x V; empty after finetuning
  Matrix cls_w, cls_b;   // R x d, 1 x R; ce only
  Matrix proxies;        // R x d; mccl only
  Matrix rel_bias;       // 1 x R; mccl only

  // f(name, matrix, decays). Empty matrices are visited too.
  template <class F>
  void visit(F&& f) {
    encoder.visit(f);
    f("head.w_linear", w_linear, true);
    f("head.w_mlm", w_mlm, true);
    f("head.b_mlm", b_mlm, false);
    f("head.cls_w", cls_w, true);
    f("head.cls_b", cls_b, false);
    f("head.proxies", proxies, false);
    f("head.rel_bias", rel_bias, false);
  }
  template <class F>
  void visit(F&& f) const {
    const_cast<Model*>(this)->visit([&](const std::string& name, Matrix& m, bool decays) {
      f(name, static_cast<const Matrix&>(m), decays);
    });
  }

  bool has_proxies() const { return !proxies.empty(); }
  bool has_classifier() const { return !cls_w.empty(); }
};

// Fresh encoder, pair projection and MLM head.
Model init_model(const EncoderConfig& config, Vocabulary vocab, std::uint64_t seed);
// Same shapes, all zeros.
Model zeros_like(const Model& model);

// ---- optimizer ----------------------------------------------------------------

struct AdamState {
  std::uint64_t step = 0;
  std::map<std::string, Matrix> m, v;
};

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One AdamW step. Returns false and leaves everything untouched when any
// gradient entry is non-finite.
bool optimizer_step(Model& params, const Model& grads, AdamState& state, const OptimizerConfig& config);

// ---- configuration --------------------------------------------------------------

enum class Objective { ce, supcon, mccl, mccl_multilabel };

Objective parse_objective(const std::string& name);
std::string objective_name(Objective objective);

struct TrainConfig {
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  std::size_t epochs = 1;           // finetuning
  std::size_t pretrain_steps = 100;
  std::size_t warmup_steps = 0;
  Objective objective = Objective::mccl;
  double tau = kPretrainTemperature;
  std::optional<double> tau1, tau2;  // unset: defaults for the inventory mode
  CandidateWeighting weighting = CandidateWeighting::softmax;
  double mask_prob = kEntityMaskProbability;
  double mlm_rate = 0.15;
  double na_subsample = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
  double tau1_for(LabelMode mode) const;
  double tau2_for(LabelMode mode) const;
  // Canonical key=value text; identical configs give identical strings.
  std::string fingerprint() const;
};

// Plain-text "key = value" lines; '#' starts a comment. Unknown keys are left
// for the caller.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::filesystem::path& path);

// Consume the keys each config understands and throw ConfigError on bad values.
void apply_key_values(TrainConfig& config, KeyValues& kv);
void apply_key_values(EncoderConfig& config, KeyValues& kv);

// ---- checkpoints ------------------------------------------------------------------

struct Checkpoint {
  Model model;
  AdamState optimizer;
  std::uint64_t step = 0;
  std::string fingerprint;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---- pair embeddings ------------------------------------------------------------------

// Markers of every mention of `entity`, in mention order.
std::vector<std::size_t> entity_markers(const Document& doc, const MarkedDocument& marked, std::size_t entity);

// Eval-mode embeddings, one row per pair, documents encoded once each.
Matrix embed_pairs(const Model& model, const Corpus& corpus, const std::vector<PairInstance>& pairs);

// ---- training loops -----------------------------------------------------------------------

// Optimizes L_rel + L_self + L_mlm over batches of sampled positive pairs.
// `metrics` receives one CSV row per step when non-null.
Checkpoint pretrain(const std::vector<Document>& documents, const PretrainPairSet& pairs, Model init,
                    const TrainConfig& config, std::ostream* metrics = nullptr);

// Finetunes on labeled pairs. Heads required by the objective are created on
// entry and the MLM head is dropped. Zero epochs returns `init` unchanged.
Checkpoint finetune(const Corpus& labeled, const Checkpoint& init, const TrainConfig& config,
                    std::ostream* metrics = nullptr);

}  // namespace relcl
