#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_map>

#include "relcl/error.hpp"
#include "relcl/trainer.hpp"

namespace relcl {

namespace {

bool is_na(const PairInstance& pair, const RelationInventory& inventory) {
  return pair.labels.empty() || (pair.labels.size() == 1 && pair.labels[0] == inventory.na());
}

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : m.values()) x = dist(rng);
  return m;
}

struct BatchEntry {
  std::size_t doc = 0;
  const PairInstance* pair = nullptr;
};

struct ObjectiveOutput {
  double value = 0.0;
  Matrix grad_z;
};

// Evaluates the configured objective and writes head gradients into `grads`.
ObjectiveOutput run_objective(const Model& model, const Matrix& z, const std::vector<LabelSet>& labels,
                              const RelationInventory& inventory, const TrainConfig& config, Model& grads) {
  const LabelMode mode = inventory.mode();
  switch (config.objective) {
    case Objective::ce: {
      ClassifierLossResult r = mode == LabelMode::single
                                   ? loss_ce(z, labels, model.cls_w, model.cls_b)
                                   : loss_classifier_atl(z, labels, model.cls_w, model.cls_b, inventory.na());
      grads.cls_w = std::move(r.grad_w);
      grads.cls_b = std::move(r.grad_b);
      return {r.value, std::move(r.grad_z)};
    }
    case Objective::supcon: {
      std::vector<RelationId> ids;
      for (const LabelSet& l : labels) ids.push_back(l.at(0));
      LossResult r = loss_supcon(z, ids, Temperature(config.tau1_for(mode)));
      return {r.value, std::move(r.grad)};
    }
    case Objective::mccl:
    case Objective::mccl_multilabel: {
      McclOptions options;
      options.tau1 = config.tau1_for(mode);
      options.tau2 = config.tau2_for(mode);
      options.mode = mode;
      options.weighting = config.weighting;
      ObjectiveResult r = mccl_objective(z, labels, model.proxies, model.rel_bias, inventory.na(), options);
      grads.proxies = std::move(r.grad_proxies);
      grads.rel_bias = std::move(r.grad_b);
      return {r.value, std::move(r.grad_z)};
    }
  }
  throw ConfigError("unknown objective");
}

}  // namespace

Checkpoint finetune(const Corpus& labeled, const Checkpoint& init, const TrainConfig& config, std::ostream* metrics) {
  config.validate();
  const RelationInventory& inventory = labeled.inventory;
  if (config.objective == Objective::supcon && inventory.mode() == LabelMode::multi) {
    throw ConfigError("supcon does not apply to multi-label inventories");
  }
  if (config.objective == Objective::mccl_multilabel && inventory.mode() == LabelMode::single) {
    throw ConfigError("mccl_multilabel requires a multi-label inventory");
  }
  if (config.epochs == 0) return init;

  Checkpoint out;
  out.model = init.model;
  out.fingerprint = config.fingerprint();
  Model& model = out.model;
  const EncoderConfig& ec = model.config;
  const std::size_t d = ec.model_dim, n_rel = inventory.size();
  std::mt19937_64 rng(config.seed);

  model.w_mlm = Matrix();
  model.b_mlm = Matrix();
  model.cls_w = model.cls_b = model.proxies = model.rel_bias = Matrix();
  model.relations = inventory.names();
  model.na = inventory.na();
  if (config.objective == Objective::ce) {
    model.cls_w = gaussian(n_rel, d, 0.02, rng);
    model.cls_b = Matrix(1, n_rel);
  } else if (config.objective != Objective::supcon) {
    model.proxies = gaussian(n_rel, d, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    model.rel_bias = Matrix(1, n_rel);
  }

  std::unordered_map<std::string, std::size_t> doc_index;
  for (std::size_t i = 0; i < labeled.documents.size(); ++i) doc_index.emplace(labeled.documents[i].id, i);
  std::vector<std::vector<const PairInstance*>> pairs_of(labeled.documents.size());
  for (const PairInstance& p : labeled.pairs) {
    const auto it = doc_index.find(p.document_id);
    if (it == doc_index.end()) throw ValidationError("finetune: pair references unknown document " + p.document_id);
    pairs_of[it->second].push_back(&p);
  }
  std::vector<std::size_t> doc_order;
  for (std::size_t i = 0; i < pairs_of.size(); ++i) {
    if (!pairs_of[i].empty()) doc_order.push_back(i);
  }
  if (metrics) *metrics << "step,loss,applied\n";

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto run_step = [&](std::vector<BatchEntry>& batch) {
    // documents in first-appearance order, encoded once each
    std::vector<std::size_t> docs;
    std::unordered_map<std::size_t, std::size_t> slot_of;
    for (const BatchEntry& e : batch) {
      if (slot_of.try_emplace(e.doc, docs.size()).second) docs.push_back(e.doc);
    }
    std::vector<MarkedDocument> marked;
    std::vector<EncodedDocument> encoded;
    for (std::size_t doc : docs) {
      marked.push_back(insert_markers(labeled.documents[doc], model.vocab, ec.max_len));
      encoded.push_back(encode(model.encoder, ec, marked.back().ids, Mode::train, rng()));
    }
    const std::size_t n = batch.size();
    Matrix z(n, d);
    std::vector<LabelSet> labels;
    std::vector<PairForward> fwd;
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t s = slot_of[batch[r].doc];
      const Document& doc = labeled.documents[batch[r].doc];
      fwd.push_back(pair_forward(model.w_linear, encoded[s], entity_markers(doc, marked[s], batch[r].pair->subject),
                                 entity_markers(doc, marked[s], batch[r].pair->object)));
      std::copy(fwd.back().z.begin(), fwd.back().z.end(), z.row(r));
      labels.push_back(batch[r].pair->labels);
    }

    Model grads = zeros_like(model);
    double value = 0.0;
    bool applied = false;
    try {
      ObjectiveOutput obj = run_objective(model, z, labels, inventory, config, grads);
      value = obj.value;
      for (std::size_t s = 0; s < docs.size(); ++s) {
        const std::size_t l = encoded[s].length();
        Matrix d_hidden(l, d), d_attention(ec.heads * l, l);
        for (std::size_t r = 0; r < n; ++r) {
          if (slot_of[batch[r].doc] != s) continue;
          pair_backward(model.w_linear, encoded[s], fwd[r], obj.grad_z.row_span(r), d_hidden, d_attention,
                        grads.w_linear);
        }
        encode_backward(model.encoder, ec, encoded[s], d_hidden, d_attention, grads.encoder);
      }
      OptimizerConfig oc;
      oc.learning_rate = config.learning_rate;
      const std::size_t step = out.step + 1;
      if (config.warmup_steps > 0 && step < config.warmup_steps) {
        oc.learning_rate *= static_cast<double>(step) / static_cast<double>(config.warmup_steps);
      }
      oc.weight_decay = config.weight_decay;
      applied = std::isfinite(value) && optimizer_step(model, grads, out.optimizer, oc);
    } catch (const UndefinedLossError&) {
      applied = false;
    }
    ++out.step;
    if (metrics) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%llu,%.10g,%d\n", static_cast<unsigned long long>(out.step), value,
                    applied ? 1 : 0);
      *metrics << buf;
    }
    batch.clear();
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(doc_order.begin(), doc_order.end(), rng);
    std::vector<BatchEntry> batch;
    for (std::size_t doc : doc_order) {
      for (const PairInstance* p : pairs_of[doc]) {
        if (config.na_subsample < 1.0 && is_na(*p, inventory) && unit(rng) >= config.na_subsample) continue;
        batch.push_back({doc, p});
      }
      if (batch.size() >= config.batch_size) run_step(batch);
    }
    if (!batch.empty()) run_step(batch);
  }
  return out;
}

}  // namespace relcl
