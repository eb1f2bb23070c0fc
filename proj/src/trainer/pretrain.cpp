#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_map>

#include "relcl/error.hpp"
#include "relcl/trainer.hpp"

namespace relcl {

namespace {

struct Row {
  std::size_t slot = 0;  // batch document slot
  std::size_t subject = 0;
  std::size_t object = 0;
};

struct DocumentSlot {
  Document doc;  // after entity masking
  MarkedDocument marked;
  std::vector<std::size_t> mlm_positions;
  std::vector<int> mlm_targets;
  EncodedDocument pass[2];
};

// Picks 15%-style positions among non-special tokens and corrupts ids in place:
// 80% [MASK], 10% random corpus token, 10% unchanged.
void mlm_mask(DocumentSlot& slot, const Vocabulary& vocab, double rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int first = static_cast<int>(vocab.special_count());
  const int last = static_cast<int>(vocab.size()) - 1;
  for (std::size_t i = 0; i < slot.marked.ids.size(); ++i) {
    int& id = slot.marked.ids[i];
    if (vocab.is_special(id) || unit(rng) >= rate) continue;
    slot.mlm_positions.push_back(i);
    slot.mlm_targets.push_back(id);
    const double r = unit(rng);
    if (r < 0.8) {
      id = Vocabulary::kMask;
    } else if (r < 0.9 && last >= first) {
      id = std::uniform_int_distribution<int>(first, last)(rng);
    }
  }
}

void write_row(std::ostream& out, std::size_t step, const PretrainLoss& loss, bool applied) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.10g,%.10g,%d\n", step, loss.rel, loss.self, loss.mlm,
                loss.total(), applied ? 1 : 0);
  out << buf;
}

}  // namespace

Checkpoint pretrain(const std::vector<Document>& documents, const PretrainPairSet& pairs, Model init,
                    const TrainConfig& config, std::ostream* metrics) {
  config.validate();
  if (pairs.selected.empty()) throw ArgumentError("pretrain: empty pretraining pair set");
  const auto occurrences = pair_occurrences(documents, pairs);
  std::vector<double> weights;
  bool any = false;
  for (const auto& occ : occurrences) {
    const double n = static_cast<double>(occ.size());
    weights.push_back(n * (n - 1.0) / 2.0);
    any = any || occ.size() >= 2;
  }
  if (!any) throw ArgumentError("pretrain: no selected pair occurs in two documents");
  std::discrete_distribution<std::size_t> pick_pair(weights.begin(), weights.end());

  Checkpoint out;
  out.model = std::move(init);
  out.fingerprint = config.fingerprint();
  Model& model = out.model;
  const EncoderConfig& ec = model.config;
  const std::size_t d = ec.model_dim;
  const Temperature tau(config.tau);
  std::mt19937_64 rng(config.seed);
  if (metrics) *metrics << "step,rel,self,mlm,total,applied\n";

  for (std::size_t step = 1; step <= config.pretrain_steps; ++step) {
    std::vector<Row> rows;
    std::vector<std::pair<std::size_t, std::size_t>> positives;
    std::vector<DocumentSlot> slots;
    std::unordered_map<std::size_t, std::size_t> slot_of;
    const auto slot_for = [&](std::size_t doc_index) {
      auto [it, inserted] = slot_of.try_emplace(doc_index, slots.size());
      if (inserted) {
        slots.emplace_back();
        slots.back().doc = mask_entities(documents[doc_index], config.mask_prob, rng);
      }
      return it->second;
    };
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const auto& occ = occurrences[pick_pair(rng)];
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, occ.size() - 1)(rng);
      std::size_t j = std::uniform_int_distribution<std::size_t>(0, occ.size() - 2)(rng);
      if (j >= i) ++j;
      const std::size_t base = rows.size();
      for (const PairOccurrence* o : {&occ[i], &occ[j]}) rows.push_back({slot_for(o->document), o->subject, o->object});
      positives.emplace_back(base, base + 1);
      positives.emplace_back(base + 1, base);
    }

    for (DocumentSlot& slot : slots) {
      slot.marked = insert_markers(slot.doc, model.vocab, ec.max_len);
      mlm_mask(slot, model.vocab, config.mlm_rate, rng);
      const std::uint64_t seed_a = rng(), seed_b = rng();
      slot.pass[0] = encode(model.encoder, ec, slot.marked.ids, Mode::train, seed_a);
      slot.pass[1] = encode(model.encoder, ec, slot.marked.ids, Mode::train, seed_b);
    }

    const std::size_t n = rows.size();
    std::vector<PairForward> fwd[2];
    Matrix z[2] = {Matrix(n, d), Matrix(n, d)};
    for (int p = 0; p < 2; ++p) {
      for (std::size_t r = 0; r < n; ++r) {
        const DocumentSlot& slot = slots[rows[r].slot];
        fwd[p].push_back(pair_forward(model.w_linear, slot.pass[p],
                                      entity_markers(slot.doc, slot.marked, rows[r].subject),
                                      entity_markers(slot.doc, slot.marked, rows[r].object)));
        std::copy(fwd[p][r].z.begin(), fwd[p][r].z.end(), z[p].row(r));
      }
    }

    std::vector<std::vector<std::size_t>> negatives(n);
    for (std::size_t a = 0; a < n; ++a) {
      const Document& da = slots[rows[a].slot].doc;
      for (std::size_t b = 0; b < n; ++b) {
        const Document& db = slots[rows[b].slot].doc;
        if (is_valid_negative(da.entities[rows[a].subject].type, da.entities[rows[a].object].type,
                              db.entities[rows[b].subject].type, db.entities[rows[b].object].type)) {
          negatives[a].push_back(b);
        }
      }
    }

    std::vector<std::size_t> anchors(n);
    for (std::size_t r = 0; r < n; ++r) anchors[r] = r;
    const LossResult rel = loss_rel(z[0], positives, negatives, tau);
    const DualLossResult self = loss_self(z[0], z[1], anchors, tau);

    std::size_t n_masked = 0;
    for (const DocumentSlot& slot : slots) n_masked += slot.mlm_positions.size();
    Matrix mlm_logits(n_masked, model.vocab.size());
    std::vector<int> mlm_targets;
    std::size_t offset = 0;
    for (const DocumentSlot& slot : slots) {
      if (slot.mlm_positions.empty()) continue;
      const Matrix logits = mlm_forward(slot.pass[0], slot.mlm_positions, model.w_mlm, model.b_mlm);
      std::copy(logits.values().begin(), logits.values().end(), mlm_logits.row(offset));
      mlm_targets.insert(mlm_targets.end(), slot.mlm_targets.begin(), slot.mlm_targets.end());
      offset += slot.mlm_positions.size();
    }
    const LossResult mlm = loss_mlm(mlm_logits, mlm_targets);
    const PretrainLoss loss{rel.value, self.value, mlm.value};

    Model grads = zeros_like(model);
    const Matrix* dz[2] = {&rel.grad, &self.grad_z_hat};
    offset = 0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      for (int p = 0; p < 2; ++p) {
        const EncodedDocument& enc = slots[s].pass[p];
        const std::size_t l = enc.length();
        Matrix d_hidden(l, d), d_attention(ec.heads * l, l);
        for (std::size_t r = 0; r < n; ++r) {
          if (rows[r].slot != s) continue;
          std::vector<double> g(dz[p]->row(r), dz[p]->row(r) + d);
          if (p == 0) {
            for (std::size_t c = 0; c < d; ++c) g[c] += self.grad_z(r, c);
          }
          pair_backward(model.w_linear, enc, fwd[p][r], g, d_hidden, d_attention, grads.w_linear);
        }
        if (p == 0 && !slots[s].mlm_positions.empty()) {
          const std::size_t m = slots[s].mlm_positions.size();
          Matrix d_logits(m, model.vocab.size());
          std::copy(mlm.grad.row(offset), mlm.grad.row(offset) + d_logits.size(), d_logits.data());
          offset += m;
          mlm_backward(enc, slots[s].mlm_positions, model.w_mlm, d_logits, d_hidden, grads.w_mlm, grads.b_mlm);
        }
        encode_backward(model.encoder, ec, enc, d_hidden, d_attention, grads.encoder);
      }
    }

    OptimizerConfig oc;
    oc.learning_rate = config.learning_rate;
    if (config.warmup_steps > 0 && step < config.warmup_steps) {
      oc.learning_rate *= static_cast<double>(step) / static_cast<double>(config.warmup_steps);
    }
    oc.weight_decay = config.weight_decay;
    const bool applied = std::isfinite(loss.total()) && optimizer_step(model, grads, out.optimizer, oc);
    ++out.step;
    if (metrics) write_row(*metrics, step, loss, applied);
  }
  return out;
}

}  // namespace relcl
