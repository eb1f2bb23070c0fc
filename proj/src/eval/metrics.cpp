#include <algorithm>

#include "relcl/error.hpp"
#include "relcl/eval.hpp"

namespace relcl {

namespace {

bool contains(const LabelSet& s, RelationId r) { return std::find(s.begin(), s.end(), r) != s.end(); }

}  // namespace

F1Score f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  F1Score s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  const auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

F1Score micro_f1(std::span<const PredictionRecord> records, RelationId na) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const PredictionRecord& rec : records) {
    for (RelationId r : rec.predicted) {
      if (r == na) continue;
      (contains(rec.gold, r) ? tp : fp) += 1;
    }
    for (RelationId r : rec.gold) {
      if (r != na && !contains(rec.predicted, r)) ++fn;
    }
  }
  return f1_from_counts(tp, fp, fn);
}

F1Score micro_f1_ign(std::span<const PredictionRecord> records, const std::set<Fact>& train_facts, RelationId na) {
  std::size_t tp = 0, fp = 0, fn = 0;
  const auto known = [&](const PredictionRecord& rec, RelationId r) {
    return train_facts.count(Fact{rec.subject_id, r, rec.object_id}) != 0;
  };
  for (const PredictionRecord& rec : records) {
    for (RelationId r : rec.predicted) {
      if (r == na) continue;
      if (!contains(rec.gold, r)) {
        ++fp;
      } else if (!known(rec, r)) {
        ++tp;
      }
    }
    for (RelationId r : rec.gold) {
      if (r != na && !contains(rec.predicted, r) && !known(rec, r)) ++fn;
    }
  }
  return f1_from_counts(tp, fp, fn);
}

std::set<Fact> facts_of(const Corpus& corpus, std::span<const PairInstance> pairs) {
  std::set<Fact> facts;
  for (const PairInstance& p : pairs) {
    const Document& doc = corpus.document(p.document_id);
    for (RelationId r : p.labels) {
      if (r == corpus.inventory.na()) continue;
      facts.insert(Fact{doc.entities.at(p.subject).global_id, r, doc.entities.at(p.object).global_id});
    }
  }
  return facts;
}

std::size_t select_k(std::span<const std::pair<std::size_t, double>> dev_f1_by_k) {
  if (dev_f1_by_k.empty()) throw ArgumentError("select_k: no candidates");
  std::pair<std::size_t, double> best = dev_f1_by_k[0];
  for (const auto& c : dev_f1_by_k) {
    if (c.second > best.second || (c.second == best.second && c.first < best.first)) best = c;
  }
  return best.first;
}

}  // namespace relcl
