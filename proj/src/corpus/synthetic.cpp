#include "relcl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "relcl/error.hpp"

namespace relcl {

namespace {

std::string token_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%04zu", i);
  return buf;
}

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// One sentence before layout: tokens plus the entity index of each slot.
struct Sentence {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> slots;  // (token position, world entity)
};

}  // namespace

void SyntheticWorldConfig::validate() const {
  if (n_entities < 2 || n_types < 1 || n_relations < 1 || modes_per_relation < 1 || docs < 1 ||
      pairs_per_doc < 1 || vocab_size < 1 || facts_per_mode < 1 || template_words < 1 ||
      filler_words < 1) {
    throw ConfigError("synthetic world: all counts must be >= 1 (n_entities >= 2)");
  }
  if (!(na_fraction >= 0.0 && na_fraction < 1.0)) {
    throw ConfigError("synthetic world: na_fraction must be in [0, 1)");
  }
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0) || !(second_label_rate >= 0.0 && second_label_rate <= 1.0)) {
    throw ConfigError("synthetic world: rates must be in [0, 1]");
  }
  const std::size_t words = n_entities + n_relations * modes_per_relation * template_words +
                            template_words + filler_words + 1;
  if (words + reserved_special_tokens(n_types) > vocab_size) {
    throw ConfigError("synthetic world: vocab overflow, need " +
                      std::to_string(words + reserved_special_tokens(n_types)) + " tokens but vocab_size is " +
                      std::to_string(vocab_size));
  }
}

std::size_t reserved_special_tokens(std::size_t n_types) { return 4 + n_types; }

SyntheticWorld::SyntheticWorld(const SyntheticWorldConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);

  std::vector<std::string> relation_names{"NA"};
  for (std::size_t r = 0; r < config_.n_relations; ++r) relation_names.push_back("R" + std::to_string(r + 1));
  std::vector<std::string> type_names;
  for (std::size_t t = 0; t < config_.n_types; ++t) type_names.push_back("T" + std::to_string(t));
  inventory_ = RelationInventory(relation_names, "NA",
                                 config_.multi_label ? LabelMode::multi : LabelMode::single, type_names);

  // Shuffled token ids so a token's number says nothing about its role.
  const std::size_t words = config_.n_entities +
                            config_.n_relations * config_.modes_per_relation * config_.template_words +
                            config_.template_words + config_.filler_words + 1;
  std::vector<std::size_t> ids(words);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::size_t next = 0;
  const auto take = [&] { return token_name(ids[next++]); };

  for (std::size_t e = 0; e < config_.n_entities; ++e) {
    entity_ids_.push_back("E" + std::to_string(e));
    entity_types_.push_back(type_names[e % config_.n_types]);
    entity_tokens_.push_back(take());
    entity_index_[entity_ids_.back()] = e;
  }
  for (std::size_t r = 0; r < config_.n_relations; ++r) {
    for (std::size_t m = 0; m < config_.modes_per_relation; ++m) {
      Template t;
      for (std::size_t w = 0; w < config_.template_words; ++w) t.words.push_back(take());
      t.subject_first = ((r + m) % 2) == 0;
      templates_.push_back(std::move(t));
    }
  }
  for (std::size_t w = 0; w < config_.template_words; ++w) na_words_.push_back(take());
  for (std::size_t w = 0; w < config_.filler_words; ++w) fillers_.push_back(take());
  separator_ = take();

  // Knowledge base: each (relation, mode) owns a subject/object type signature.
  std::vector<std::vector<std::size_t>> by_type(config_.n_types);
  for (std::size_t e = 0; e < config_.n_entities; ++e) by_type[e % config_.n_types].push_back(e);
  for (std::size_t r = 0; r < config_.n_relations; ++r) {
    std::size_t made_for_relation = 0;
    for (std::size_t m = 0; m < config_.modes_per_relation; ++m) {
      const std::size_t st = (r + m) % config_.n_types;
      const std::size_t ot = (2 * r + m + 1) % config_.n_types;
      std::vector<std::pair<std::size_t, std::size_t>> pool;
      for (std::size_t s : by_type[st]) {
        for (std::size_t o : by_type[ot]) {
          if (s == o) continue;
          const auto key = std::make_pair(entity_ids_[s], entity_ids_[o]);
          const auto rev = std::make_pair(entity_ids_[o], entity_ids_[s]);
          if (fact_index_.count(key) || fact_index_.count(rev)) continue;
          pool.emplace_back(s, o);
        }
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t n = std::min(pool.size(), config_.facts_per_mode);
      for (std::size_t i = 0; i < n; ++i) {
        SyntheticFact f;
        f.subject = entity_ids_[pool[i].first];
        f.object = entity_ids_[pool[i].second];
        f.relations = {static_cast<RelationId>(r + 1)};
        f.mode = m;
        fact_index_[{f.subject, f.object}] = facts_.size();
        facts_.push_back(std::move(f));
        ++made_for_relation;
      }
    }
    if (made_for_relation == 0) {
      throw ConfigError("synthetic world: no entity pairs available for relation R" + std::to_string(r + 1));
    }
  }
  if (config_.multi_label && config_.n_relations > 1) {
    for (auto& f : facts_) {
      if (uniform01(rng) >= config_.second_label_rate) continue;
      RelationId extra = f.relations[0];
      while (extra == f.relations[0]) extra = static_cast<RelationId>(1 + pick(rng, config_.n_relations));
      f.relations.push_back(extra);
      std::sort(f.relations.begin(), f.relations.end());
    }
  }

  // Zipf popularity over a random ranking of facts.
  std::vector<std::size_t> rank(facts_.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<double> weight(facts_.size());
  for (std::size_t i = 0; i < rank.size(); ++i) {
    weight[rank[i]] = 1.0 / std::pow(static_cast<double>(i + 1), config_.popularity_exponent);
  }
  popularity_cdf_.resize(weight.size());
  std::partial_sum(weight.begin(), weight.end(), popularity_cdf_.begin());
}

const std::string& SyntheticWorld::type_of(const std::string& global_id) const {
  return entity_types_.at(entity_index_.at(global_id));
}

std::vector<RelationId> SyntheticWorld::gold(const std::string& subject, const std::string& object) const {
  const auto it = fact_index_.find({subject, object});
  if (it != fact_index_.end()) return facts_[it->second].relations;
  if (inventory_.mode() == LabelMode::multi) return {};
  return {inventory_.na()};
}

int SyntheticWorld::mode_of(const std::string& subject, const std::string& object) const {
  const auto it = fact_index_.find({subject, object});
  return it == fact_index_.end() ? -1 : static_cast<int>(facts_[it->second].mode);
}

const SyntheticWorld::Template& SyntheticWorld::template_for(RelationId relation, std::size_t mode) const {
  return templates_.at(static_cast<std::size_t>(relation - 1) * config_.modes_per_relation + mode);
}

Corpus SyntheticWorld::sample_documents(std::size_t count, std::uint64_t seed,
                                        const std::string& prefix) const {
  std::mt19937_64 rng(seed);
  Corpus corpus;
  corpus.inventory = inventory_;

  const auto filler = [&](std::vector<std::string>& out) {
    if (uniform01(rng) < config_.noise_rate) out.push_back(fillers_[pick(rng, fillers_.size())]);
  };
  const auto render = [&](std::size_t x, std::size_t y, const std::vector<std::string>& words,
                          Sentence& s) {
    filler(s.tokens);
    s.slots.emplace_back(s.tokens.size(), x);
    s.tokens.push_back(entity_tokens_[x]);
    s.tokens.push_back(words[pick(rng, words.size())]);
    filler(s.tokens);
    s.tokens.push_back(words[pick(rng, words.size())]);
    s.slots.emplace_back(s.tokens.size(), y);
    s.tokens.push_back(entity_tokens_[y]);
    s.tokens.push_back(words[pick(rng, words.size())]);
    filler(s.tokens);
  };

  for (std::size_t d = 0; d < count; ++d) {
    std::vector<std::size_t> chosen;
    std::set<std::size_t> chosen_set;
    for (std::size_t attempt = 0; chosen.size() < config_.pairs_per_doc && attempt < 100; ++attempt) {
      const double u = uniform01(rng) * popularity_cdf_.back();
      const auto f = static_cast<std::size_t>(
          std::upper_bound(popularity_cdf_.begin(), popularity_cdf_.end(), u) - popularity_cdf_.begin());
      const std::size_t fi = std::min(f, facts_.size() - 1);
      if (chosen_set.insert(fi).second) chosen.push_back(fi);
    }
    std::set<std::size_t> doc_entities;
    for (std::size_t fi : chosen) {
      doc_entities.insert(entity_index_.at(facts_[fi].subject));
      doc_entities.insert(entity_index_.at(facts_[fi].object));
    }

    std::vector<Sentence> sentences;
    for (std::size_t k = 0; k < config_.distractor_sentences; ++k) {
      const std::vector<std::size_t> present(doc_entities.begin(), doc_entities.end());
      const std::size_t a = present[pick(rng, present.size())];
      const std::size_t b = uniform01(rng) < 0.5 ? present[pick(rng, present.size())]
                                                 : pick(rng, config_.n_entities);
      if (a == b || fact_index_.count({entity_ids_[a], entity_ids_[b]}) ||
          fact_index_.count({entity_ids_[b], entity_ids_[a]})) {
        continue;
      }
      Sentence s;
      render(a, b, na_words_, s);
      sentences.push_back(std::move(s));
      doc_entities.insert(b);
    }
    // Every knowledge-base pair whose entities both occur gets its sentence,
    // so gold labels stay a function of the entity pair alone.
    for (std::size_t a : doc_entities) {
      for (std::size_t b : doc_entities) {
        const auto it = fact_index_.find({entity_ids_[a], entity_ids_[b]});
        if (it != fact_index_.end() && chosen_set.insert(it->second).second) chosen.push_back(it->second);
      }
    }
    for (std::size_t fi : chosen) {
      const SyntheticFact& f = facts_[fi];
      const std::size_t s_ent = entity_index_.at(f.subject);
      const std::size_t o_ent = entity_index_.at(f.object);
      for (RelationId r : f.relations) {
        const Template& t = template_for(r, std::min(f.mode, config_.modes_per_relation - 1));
        Sentence s;
        if (t.subject_first) {
          render(s_ent, o_ent, t.words, s);
        } else {
          render(o_ent, s_ent, t.words, s);
        }
        sentences.push_back(std::move(s));
      }
    }
    std::shuffle(sentences.begin(), sentences.end(), rng);

    Document doc;
    doc.id = prefix + std::to_string(d);
    std::map<std::size_t, std::size_t> local;  // world entity -> local id
    for (const auto& s : sentences) {
      const std::size_t base = doc.tokens.size();
      doc.tokens.insert(doc.tokens.end(), s.tokens.begin(), s.tokens.end());
      doc.tokens.push_back(separator_);
      for (const auto& [pos, ent] : s.slots) {
        auto [it, fresh] = local.emplace(ent, doc.entities.size());
        if (fresh) doc.entities.push_back({entity_ids_[ent], entity_types_[ent]});
        doc.mentions.push_back({it->second, base + pos, base + pos + 1});
      }
    }

    std::vector<PairInstance> relational;
    std::vector<PairInstance> na_candidates;
    for (const auto& [ea, la] : local) {
      for (const auto& [eb, lb] : local) {
        if (ea == eb) continue;
        PairInstance p{doc.id, la, lb, gold(entity_ids_[ea], entity_ids_[eb])};
        if (fact_index_.count({entity_ids_[ea], entity_ids_[eb]})) {
          relational.push_back(std::move(p));
        } else {
          na_candidates.push_back(std::move(p));
        }
      }
    }
    const auto by_local = [](const PairInstance& a, const PairInstance& b) {
      return std::tie(a.subject, a.object) < std::tie(b.subject, b.object);
    };
    std::sort(na_candidates.begin(), na_candidates.end(), by_local);
    std::shuffle(na_candidates.begin(), na_candidates.end(), rng);
    const double ratio = config_.na_fraction / (1.0 - config_.na_fraction);
    const auto n_na = std::min(na_candidates.size(),
                               static_cast<std::size_t>(std::lround(ratio * static_cast<double>(relational.size()))));
    std::vector<PairInstance> doc_pairs = std::move(relational);
    doc_pairs.insert(doc_pairs.end(), na_candidates.begin(), na_candidates.begin() + static_cast<long>(n_na));
    std::sort(doc_pairs.begin(), doc_pairs.end(), by_local);

    corpus.documents.push_back(std::move(doc));
    corpus.pairs.insert(corpus.pairs.end(), doc_pairs.begin(), doc_pairs.end());
  }
  corpus.reindex();
  return corpus;
}

Corpus generate_synthetic_world(const SyntheticWorldConfig& config) {
  const SyntheticWorld world(config);
  return world.sample_documents(config.docs, config.seed ^ 0x9e3779b97f4a7c15ULL, "doc");
}

}  // namespace relcl
