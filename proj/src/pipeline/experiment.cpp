#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "relcl/error.hpp"
#include "relcl/kernels.hpp"
#include "relcl/pipeline.hpp"

namespace relcl {

ExperimentData synthetic_experiment_data(const SyntheticWorldConfig& config, std::size_t dev_docs,
                                         std::size_t test_docs) {
  const SyntheticWorld world(config);
  ExperimentData data;
  data.train = world.sample_documents(config.docs, config.seed ^ 0x9e3779b97f4a7c15ULL, "train");
  data.dev = world.sample_documents(dev_docs, config.seed ^ 0x6a09e667f3bcc909ULL, "dev");
  data.test = world.sample_documents(test_docs, config.seed ^ 0xbb67ae8584caa73bULL, "test");
  data.entity_types = world.inventory().entity_types();
  return data;
}

Vocabulary experiment_vocabulary(const ExperimentData& data) {
  return Vocabulary::build(data.entity_types, data.train.documents);
}

PretrainPairSet mine_pairs(const std::vector<Document>& documents, const MiningConfig& config) {
  return select_pretraining_pairs(compute_pair_stats(documents), config.freq_threshold, config.top_k);
}

Checkpoint pretrain_encoder(const ExperimentData& data, const EncoderConfig& encoder, const TrainConfig& config,
                            const MiningConfig& mining, std::ostream* metrics) {
  const PretrainPairSet pairs = mine_pairs(data.train.documents, mining);
  Model init = init_model(encoder, experiment_vocabulary(data), encoder.seed);
  return pretrain(data.train.documents, pairs, std::move(init), config, metrics);
}

std::vector<PredictionRecord> predict_corpus(const Model& model, const Corpus& corpus, const Matrix& z,
                                             const EmbeddingIndex* index, std::size_t k) {
  if (z.rows() != corpus.pairs.size()) throw ArgumentError("predict_corpus: one embedding per pair required");
  const LabelMode mode = corpus.inventory.mode();
  const RelationId na = corpus.inventory.na();
  std::vector<PredictionRecord> records;
  std::vector<double> logits;
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const PairInstance& p = corpus.pairs[i];
    const Document& doc = corpus.document(p.document_id);
    PredictionRecord rec{p.document_id, p.subject, p.object, doc.entities.at(p.subject).global_id,
                         doc.entities.at(p.object).global_id, {}, p.labels};
    if (model.has_classifier()) {
      logits.assign(model.cls_w.rows(), 0.0);
      for (std::size_t r = 0; r < logits.size(); ++r) {
        logits[r] = kernels::dot(model.cls_w.row(r), z.row(i), z.cols()) + model.cls_b(0, r);
      }
      const std::vector<double> zero(logits.size(), 0.0);
      if (mode == LabelMode::single) {
        rec.predicted = {predict_single(logits, zero)};
      } else {
        rec.predicted = predict_multi(logits, zero, na);
      }
    } else {
      if (index == nullptr) throw ArgumentError("predict_corpus: model has no classifier and no index was given");
      const std::vector<double> scores = knn_scores(*index, z.row_span(i), k);
      if (mode == LabelMode::single) {
        rec.predicted = {predict_single(scores, index->biases)};
      } else {
        rec.predicted = predict_multi(scores, index->biases, na);
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

KnnSelection choose_k(const Model& model, const Corpus& dev, const EmbeddingIndex& index) {
  KnnSelection out;
  if (dev.pairs.empty()) return out;
  const Matrix z = embed_pairs(model, dev, dev.pairs);
  for (std::size_t k : kCandidateK) {
    const auto records = predict_corpus(model, dev, z, &index, k);
    out.dev_f1.emplace_back(k, micro_f1(records, dev.inventory.na()).f1);
  }
  out.k = select_k(out.dev_f1);
  return out;
}

EncoderInit parse_init(const std::string& name) {
  if (name == "random" || name == "plm-random") return EncoderInit::random;
  if (name == "mtb") return EncoderInit::mtb;
  throw ConfigError("unknown encoder init '" + name + "' (expected random|mtb)");
}

std::string init_name(EncoderInit init) { return init == EncoderInit::random ? "random" : "mtb"; }

std::string cell_name(const Cell& cell) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s+%s@p=%g", init_name(cell.init).c_str(), objective_name(cell.objective).c_str(),
                cell.p);
  return buf;
}

CellRun run_cell(const ExperimentData& data, const Checkpoint* pretrained, const EncoderConfig& encoder,
                 const TrainConfig& finetune_config, const Cell& cell, std::uint64_t seed) {
  CellRun run;
  run.cell = cell;
  run.seed = seed;
  const Corpus labeled = restrict_to_pairs(data.train, split_low_resource(data.train.pairs, cell.p, seed));
  const Corpus dev = restrict_to_pairs(data.dev, split_low_resource(data.dev.pairs, cell.p, seed));
  run.train_pairs = labeled.pairs.size();
  if (labeled.pairs.empty()) throw ConfigError("p leaves no labeled training pairs");

  Checkpoint init;
  if (cell.init == EncoderInit::mtb) {
    if (pretrained == nullptr) throw ConfigError("mtb init requires a pretrained checkpoint");
    init.model = pretrained->model;
  } else {
    init.model = init_model(encoder, experiment_vocabulary(data), seed);
  }
  TrainConfig config = finetune_config;
  config.objective = cell.objective;
  config.seed = seed;
  const Checkpoint tuned = finetune(labeled, init, config);
  const Model& model = tuned.model;

  const Matrix test_z = embed_pairs(model, data.test, data.test.pairs);
  std::vector<PredictionRecord> records;
  if (model.has_classifier()) {
    records = predict_corpus(model, data.test, test_z, nullptr, 0);
  } else {
    const EmbeddingIndex index = build_index(model, labeled, labeled.pairs);
    run.k = choose_k(model, dev, index).k;
    records = predict_corpus(model, data.test, test_z, &index, run.k);
  }
  const RelationId na = data.test.inventory.na();
  run.test = micro_f1(records, na);
  run.f1_ign = micro_f1_ign(records, facts_of(labeled, labeled.pairs), na).f1;
  return run;
}

MatrixResult run_matrix(const ExperimentData& data, const Checkpoint* pretrained, const EncoderConfig& encoder,
                        const TrainConfig& finetune_config, const std::vector<Cell>& cells,
                        const std::vector<std::uint64_t>& seeds, std::ostream* progress) {
  MatrixResult result;
  for (const Cell& cell : cells) {
    for (std::uint64_t seed : seeds) {
      try {
        result.runs.push_back(run_cell(data, pretrained, encoder, finetune_config, cell, seed));
        if (progress) {
          *progress << cell_name(cell) << " seed=" << seed << " f1=" << result.runs.back().test.f1 << "\n";
        }
      } catch (const std::exception& e) {
        result.failures.push_back(cell_name(cell) + " seed=" + std::to_string(seed) + ": " + e.what());
        if (progress) *progress << "FAILED " << result.failures.back() << "\n";
      }
    }
  }
  return result;
}

std::string runs_csv(const std::vector<CellRun>& runs) {
  std::string out = "objective,init,p,seed,train_pairs,k,precision,recall,f1,f1_ign\n";
  char buf[256];
  for (const CellRun& r : runs) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%g,%llu,%zu,%zu,%.6f,%.6f,%.6f,%.6f\n",
                  objective_name(r.cell.objective).c_str(), init_name(r.cell.init).c_str(), r.cell.p,
                  static_cast<unsigned long long>(r.seed), r.train_pairs, r.k, r.test.precision, r.test.recall,
                  r.test.f1, r.f1_ign);
    out += buf;
  }
  return out;
}

std::string means_csv(const std::vector<CellRun>& runs) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const CellRun*>> by_cell;
  for (const CellRun& r : runs) {
    const std::string key = cell_name(r.cell);
    auto [it, inserted] = by_cell.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::string out = "objective,init,p,seeds,mean_f1,mean_f1_ign\n";
  char buf[256];
  for (const std::string& key : order) {
    const auto& group = by_cell[key];
    double f1 = 0.0, ign = 0.0;
    for (const CellRun* r : group) {
      f1 += r->test.f1;
      ign += r->f1_ign;
    }
    const double n = static_cast<double>(group.size());
    const Cell& c = group.front()->cell;
    std::snprintf(buf, sizeof(buf), "%s,%s,%g,%zu,%.6f,%.6f\n", objective_name(c.objective).c_str(),
                  init_name(c.init).c_str(), c.p, group.size(), f1 / n, ign / n);
    out += buf;
  }
  return out;
}

}  // namespace relcl
