#include "relcl/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "relcl/error.hpp"
#include "relcl/pipeline.hpp"

namespace relcl {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct Settings {
  SyntheticWorldConfig world;
  std::size_t dev_docs = 100;
  std::size_t test_docs = 100;
  EncoderConfig encoder;
  TrainConfig train;
  MiningConfig mining;
};

template <class T>
void take(KeyValues& kv, const std::string& key, T& target) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  const std::string& v = it->second;
  if constexpr (std::is_same_v<T, bool>) {
    if (v != "true" && v != "false") throw ConfigError("bad value for " + key + ": '" + v + "'");
    target = v == "true";
  } else {
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), target);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("bad value for " + key + ": '" + v + "'");
  }
  kv.erase(it);
}

Settings resolve_settings(KeyValues kv) {
  Settings s;
  SyntheticWorldConfig& w = s.world;
  take(kv, "n_entities", w.n_entities);
  take(kv, "n_types", w.n_types);
  take(kv, "n_relations", w.n_relations);
  take(kv, "modes_per_relation", w.modes_per_relation);
  take(kv, "docs", w.docs);
  take(kv, "pairs_per_doc", w.pairs_per_doc);
  take(kv, "vocab_size", w.vocab_size);
  take(kv, "world_seed", w.seed);
  take(kv, "na_fraction", w.na_fraction);
  take(kv, "facts_per_mode", w.facts_per_mode);
  take(kv, "template_words", w.template_words);
  take(kv, "filler_words", w.filler_words);
  take(kv, "distractor_sentences", w.distractor_sentences);
  take(kv, "noise_rate", w.noise_rate);
  take(kv, "popularity_exponent", w.popularity_exponent);
  take(kv, "multi_label", w.multi_label);
  take(kv, "second_label_rate", w.second_label_rate);
  take(kv, "dev_docs", s.dev_docs);
  take(kv, "test_docs", s.test_docs);
  take(kv, "freq_threshold", s.mining.freq_threshold);
  take(kv, "top_k", s.mining.top_k);
  apply_key_values(s.encoder, kv);
  apply_key_values(s.train, kv);
  if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
  return s;
}

struct Context {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string run_dir = "run";
  bool quiet = false;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  KeyValues key_values() const {
    KeyValues kv;
    if (!config_path.empty()) kv = load_key_values(config_path);
    for (const std::string& o : overrides) {
      const auto parsed = parse_key_values(o);
      if (parsed.empty()) throw ConfigError("bad --set value '" + o + "'");
      for (const auto& [k, v] : parsed) kv[k] = v;
    }
    if (seed) {
      kv["seed"] = std::to_string(*seed);
      if (!kv.count("world_seed")) kv["world_seed"] = std::to_string(*seed);
    }
    return kv;
  }
  Settings settings() const { return resolve_settings(key_values()); }
  std::string snapshot() const {
    std::string s;
    for (const auto& [k, v] : key_values()) s += k + "=" + v + "\n";
    return s;
  }
  void log(const std::string& line) const {
    if (!quiet) *err << line << "\n";
  }
  fs::path dir() const {
    fs::create_directories(run_dir);
    return run_dir;
  }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

std::vector<std::uint64_t> seeds_of(const Settings& s) { return {s.train.seed}; }

// ---- gen ----------------------------------------------------------------------------

void cmd_gen(const Context& ctx) {
  const Settings s = ctx.settings();
  RunManifest manifest("gen", ctx.snapshot(), {s.world.seed});
  const ExperimentData data = synthetic_experiment_data(s.world, s.dev_docs, s.test_docs);
  const fs::path dir = ctx.dir();
  save_inventory(data.train.inventory, dir / "inventory.json");
  manifest.add_artifact(dir / "inventory.json");
  for (const auto& [name, corpus] : {std::pair<std::string, const Corpus*>{"train", &data.train},
                                     {"dev", &data.dev},
                                     {"test", &data.test}}) {
    save_documents(corpus->documents, dir / (name + ".docs.jsonl"));
    save_pairs(corpus->pairs, corpus->inventory, dir / (name + ".labels.jsonl"));
    manifest.add_artifact(dir / (name + ".docs.jsonl"));
    manifest.add_artifact(dir / (name + ".labels.jsonl"));
  }
  manifest.finish(dir);
  ctx.log("wrote synthetic corpus to " + dir.string());
}

// ---- mine -----------------------------------------------------------------------------

void save_pair_set(const PretrainPairSet& set, const fs::path& path) {
  std::ofstream out = open_out(path);
  for (const SelectedPair& p : set.selected) {
    ojson j;
    j["subject"] = p.pair.first;
    j["object"] = p.pair.second;
    j["frequency"] = p.frequency;
    j["pmi"] = p.pmi;
    out << j.dump() << "\n";
  }
}

PretrainPairSet load_pair_set(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  PretrainPairSet set;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      set.selected.push_back(SelectedPair{{j.at("subject").get<std::string>(), j.at("object").get<std::string>()},
                                          j.at("frequency").get<std::size_t>(), j.at("pmi").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), n);
    }
  }
  return set;
}

struct MineArgs {
  std::string docs, output;
  std::optional<std::size_t> freq_threshold, top_k;
};

void cmd_mine(const Context& ctx, const MineArgs& a) {
  Settings s = ctx.settings();
  if (a.freq_threshold) s.mining.freq_threshold = *a.freq_threshold;
  if (a.top_k) s.mining.top_k = *a.top_k;
  if (s.mining.freq_threshold < 1 || s.mining.top_k < 1) throw ArgumentError("--freq-threshold and --top-k must be >= 1");
  RunManifest manifest("mine", ctx.snapshot(), {});
  manifest.add_input(a.docs);
  const PretrainPairSet set = mine_pairs(load_documents(a.docs), s.mining);
  const fs::path output = a.output.empty() ? ctx.dir() / "pairs.jsonl" : fs::path(a.output);
  save_pair_set(set, output);
  manifest.add_artifact(output);
  manifest.finish(ctx.dir());
  ctx.log("selected " + std::to_string(set.selected.size()) + " pairs -> " + output.string());
}

// ---- pretrain -------------------------------------------------------------------------------

struct PretrainArgs {
  std::string inventory, docs, pairs, output;
};

void cmd_pretrain(const Context& ctx, const PretrainArgs& a) {
  const Settings s = ctx.settings();
  RunManifest manifest("pretrain", ctx.snapshot(), seeds_of(s));
  manifest.add_input(a.inventory);
  manifest.add_input(a.docs);
  if (!a.pairs.empty()) manifest.add_input(a.pairs);
  const Corpus corpus = load_corpus(a.inventory, a.docs, std::nullopt);
  const PretrainPairSet pairs = a.pairs.empty() ? mine_pairs(corpus.documents, s.mining) : load_pair_set(a.pairs);
  const fs::path dir = ctx.dir();
  Model init = init_model(s.encoder, Vocabulary::build(corpus.inventory.entity_types(), corpus.documents),
                          s.encoder.seed);
  std::ofstream metrics = open_out(dir / "pretrain_metrics.csv");
  const Checkpoint ck = pretrain(corpus.documents, pairs, std::move(init), s.train, &metrics);
  const fs::path output = a.output.empty() ? dir / "pretrain.ckpt" : fs::path(a.output);
  save_checkpoint(ck, output);
  manifest.add_artifact(output);
  manifest.add_artifact(dir / "pretrain_metrics.csv");
  manifest.set_steps(ck.step);
  manifest.finish(dir);
  ctx.log("pretrained " + std::to_string(ck.step) + " steps -> " + output.string());
}

// ---- finetune -------------------------------------------------------------------------------

struct FinetuneArgs {
  std::string inventory, docs, labels, init, output;
  double p = 1.0;
};

void cmd_finetune(const Context& ctx, const FinetuneArgs& a) {
  const Settings s = ctx.settings();
  RunManifest manifest("finetune", ctx.snapshot(), seeds_of(s));
  for (const std::string& f : {a.inventory, a.docs, a.labels}) manifest.add_input(f);
  if (!a.init.empty()) manifest.add_input(a.init);
  const Corpus full = load_corpus(a.inventory, a.docs, fs::path(a.labels));
  const Corpus labeled = restrict_to_pairs(full, split_low_resource(full.pairs, a.p, s.train.seed));
  Checkpoint init;
  if (a.init.empty()) {
    init.model = init_model(s.encoder, Vocabulary::build(full.inventory.entity_types(), full.documents), s.encoder.seed);
  } else {
    init = load_checkpoint(a.init);
  }
  const fs::path dir = ctx.dir();
  std::ofstream metrics = open_out(dir / "finetune_metrics.csv");
  const Checkpoint ck = finetune(labeled, init, s.train, &metrics);
  const fs::path output = a.output.empty() ? dir / "finetune.ckpt" : fs::path(a.output);
  save_checkpoint(ck, output);
  manifest.add_artifact(output);
  manifest.add_artifact(dir / "finetune_metrics.csv");
  manifest.set_steps(ck.step);
  manifest.finish(dir);
  ctx.log("finetuned on " + std::to_string(labeled.pairs.size()) + " pairs -> " + output.string());
}

// ---- infer -----------------------------------------------------------------------------------

std::string record_to_json(const PredictionRecord& r, const RelationInventory& inv) {
  ojson j;
  j["document_id"] = r.document_id;
  j["subject"] = r.subject;
  j["object"] = r.object;
  j["subject_id"] = r.subject_id;
  j["object_id"] = r.object_id;
  std::vector<std::string> pred, gold;
  for (RelationId x : r.predicted) pred.push_back(inv.name(x));
  for (RelationId x : r.gold) gold.push_back(inv.name(x));
  j["predicted"] = pred;
  j["gold"] = gold;
  return j.dump();
}

std::vector<PredictionRecord> load_records(const fs::path& path, const RelationInventory& inv) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t n = 0;
  const auto ids = [&](const nlohmann::json& names) {
    LabelSet out;
    for (const auto& name : names) {
      const auto id = inv.find(name.get<std::string>());
      if (!id) throw ParseError("unknown relation '" + name.get<std::string>() + "'", n);
      out.push_back(*id);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      records.push_back(PredictionRecord{j.at("document_id").get<std::string>(), j.at("subject").get<std::size_t>(),
                                         j.at("object").get<std::size_t>(), j.at("subject_id").get<std::string>(),
                                         j.at("object_id").get<std::string>(), ids(j.at("predicted")),
                                         ids(j.at("gold"))});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), n);
    }
  }
  return records;
}

struct InferArgs {
  std::string checkpoint, index, inventory, docs, labels, train_docs, train_labels, output, mode;
  std::size_t k = 5;
};

void cmd_infer(const Context& ctx, const InferArgs& a) {
  RunManifest manifest("infer", ctx.snapshot(), {});
  for (const std::string& f : {a.checkpoint, a.inventory, a.docs, a.labels}) manifest.add_input(f);
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  Corpus corpus = load_corpus(a.inventory, a.docs, fs::path(a.labels));
  if (!a.mode.empty()) {
    if (a.mode != "single" && a.mode != "multi") throw ArgumentError("--mode must be single or multi");
    const LabelMode want = a.mode == "single" ? LabelMode::single : LabelMode::multi;
    if (want != corpus.inventory.mode()) throw ConfigError("--mode " + a.mode + " does not match the inventory");
  }
  if (a.k < 1) throw ArgumentError("--k must be >= 1");
  const fs::path dir = ctx.dir();
  std::optional<EmbeddingIndex> index;
  if (!a.index.empty()) {
    manifest.add_input(a.index);
    index = load_index(a.index);
  } else if (!ck.model.has_classifier()) {
    if (a.train_docs.empty() || a.train_labels.empty()) {
      throw ArgumentError("kNN inference needs --index or --train-docs with --train-labels");
    }
    manifest.add_input(a.train_docs);
    manifest.add_input(a.train_labels);
    const Corpus train = load_corpus(a.inventory, a.train_docs, fs::path(a.train_labels));
    index = build_index(ck.model, train, train.pairs);
    save_index(*index, dir / "index.bin");
    manifest.add_artifact(dir / "index.bin");
  }
  const Matrix z = embed_pairs(ck.model, corpus, corpus.pairs);
  const auto records = predict_corpus(ck.model, corpus, z, index ? &*index : nullptr, a.k);
  const fs::path output = a.output.empty() ? dir / "predictions.jsonl" : fs::path(a.output);
  std::ofstream out = open_out(output);
  for (const PredictionRecord& r : records) out << record_to_json(r, corpus.inventory) << "\n";
  manifest.add_artifact(output);
  manifest.finish(dir);
  ctx.log("wrote " + std::to_string(records.size()) + " predictions -> " + output.string());
}

// ---- eval -------------------------------------------------------------------------------------

struct EvalArgs {
  std::string predictions, inventory, train_docs, train_labels, objective = "unknown", init = "unknown";
  double p = 1.0;
};

void cmd_eval(const Context& ctx, const EvalArgs& a) {
  RunManifest manifest("eval", ctx.snapshot(), {});
  manifest.add_input(a.predictions);
  manifest.add_input(a.inventory);
  const RelationInventory inv = load_inventory(a.inventory);
  const auto records = load_records(a.predictions, inv);
  const F1Score f1 = micro_f1(records, inv.na());
  ojson j;
  j["precision"] = f1.precision;
  j["recall"] = f1.recall;
  j["f1"] = f1.f1;
  j["tp"] = f1.tp;
  j["fp"] = f1.fp;
  j["fn"] = f1.fn;
  std::optional<double> ign;
  if (!a.train_docs.empty() && !a.train_labels.empty()) {
    const Corpus train = load_corpus(a.inventory, a.train_docs, fs::path(a.train_labels));
    ign = micro_f1_ign(records, facts_of(train, train.pairs), inv.na()).f1;
    j["f1_ign"] = *ign;
  }
  *ctx.out << j.dump(2) << "\n";
  const fs::path csv = ctx.dir() / "metrics.csv";
  const bool fresh = !fs::exists(csv);
  std::ofstream out(csv, std::ios::app);
  if (fresh) out << "objective,init,p,precision,recall,f1,f1_ign\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%s,%g,%.6f,%.6f,%.6f,%s\n", a.objective.c_str(), a.init.c_str(), a.p,
                f1.precision, f1.recall, f1.f1, ign ? std::to_string(*ign).c_str() : "");
  out << buf;
  out.close();
  manifest.add_artifact(csv);
  manifest.finish(ctx.dir());
}

// ---- probe -------------------------------------------------------------------------------------

struct ProbeArgs {
  std::string checkpoint, inventory, train_docs, train_labels, test_docs, test_labels;
  bool geometry = false;
  std::size_t k = 5;
};

void cmd_probe(const Context& ctx, const ProbeArgs& a) {
  const Settings s = ctx.settings();
  RunManifest manifest("probe", ctx.snapshot(), {s.train.seed});
  ProbeReport report;
  if (a.geometry) {
    ClusterGeometryConfig gc;
    gc.seed = s.train.seed;
    const ClusterGeometry g = make_cluster_geometry(gc);
    report = probe(g.train_z, g.train_labels, g.test_z, g.test_labels, g.inventory, a.k);
  } else {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const Corpus train = load_corpus(a.inventory, a.train_docs, fs::path(a.train_labels));
    const Corpus test = load_corpus(a.inventory, a.test_docs, fs::path(a.test_labels));
    const auto single = [](const Corpus& c) {
      std::vector<RelationId> out;
      for (const PairInstance& p : c.pairs) {
        if (p.labels.size() != 1) throw ValidationError("probe needs single-label data");
        out.push_back(p.labels[0]);
      }
      return out;
    };
    report = probe(embed_pairs(ck.model, train, train.pairs), single(train), embed_pairs(ck.model, test, test.pairs),
                   single(test), train.inventory, a.k);
  }
  const std::string csv = report.to_csv();
  *ctx.out << csv;
  std::ofstream out = open_out(ctx.dir() / "probe.csv");
  out << csv;
  out.close();
  manifest.add_artifact(ctx.dir() / "probe.csv");
  manifest.finish(ctx.dir());
}

// ---- matrix ----------------------------------------------------------------------------------

template <class T>
std::vector<T> split_list(const std::string& text, const std::function<T(const std::string&)>& parse) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse(item));
  }
  if (out.empty()) throw ArgumentError("empty list '" + text + "'");
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ArgumentError("bad number '" + s + "'");
  return v;
}

struct MatrixArgs {
  std::string objectives = "ce,mccl", inits = "random,mtb", ps = "0.01,0.05,0.1,1", seeds = "1,2,3";
  std::string pretrained;
};

void cmd_matrix(const Context& ctx, const MatrixArgs& a) {
  const Settings s = ctx.settings();
  const auto objectives = split_list<Objective>(a.objectives, parse_objective);
  const auto inits = split_list<EncoderInit>(a.inits, parse_init);
  const auto ps = split_list<double>(a.ps, parse_double);
  const auto seeds = split_list<std::uint64_t>(a.seeds, [](const std::string& x) {
    return static_cast<std::uint64_t>(parse_double(x));
  });
  RunManifest manifest("matrix", ctx.snapshot(), seeds);
  if (!a.pretrained.empty()) manifest.add_input(a.pretrained);
  const ExperimentData data = synthetic_experiment_data(s.world, s.dev_docs, s.test_docs);
  const fs::path dir = ctx.dir();

  std::optional<Checkpoint> pretrained;
  if (std::find(inits.begin(), inits.end(), EncoderInit::mtb) != inits.end()) {
    if (!a.pretrained.empty()) {
      pretrained = load_checkpoint(a.pretrained);
    } else {
      ctx.log("pretraining encoder for mtb cells");
      std::ofstream metrics = open_out(dir / "pretrain_metrics.csv");
      pretrained = pretrain_encoder(data, s.encoder, s.train, s.mining, &metrics);
      save_checkpoint(*pretrained, dir / "pretrain.ckpt");
      manifest.add_artifact(dir / "pretrain.ckpt");
      manifest.add_artifact(dir / "pretrain_metrics.csv");
    }
  }
  std::vector<Cell> cells;
  for (Objective o : objectives) {
    for (EncoderInit i : inits) {
      for (double p : ps) cells.push_back(Cell{o, i, p});
    }
  }
  const MatrixResult result = run_matrix(data, pretrained ? &*pretrained : nullptr, s.encoder, s.train, cells, seeds,
                                         ctx.quiet ? nullptr : ctx.err);
  open_out(dir / "matrix_runs.csv") << runs_csv(result.runs);
  open_out(dir / "matrix_means.csv") << means_csv(result.runs);
  manifest.add_artifact(dir / "matrix_runs.csv");
  manifest.add_artifact(dir / "matrix_means.csv");
  manifest.finish(dir);
  *ctx.out << means_csv(result.runs);
  for (const std::string& f : result.failures) *ctx.err << "cell failed: " << f << "\n";
}

// ---- export-embeddings --------------------------------------------------------------------------

struct ExportArgs {
  std::string checkpoint, inventory, docs, labels, output;
  bool full = false;
};

void cmd_export(const Context& ctx, const ExportArgs& a) {
  RunManifest manifest("export-embeddings", ctx.snapshot(), {});
  for (const std::string& f : {a.checkpoint, a.inventory, a.docs, a.labels}) manifest.add_input(f);
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const Corpus corpus = load_corpus(a.inventory, a.docs, fs::path(a.labels));
  const fs::path output = a.output.empty() ? ctx.dir() / "embeddings.csv" : fs::path(a.output);
  std::ofstream out = open_out(output);
  export_embeddings(ck.model, corpus, corpus.pairs, a.full, out);
  manifest.add_artifact(output);
  manifest.finish(ctx.dir());
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"relcl: contrastive relation-extraction toolkit"};
  app.fallthrough();
  app.require_subcommand(1);
  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  std::uint64_t seed = 0;
  app.add_option("--config", ctx.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", ctx.overrides, "override one config key (key=value), repeatable");
  auto* seed_opt = app.add_option("--seed", seed, "seed for sampling, training and generation");
  app.add_option("--run-dir", ctx.run_dir, "directory for artifacts, metrics and manifests");
  app.add_flag("--quiet", ctx.quiet, "suppress progress output");

  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus (train/dev/test)");

  MineArgs mine_args;
  auto* mine = app.add_subcommand("mine", "select pretraining entity pairs by frequency and PMI");
  mine->add_option("--docs", mine_args.docs, "documents JSONL")->required();
  mine->add_option("--freq-threshold", mine_args.freq_threshold, "minimum pair document frequency");
  mine->add_option("--top-k", mine_args.top_k, "number of pairs kept");
  mine->add_option("--output", mine_args.output, "pair set JSONL");

  PretrainArgs pre_args;
  auto* pre = app.add_subcommand("pretrain", "contrastive pretraining on unlabeled documents");
  pre->add_option("--inventory", pre_args.inventory)->required();
  pre->add_option("--docs", pre_args.docs)->required();
  pre->add_option("--pairs", pre_args.pairs, "mined pair set; mined on the fly when absent");
  pre->add_option("--output", pre_args.output, "checkpoint path");

  FinetuneArgs ft_args;
  auto* ft = app.add_subcommand("finetune", "finetune on labeled pairs");
  ft->add_option("--inventory", ft_args.inventory)->required();
  ft->add_option("--docs", ft_args.docs)->required();
  ft->add_option("--labels", ft_args.labels)->required();
  ft->add_option("--init", ft_args.init, "initial checkpoint; random init when absent");
  ft->add_option("--p", ft_args.p, "fraction of labeled pairs kept");
  ft->add_option("--output", ft_args.output, "checkpoint path");

  InferArgs inf_args;
  auto* inf = app.add_subcommand("infer", "predict relations for labeled-format pairs");
  inf->add_option("--checkpoint", inf_args.checkpoint)->required();
  inf->add_option("--index", inf_args.index, "saved embedding index");
  inf->add_option("--inventory", inf_args.inventory)->required();
  inf->add_option("--docs", inf_args.docs)->required();
  inf->add_option("--labels", inf_args.labels)->required();
  inf->add_option("--train-docs", inf_args.train_docs, "documents for building the index");
  inf->add_option("--train-labels", inf_args.train_labels, "pairs for building the index");
  inf->add_option("--k", inf_args.k, "neighbors per relation");
  inf->add_option("--mode", inf_args.mode, "single|multi (must match the inventory)");
  inf->add_option("--output", inf_args.output, "predictions JSONL");

  EvalArgs ev_args;
  auto* ev = app.add_subcommand("eval", "score predictions");
  ev->add_option("--predictions", ev_args.predictions)->required();
  ev->add_option("--inventory", ev_args.inventory)->required();
  ev->add_option("--train-docs", ev_args.train_docs, "training documents (for F1-Ign)");
  ev->add_option("--train-labels", ev_args.train_labels, "training pairs (for F1-Ign)");
  ev->add_option("--objective", ev_args.objective, "label for the CSV row");
  ev->add_option("--init", ev_args.init, "label for the CSV row");
  ev->add_option("--p", ev_args.p, "label for the CSV row");

  ProbeArgs pr_args;
  auto* pr = app.add_subcommand("probe", "softmax, nearest-centroid and classwise-kNN probes");
  pr->add_flag("--geometry", pr_args.geometry, "probe the built-in two-cluster geometry");
  pr->add_option("--checkpoint", pr_args.checkpoint);
  pr->add_option("--inventory", pr_args.inventory);
  pr->add_option("--train-docs", pr_args.train_docs);
  pr->add_option("--train-labels", pr_args.train_labels);
  pr->add_option("--test-docs", pr_args.test_docs);
  pr->add_option("--test-labels", pr_args.test_labels);
  pr->add_option("--k", pr_args.k);

  MatrixArgs mx_args;
  auto* mx = app.add_subcommand("matrix", "low-resource experiment matrix on a synthetic world");
  mx->add_option("--objectives", mx_args.objectives, "comma list of ce|supcon|mccl|mccl_multilabel");
  mx->add_option("--inits", mx_args.inits, "comma list of random|mtb");
  mx->add_option("--ps", mx_args.ps, "comma list of label fractions");
  mx->add_option("--seeds", mx_args.seeds, "comma list of seeds");
  mx->add_option("--pretrained", mx_args.pretrained, "pretrained checkpoint for mtb cells");

  ExportArgs ex_args;
  auto* ex = app.add_subcommand("export-embeddings", "pair embeddings with a 2-D principal-axes projection");
  ex->add_option("--checkpoint", ex_args.checkpoint)->required();
  ex->add_option("--inventory", ex_args.inventory)->required();
  ex->add_option("--docs", ex_args.docs)->required();
  ex->add_option("--labels", ex_args.labels)->required();
  ex->add_option("--output", ex_args.output, "CSV path");
  ex->add_flag("--full", ex_args.full, "append the full vectors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  if (*seed_opt) ctx.seed = seed;

  try {
    if (*gen) {
      cmd_gen(ctx);
    } else if (*mine) {
      cmd_mine(ctx, mine_args);
    } else if (*pre) {
      cmd_pretrain(ctx, pre_args);
    } else if (*ft) {
      cmd_finetune(ctx, ft_args);
    } else if (*inf) {
      cmd_infer(ctx, inf_args);
    } else if (*ev) {
      cmd_eval(ctx, ev_args);
    } else if (*pr) {
      if (!pr_args.geometry && (pr_args.checkpoint.empty() || pr_args.inventory.empty() ||
                                pr_args.train_docs.empty() || pr_args.train_labels.empty() ||
                                pr_args.test_docs.empty() || pr_args.test_labels.empty())) {
        throw ArgumentError("probe needs --geometry or checkpoint, inventory and train/test files");
      }
      cmd_probe(ctx, pr_args);
    } else if (*mx) {
      cmd_matrix(ctx, mx_args);
    } else if (*ex) {
      cmd_export(ctx, ex_args);
    }
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ArgumentError& e) {
    err << "argument error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace relcl
