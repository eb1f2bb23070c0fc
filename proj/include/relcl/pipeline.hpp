#pragma once

// End-to-end experiment plumbing shared by the CLI and the acceptance suite:
// data preparation, pretraining from mined pairs, one low-resource cell per
// (objective, encoder init, p, seed), result tables, embedding export and run
// manifests.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "relcl/corpus.hpp"
#include "relcl/eval.hpp"
#include "relcl/inference.hpp"
#include "relcl/synthetic.hpp"
#include "relcl/trainer.hpp"

namespace relcl {

struct ExperimentData {
  Corpus train;  // documents double as the unlabeled pretraining corpus
  Corpus dev;
  Corpus test;
  std::vector<std::string> entity_types;
};

// Train, dev and test documents rendered from one synthetic world.
ExperimentData synthetic_experiment_data(const SyntheticWorldConfig& config, std::size_t dev_docs,
                                         std::size_t test_docs);

// Vocabulary over the training documents plus one blank per entity type.
Vocabulary experiment_vocabulary(const ExperimentData& data);

struct MiningConfig {
  std::size_t freq_threshold = kFreqThresholdGeneral;
  std::size_t top_k = kDefaultTopK;
};

PretrainPairSet mine_pairs(const std::vector<Document>& documents, const MiningConfig& config);

// Mines pretraining pairs from the training documents and runs pretraining from a fresh model.
Checkpoint pretrain_encoder(const ExperimentData& data, const EncoderConfig& encoder, const TrainConfig& config,
                            const MiningConfig& mining, std::ostream* metrics = nullptr);

// ---- prediction -----------------------------------------------------------------

// Classifier head when the model has one, classwise kNN over `index` otherwise.
std::vector<PredictionRecord> predict_corpus(const Model& model, const Corpus& corpus, const Matrix& z,
                                             const EmbeddingIndex* index, std::size_t k);

struct KnnSelection {
  std::size_t k = 1;
  std::vector<std::pair<std::size_t, double>> dev_f1;
};

// Picks k from kCandidateK on `dev`; k = 1 when dev has no pairs.
KnnSelection choose_k(const Model& model, const Corpus& dev, const EmbeddingIndex& index);

// ---- experiment cells ---------------------------------------------------------------

enum class EncoderInit { random, mtb };

EncoderInit parse_init(const std::string& name);
std::string init_name(EncoderInit init);

struct Cell {
  Objective objective = Objective::mccl;
  EncoderInit init = EncoderInit::mtb;
  double p = 0.01;
};

struct CellRun {
  Cell cell;
  std::uint64_t seed = 0;
  std::size_t train_pairs = 0;
  std::size_t k = 0;  // 0 for classifier prediction
  F1Score test;
  double f1_ign = 0.0;
};

// Subsamples p of train and dev pairs with `seed`, finetunes from the chosen
// init and scores the test split. `pretrained` is required for EncoderInit::mtb.
CellRun run_cell(const ExperimentData& data, const Checkpoint* pretrained, const EncoderConfig& encoder,
                 const TrainConfig& finetune_config, const Cell& cell, std::uint64_t seed);

struct MatrixResult {
  std::vector<CellRun> runs;
  std::vector<std::string> failures;  // "<cell>: <message>"
};

// Runs every cell for every seed; a failing cell is recorded and skipped.
MatrixResult run_matrix(const ExperimentData& data, const Checkpoint* pretrained, const EncoderConfig& encoder,
                        const TrainConfig& finetune_config, const std::vector<Cell>& cells,
                        const std::vector<std::uint64_t>& seeds, std::ostream* progress = nullptr);

std::string cell_name(const Cell& cell);
// One row per (cell, seed).
std::string runs_csv(const std::vector<CellRun>& runs);
// One row per cell: arithmetic means over its seeds, in first-appearance order.
std::string means_csv(const std::vector<CellRun>& runs);

// ---- embedding export ------------------------------------------------------------------

// Rows projected on the top two principal axes of the centered data. Each
// axis is signed so its first nonzero loading is positive.
Matrix principal_axes_2d(const Matrix& z);

// CSV: index,document_id,subject,object,label,pc1,pc2[,v0..v{d-1}]. Header only for no pairs.
void export_embeddings(const Model& model, const Corpus& corpus, const std::vector<PairInstance>& pairs,
                       bool full_vectors, std::ostream& out);

// ---- run manifests --------------------------------------------------------------------

std::string sha256_file(const std::filesystem::path& path);

class RunManifest {
 public:
  RunManifest(std::string command, std::string config_snapshot, std::vector<std::uint64_t> seeds);

  // Digests are taken immediately.
  void add_input(const std::filesystem::path& path);
  void add_artifact(const std::filesystem::path& path);
  void set_steps(std::uint64_t steps) { steps_ = steps; }

  // Writes manifest-<command>.json into run_dir. Further calls throw.
  void finish(const std::filesystem::path& run_dir);

 private:
  std::string command_;
  std::string config_;
  std::vector<std::uint64_t> seeds_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> artifacts_;
  std::uint64_t steps_ = 0;
  std::chrono::steady_clock::time_point start_;
  bool finished_ = false;
};

}  // namespace relcl
