#include <cmath>
#include <unordered_map>

#include "relcl/error.hpp"
#include "relcl/trainer.hpp"

namespace relcl {

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : m.values()) x = dist(rng);
  return m;
}

}  // namespace

Model init_model(const EncoderConfig& config, Vocabulary vocab, std::uint64_t seed) {
  EncoderConfig cfg = config;
  cfg.vocab_size = vocab.size();
  cfg.validate();
  std::mt19937_64 rng(seed);
  Model model;
  model.config = cfg;
  model.vocab = std::move(vocab);
  model.encoder = EncoderWeights::init(cfg, rng);
  const std::size_t d = cfg.model_dim;
  model.w_linear = gaussian(3 * d, d, 0.02, rng);
  model.w_mlm = gaussian(d, cfg.vocab_size, 0.02, rng);
  model.b_mlm = Matrix(1, cfg.vocab_size);
  return model;
}

Model zeros_like(const Model& model) {
  Model z;
  z.config = model.config;
  z.relations = model.relations;
  z.na = model.na;
  z.encoder = EncoderWeights::zeros(model.config);
  const auto shape = [](const Matrix& m) { return Matrix(m.rows(), m.cols()); };
  z.w_linear = shape(model.w_linear);
  z.w_mlm = shape(model.w_mlm);
  z.b_mlm = shape(model.b_mlm);
  z.cls_w = shape(model.cls_w);
  z.cls_b = shape(model.cls_b);
  z.proxies = shape(model.proxies);
  z.rel_bias = shape(model.rel_bias);
  return z;
}

bool optimizer_step(Model& params, const Model& grads, AdamState& state, const OptimizerConfig& config) {
  std::unordered_map<std::string, const Matrix*> grad_of;
  bool finite = true;
  grads.visit([&](const std::string& name, const Matrix& g, bool) {
    grad_of[name] = &g;
    for (double x : g.values()) finite = finite && std::isfinite(x);
  });
  if (!finite) return false;

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const double lr = config.learning_rate;
  params.visit([&](const std::string& name, Matrix& p, bool decays) {
    if (p.empty()) return;
    const Matrix& g = *grad_of.at(name);
    if (!g.same_shape(p)) throw ArgumentError("optimizer_step: gradient shape mismatch for " + name);
    Matrix& m = state.m[name];
    Matrix& v = state.v[name];
    if (!m.same_shape(p)) m = Matrix(p.rows(), p.cols());
    if (!v.same_shape(p)) v = Matrix(p.rows(), p.cols());
    double* pd = p.data();
    double* md = m.data();
    double* vd = v.data();
    const double* gd = g.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      md[i] = config.beta1 * md[i] + (1.0 - config.beta1) * gd[i];
      vd[i] = config.beta2 * vd[i] + (1.0 - config.beta2) * gd[i] * gd[i];
      if (decays) pd[i] -= lr * config.weight_decay * pd[i];
      pd[i] -= lr * (md[i] / c1) / (std::sqrt(vd[i] / c2) + config.eps);
    }
  });
  return true;
}

std::vector<std::size_t> entity_markers(const Document& doc, const MarkedDocument& marked, std::size_t entity) {
  std::vector<std::size_t> out;
  for (std::size_t m : doc.mentions_of(entity)) out.push_back(marked.marker_index.at(m));
  return out;
}

Matrix embed_pairs(const Model& model, const Corpus& corpus, const std::vector<PairInstance>& pairs) {
  const std::size_t d = model.config.model_dim;
  Matrix z(pairs.size(), d);
  std::unordered_map<std::string, std::size_t> doc_index;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) doc_index.emplace(corpus.documents[i].id, i);
  // rows per document, in first-appearance order
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [it, inserted] = rows.try_emplace(pairs[i].document_id);
    if (inserted) order.push_back(pairs[i].document_id);
    it->second.push_back(i);
  }
  for (const std::string& id : order) {
    const auto found = doc_index.find(id);
    if (found == doc_index.end()) throw ValidationError("embed_pairs: unknown document " + id);
    const Document& doc = corpus.documents[found->second];
    const MarkedDocument marked = insert_markers(doc, model.vocab, model.config.max_len);
    const EncodedDocument enc = encode(model.encoder, model.config, marked.ids, Mode::eval, 0);
    for (std::size_t row : rows[id]) {
      const auto s = entity_markers(doc, marked, pairs[row].subject);
      const auto o = entity_markers(doc, marked, pairs[row].object);
      const PairForward fwd = pair_forward(model.w_linear, enc, s, o);
      std::copy(fwd.z.begin(), fwd.z.end(), z.row(row));
    }
  }
  return z;
}

}  // namespace relcl
