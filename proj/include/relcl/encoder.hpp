#pragma once

// Small pre-LayerNorm transformer encoder with explicit backward passes, and
// the entity-pair head built on top of it: entity markers, LogSumExp mention
// pooling, localized context pooling from last-layer attention, and the
// linear pair projection.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "relcl/corpus.hpp"
#include "relcl/matrix.hpp"

namespace relcl {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t model_dim = 64;
  std::size_t ffn_dim = 128;
  std::size_t vocab_size = 0;
  std::size_t max_len = 160;
  double dropout_rate = 0.1;
  std::uint64_t seed = 1;

  std::size_t head_dim() const { return model_dim / heads; }
  void validate() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kMask = 1;
  static constexpr int kOpenMarker = 2;   // [E]
  static constexpr int kCloseMarker = 3;  // [/E]

  Vocabulary() = default;
  // Specials, one blank per entity type, then the sorted corpus tokens.
  static Vocabulary build(const std::vector<std::string>& entity_types, const std::vector<Document>& docs);
  // Restores a saved token list; the first entries must be the specials.
  explicit Vocabulary(std::vector<std::string> tokens, std::size_t special_count);

  std::size_t size() const { return tokens_.size(); }
  std::size_t special_count() const { return special_count_; }
  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool is_special(int id) const { return id >= 0 && static_cast<std::size_t>(id) < special_count_; }

 private:
  std::vector<std::string> tokens_;
  std::size_t special_count_ = 0;
  std::unordered_map<std::string, int> index_;
};

struct MarkedDocument {
  std::vector<int> ids;
  std::vector<std::size_t> marker_index;  // per mention: position of its [E]
};

// Wraps every mention in [E] ... [/E]. Throws ValidationError on overlapping
// mentions and LengthError (naming the document) beyond max_len.
MarkedDocument insert_markers(const Document& doc, const Vocabulary& vocab, std::size_t max_len);

// ---- parameters -------------------------------------------------------------

struct LayerWeights {
  Matrix ln1_g, ln1_b;
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln2_g, ln2_b;
  Matrix w1, b1, w2, b2;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "ln1_g", ln1_g, false);
    f(prefix + "ln1_b", ln1_b, false);
    f(prefix + "wq", wq, true);
    f(prefix + "bq", bq, false);
    f(prefix + "wk", wk, true);
    f(prefix + "bk", bk, false);
    f(prefix + "wv", wv, true);
    f(prefix + "bv", bv, false);
    f(prefix + "wo", wo, true);
    f(prefix + "bo", bo, false);
    f(prefix + "ln2_g", ln2_g, false);
    f(prefix + "ln2_b", ln2_b, false);
    f(prefix + "w1", w1, true);
    f(prefix + "b1", b1, false);
    f(prefix + "w2", w2, true);
    f(prefix + "b2", b2, false);
  }
};

struct EncoderWeights {
  Matrix tok_emb;  // vocab x d
  Matrix pos_emb;  // max_len x d
  std::vector<LayerWeights> layers;
  Matrix lnf_g, lnf_b;

  static EncoderWeights init(const EncoderConfig& config, std::mt19937_64& rng);
  static EncoderWeights zeros(const EncoderConfig& config);

  // f(name, matrix, decays)
  template <class F>
  void visit(F&& f) {
    f("encoder.tok_emb", tok_emb, true);
    f("encoder.pos_emb", pos_emb, true);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].visit("encoder.layer" + std::to_string(i) + ".", f);
    }
    f("encoder.lnf_g", lnf_g, false);
    f("encoder.lnf_b", lnf_b, false);
  }
};

// ---- forward / backward -----------------------------------------------------

enum class Mode { train, eval };

struct LayerNormCache {
  Matrix xhat;
  std::vector<double> inv_std;
};

struct LayerCache {
  Matrix x_in;
  LayerNormCache ln1;
  Matrix h, q, k, v;
  Matrix probs;  // (heads * l) x l, head-major
  Matrix o;
  Matrix drop1;  // empty when no dropout
  Matrix x_mid;
  LayerNormCache ln2;
  Matrix h2, u, g;
  Matrix drop2;
};

struct EncodedDocument {
  std::vector<int> ids;
  Matrix H;  // l x d
  std::size_t heads = 0;
  Matrix drop0;
  std::vector<LayerCache> layers;
  LayerNormCache lnf;

  std::size_t length() const { return H.rows(); }
  // Last-layer attention weight of head h from position `from` to `to`.
  double attention(std::size_t h, std::size_t from, std::size_t to) const {
    return layers.back().probs(h * length() + from, to);
  }
  const double* attention_row(std::size_t h, std::size_t from) const {
    return layers.back().probs.row(h * length() + from);
  }
};

// Eval mode is deterministic; train mode draws dropout masks from dropout_seed only.
EncodedDocument encode(const EncoderWeights& weights, const EncoderConfig& config, std::span<const int> ids,
                       Mode mode, std::uint64_t dropout_seed);

// Accumulates parameter gradients given dL/dH (l x d) and dL/dA
// ((heads * l) x l, same layout as LayerCache::probs; may be empty).
void encode_backward(const EncoderWeights& weights, const EncoderConfig& config, const EncodedDocument& enc,
                     const Matrix& d_hidden, const Matrix& d_attention, EncoderWeights& grads);

// ---- entity-pair head ---------------------------------------------------------

// Coordinatewise log(sum_j exp(h_j)), max-shifted. Throws ArgumentError on empty input.
std::vector<double> entity_embedding(const std::vector<std::span<const double>>& mention_states);

inline constexpr double kContextEpsilon = 1e-12;

struct LocalizedContext {
  std::vector<double> c;  // d
  std::vector<double> a;  // l, a probability vector
  std::vector<double> q;  // l
  double q_sum = 0.0;
  bool uniform_fallback = false;
};

// Mean-pools the last-layer attention rows at each entity's marker positions,
// multiplies the two entity attentions per head, sums heads, normalizes and
// reads the context out of H. Falls back to uniform attention when q == 0.
LocalizedContext localized_context(const EncodedDocument& enc, std::span<const std::size_t> subject_markers,
                                   std::span<const std::size_t> object_markers);

// z = W^T [h_s; h_o; c] with W stored as 3d x d. Throws ArgumentError on shape mismatch.
std::vector<double> pair_embedding(const Matrix& w_linear, std::span<const double> h_s,
                                   std::span<const double> h_o, std::span<const double> c);

struct PairForward {
  std::vector<std::size_t> subject_markers, object_markers;
  std::vector<double> h_s, h_o;
  LocalizedContext context;
  std::vector<double> z;
};

PairForward pair_forward(const Matrix& w_linear, const EncodedDocument& enc,
                         std::span<const std::size_t> subject_markers, std::span<const std::size_t> object_markers);

// Accumulates into dH (l x d), dA ((heads*l) x l) and dW (3d x d).
void pair_backward(const Matrix& w_linear, const EncodedDocument& enc, const PairForward& fwd,
                   std::span<const double> dz, Matrix& d_hidden, Matrix& d_attention, Matrix& d_w_linear);

// Token logits (n x vocab) at `positions`.
Matrix mlm_forward(const EncodedDocument& enc, std::span<const std::size_t> positions, const Matrix& w_mlm,
                   const Matrix& b_mlm);
void mlm_backward(const EncodedDocument& enc, std::span<const std::size_t> positions, const Matrix& w_mlm,
                  const Matrix& d_logits, Matrix& d_hidden, Matrix& d_w_mlm, Matrix& d_b_mlm);

}  // namespace relcl
