#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "relcl/encoder.hpp"
#include "relcl/error.hpp"
#include "relcl/kernels.hpp"
#include "relcl/synthetic.hpp"

using namespace relcl;

namespace {

Document tiny_document() {
  Document d;
  d.id = "d0";
  d.tokens = {"a", "b", "c", "d", "e", "f", "g", "h", "a", "c"};
  d.entities = {{"E1", "T0"}, {"E2", "T1"}, {"E3", "T0"}};
  d.mentions = {{0, 0, 1}, {1, 2, 4}, {0, 5, 6}, {2, 7, 8}, {1, 9, 10}};
  return d;
}

Vocabulary tiny_vocab() { return Vocabulary::build({"T0", "T1"}, {tiny_document()}); }

EncoderConfig tiny_config(std::size_t vocab) {
  EncoderConfig c;
  c.layers = 2;
  c.heads = 2;
  c.model_dim = 8;
  c.ffn_dim = 12;
  c.vocab_size = vocab;
  c.max_len = 24;
  c.dropout_rate = 0.1;
  return c;
}

std::vector<std::size_t> markers_of(const Document& doc, const MarkedDocument& m, std::size_t entity) {
  std::vector<std::size_t> out;
  for (std::size_t i : doc.mentions_of(entity)) out.push_back(m.marker_index[i]);
  return out;
}

}  // namespace

TEST_CASE("insert_markers wraps mentions and preserves token order") {
  const Document doc = tiny_document();
  const Vocabulary vocab = tiny_vocab();
  const MarkedDocument m = insert_markers(doc, vocab, 64);
  CHECK(m.ids.size() == doc.tokens.size() + 2 * doc.mentions.size());
  std::vector<int> stripped;
  for (int id : m.ids) {
    if (id != Vocabulary::kOpenMarker && id != Vocabulary::kCloseMarker) stripped.push_back(id);
  }
  REQUIRE(stripped.size() == doc.tokens.size());
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) CHECK(vocab.token(stripped[i]) == doc.tokens[i]);
  for (std::size_t mi = 0; mi < doc.mentions.size(); ++mi) CHECK(m.ids[m.marker_index[mi]] == Vocabulary::kOpenMarker);
}

TEST_CASE("insert_markers edge cases") {
  const Vocabulary vocab = tiny_vocab();
  Document doc = tiny_document();
  SUBCASE("no mentions leaves tokens unchanged") {
    doc.mentions.clear();
    doc.entities.clear();
    CHECK(insert_markers(doc, vocab, 64).ids.size() == doc.tokens.size());
  }
  SUBCASE("width-1 mention adds two tokens") {
    doc.mentions = {{0, 3, 4}};
    doc.entities = {{"E1", "T0"}};
    CHECK(insert_markers(doc, vocab, 64).ids.size() == doc.tokens.size() + 2);
  }
  SUBCASE("overlap is a validation error") {
    doc.mentions.push_back({2, 2, 3});
    CHECK_THROWS_AS(insert_markers(doc, vocab, 64), ValidationError);
  }
  SUBCASE("overflow is a length error naming the document") {
    try {
      insert_markers(doc, vocab, 12);
      FAIL("expected LengthError");
    } catch (const LengthError& e) {
      CHECK(std::string(e.what()).find("d0") != std::string::npos);
    }
  }
}

TEST_CASE("insert_markers round trip on synthetic documents") {
  SyntheticWorldConfig wc;
  wc.docs = 100;
  const Corpus corpus = generate_synthetic_world(wc);
  const Vocabulary vocab = Vocabulary::build(corpus.inventory.entity_types(), corpus.documents);
  for (const Document& doc : corpus.documents) {
    const MarkedDocument m = insert_markers(doc, vocab, 512);
    std::vector<std::string> stripped;
    for (int id : m.ids) {
      if (id != Vocabulary::kOpenMarker && id != Vocabulary::kCloseMarker) stripped.push_back(vocab.token(id));
    }
    CHECK(stripped == doc.tokens);
  }
}

TEST_CASE("encode: determinism, dropout and attention rows") {
  const Document doc = tiny_document();
  const Vocabulary vocab = tiny_vocab();
  const EncoderConfig config = tiny_config(vocab.size());
  std::mt19937_64 rng(3);
  const EncoderWeights w = EncoderWeights::init(config, rng);
  const MarkedDocument m = insert_markers(doc, vocab, config.max_len);

  const EncodedDocument a = encode(w, config, m.ids, Mode::eval, 1);
  const EncodedDocument b = encode(w, config, m.ids, Mode::eval, 2);
  CHECK(a.H == b.H);
  const EncodedDocument t1 = encode(w, config, m.ids, Mode::train, 1);
  const EncodedDocument t2 = encode(w, config, m.ids, Mode::train, 2);
  const EncodedDocument t1b = encode(w, config, m.ids, Mode::train, 1);
  CHECK_FALSE(t1.H == t2.H);
  CHECK(t1.H == t1b.H);

  for (const EncodedDocument* e : {&a, &t1}) {
    for (std::size_t h = 0; h < config.heads; ++h) {
      for (std::size_t i = 0; i < e->length(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < e->length(); ++j) sum += e->attention(h, i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
      }
    }
  }
  std::vector<int> bad = m.ids;
  bad[0] = static_cast<int>(vocab.size());
  CHECK_THROWS_AS(encode(w, config, bad, Mode::eval, 0), EncodingError);
}

TEST_CASE("entity_embedding is a stable coordinatewise log-sum-exp") {
  const std::vector<double> a = {1000.0, -2.0}, b = {1000.0, 0.0};
  const auto e = entity_embedding({a, b});
  CHECK(e[0] == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(e[1] == doctest::Approx(std::log(std::exp(-2.0) + 1.0)));
  CHECK_THROWS_AS(entity_embedding({}), ArgumentError);
}

TEST_CASE("localized context is a convex combination of token states") {
  const Document doc = tiny_document();
  const Vocabulary vocab = tiny_vocab();
  const EncoderConfig config = tiny_config(vocab.size());
  std::mt19937_64 rng(5);
  const EncoderWeights w = EncoderWeights::init(config, rng);
  const MarkedDocument m = insert_markers(doc, vocab, config.max_len);
  const EncodedDocument enc = encode(w, config, m.ids, Mode::eval, 0);
  const LocalizedContext ctx = localized_context(enc, markers_of(doc, m, 0), markers_of(doc, m, 1));
  double sum = 0.0;
  for (double x : ctx.a) {
    CHECK(x >= 0.0);
    sum += x;
  }
  CHECK(sum == doctest::Approx(1.0));
  CHECK_FALSE(ctx.uniform_fallback);
}

TEST_CASE("pair_embedding rejects mismatched shapes") {
  const Matrix w(12, 4);
  const std::vector<double> h(4), c(3);
  CHECK_THROWS_AS(pair_embedding(w, h, h, c), ArgumentError);
  CHECK(pair_embedding(w, h, h, h).size() == 4);
}

TEST_CASE("encoder and pair head gradients match finite differences") {
  const Document doc = tiny_document();
  const Vocabulary vocab = tiny_vocab();
  const EncoderConfig config = tiny_config(vocab.size());
  const MarkedDocument m = insert_markers(doc, vocab, config.max_len);
  const auto s_markers = markers_of(doc, m, 0);
  const auto o_markers = markers_of(doc, m, 1);
  const std::vector<std::size_t> mlm_positions = {1, 4, 9};

  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    std::mt19937_64 rng(100 + trial);
    EncoderWeights w = EncoderWeights::init(config, rng);
    // Larger weights so attention is far from uniform.
    w.visit([&](const std::string&, Matrix& p, bool decays) {
      std::normal_distribution<double> n(0.0, decays ? 0.4 : 0.1);
      for (double& x : p.values()) x += n(rng);
    });
    Matrix w_linear(3 * config.model_dim, config.model_dim), w_mlm(config.model_dim, vocab.size()), b_mlm(1, vocab.size());
    std::normal_distribution<double> n(0.0, 0.3);
    for (Matrix* p : {&w_linear, &w_mlm, &b_mlm}) {
      for (double& x : p->values()) x = n(rng);
    }
    std::vector<double> r(config.model_dim);
    for (double& x : r) x = n(rng);
    Matrix r_mlm(mlm_positions.size(), vocab.size());
    for (double& x : r_mlm.values()) x = n(rng);

    const auto loss = [&] {
      const EncodedDocument enc = encode(w, config, m.ids, Mode::train, 77);
      const PairForward fwd = pair_forward(w_linear, enc, s_markers, o_markers);
      double v = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) v += r[i] * fwd.z[i];
      const Matrix logits = mlm_forward(enc, mlm_positions, w_mlm, b_mlm);
      for (std::size_t i = 0; i < logits.size(); ++i) v += r_mlm.data()[i] * logits.data()[i];
      return v;
    };

    const EncodedDocument enc = encode(w, config, m.ids, Mode::train, 77);
    const PairForward fwd = pair_forward(w_linear, enc, s_markers, o_markers);
    Matrix d_hidden(enc.length(), config.model_dim), d_attention(config.heads * enc.length(), enc.length());
    Matrix d_w_linear(w_linear.rows(), w_linear.cols()), d_w_mlm(w_mlm.rows(), w_mlm.cols()), d_b_mlm(1, vocab.size());
    pair_backward(w_linear, enc, fwd, r, d_hidden, d_attention, d_w_linear);
    mlm_backward(enc, mlm_positions, w_mlm, r_mlm, d_hidden, d_w_mlm, d_b_mlm);
    EncoderWeights grads = EncoderWeights::zeros(config);
    encode_backward(w, config, enc, d_hidden, d_attention, grads);

    CHECK(testing::relative_error(d_w_linear, testing::numeric_gradient(w_linear, loss)) < 1e-6);
    CHECK(testing::relative_error(d_w_mlm, testing::numeric_gradient(w_mlm, loss)) < 1e-6);
    CHECK(testing::relative_error(d_b_mlm, testing::numeric_gradient(b_mlm, loss)) < 1e-6);
    std::vector<Matrix*> analytic;
    grads.visit([&](const std::string&, Matrix& g, bool) { analytic.push_back(&g); });
    std::size_t i = 0;
    w.visit([&](const std::string& name, Matrix& p, bool) {
      const Matrix& g = *analytic[i++];
      const std::vector<double> numeric = testing::numeric_gradient(p, loss);
      INFO(name);
      if (name.ends_with(".bk")) {
        // softmax over keys is invariant to a shared key shift
        for (double x : g.values()) CHECK(std::abs(x) < 1e-9);
        for (double x : numeric) CHECK(std::abs(x) < 1e-7);
        return;
      }
      CHECK(testing::relative_error(g, numeric) < 1e-5);
    });
  }
}
