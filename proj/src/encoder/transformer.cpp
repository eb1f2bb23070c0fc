#include <cmath>

#include "relcl/encoder.hpp"
#include "relcl/error.hpp"
#include "relcl/kernels.hpp"

namespace relcl {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

Matrix gaussian(std::size_t r, std::size_t c, double std, std::mt19937_64& rng) {
  Matrix m(r, c);
  std::normal_distribution<double> n(0.0, std);
  for (auto& x : m.values()) x = n(rng);
  return m;
}

void layer_norm(const Matrix& x, const Matrix& g, const Matrix& b, Matrix& y, LayerNormCache& cache) {
  const std::size_t l = x.rows(), d = x.cols();
  y.resize(l, d);
  cache.xhat.resize(l, d);
  cache.inv_std.assign(l, 0.0);
  for (std::size_t i = 0; i < l; ++i) {
    const double* xi = x.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std[i] = inv;
    double* xh = cache.xhat.row(i);
    double* yi = y.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      xh[j] = (xi[j] - mean) * inv;
      yi[j] = g(0, j) * xh[j] + b(0, j);
    }
  }
}

// dx += LN'(dy); accumulates dg, db.
void layer_norm_backward(const Matrix& dy, const Matrix& g, const LayerNormCache& cache, Matrix& dx, Matrix& dg,
                         Matrix& db) {
  const std::size_t l = dy.rows(), d = dy.cols();
  std::vector<double> dxhat(d);
  for (std::size_t i = 0; i < l; ++i) {
    const double* dyi = dy.row(i);
    const double* xh = cache.xhat.row(i);
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dxhat[j] = dyi[j] * g(0, j);
      dg(0, j) += dyi[j] * xh[j];
      db(0, j) += dyi[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xh[j];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    double* dxi = dx.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      dxi[j] += cache.inv_std[i] * (dxhat[j] - mean_dxhat - xh[j] * mean_dxhat_xhat);
    }
  }
}

// y = x W + b
Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y(x.rows(), w.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) std::copy(b.data(), b.data() + b.cols(), y.row(i));
  kernels::matmul_acc(x, w, y);
  return y;
}

// dW += x^T dy; db += colsum(dy); dx += dy W^T
void affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix& dw, Matrix& db, Matrix& dx) {
  kernels::matmul_tn_acc(x, dy, dw);
  for (std::size_t i = 0; i < dy.rows(); ++i) kernels::axpy(1.0, dy.row(i), db.data(), dy.cols());
  kernels::matmul_nt_acc(dy, w, dx);
}

Matrix dropout_mask(std::size_t r, std::size_t c, double rate, std::mt19937_64& rng) {
  Matrix m(r, c);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep = 1.0 / (1.0 - rate);
  for (auto& x : m.values()) x = u(rng) < rate ? 0.0 : keep;
  return m;
}

void apply_mask(Matrix& x, const Matrix& mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] *= mask.data()[i];
}

double gelu(double u) { return 0.5 * u * (1.0 + std::tanh(kGeluC * (u + kGeluA * u * u * u))); }

double gelu_grad(double u) {
  const double t = std::tanh(kGeluC * (u + kGeluA * u * u * u));
  return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * u * u);
}

}  // namespace

void EncoderConfig::validate() const {
  if (layers < 1 || heads < 1 || model_dim < 1 || ffn_dim < 1 || vocab_size < 5 || max_len < 1) {
    throw ConfigError("encoder: layers, heads, dims, vocab_size and max_len must be positive");
  }
  if (model_dim % heads != 0) throw ConfigError("encoder: model_dim must be divisible by heads");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("encoder: dropout_rate must be in [0, 1)");
}

EncoderWeights EncoderWeights::init(const EncoderConfig& config, std::mt19937_64& rng) {
  config.validate();
  const std::size_t d = config.model_dim, f = config.ffn_dim;
  EncoderWeights w;
  w.tok_emb = gaussian(config.vocab_size, d, kInitStd, rng);
  w.pos_emb = gaussian(config.max_len, d, kInitStd, rng);
  for (std::size_t i = 0; i < config.layers; ++i) {
    LayerWeights lw;
    lw.ln1_g = Matrix(1, d, 1.0);
    lw.ln1_b = Matrix(1, d);
    lw.wq = gaussian(d, d, kInitStd, rng);
    lw.bq = Matrix(1, d);
    lw.wk = gaussian(d, d, kInitStd, rng);
    lw.bk = Matrix(1, d);
    lw.wv = gaussian(d, d, kInitStd, rng);
    lw.bv = Matrix(1, d);
    lw.wo = gaussian(d, d, kInitStd, rng);
    lw.bo = Matrix(1, d);
    lw.ln2_g = Matrix(1, d, 1.0);
    lw.ln2_b = Matrix(1, d);
    lw.w1 = gaussian(d, f, kInitStd, rng);
    lw.b1 = Matrix(1, f);
    lw.w2 = gaussian(f, d, kInitStd, rng);
    lw.b2 = Matrix(1, d);
    w.layers.push_back(std::move(lw));
  }
  w.lnf_g = Matrix(1, d, 1.0);
  w.lnf_b = Matrix(1, d);
  return w;
}

EncoderWeights EncoderWeights::zeros(const EncoderConfig& config) {
  const std::size_t d = config.model_dim, f = config.ffn_dim;
  EncoderWeights w;
  w.tok_emb = Matrix(config.vocab_size, d);
  w.pos_emb = Matrix(config.max_len, d);
  for (std::size_t i = 0; i < config.layers; ++i) {
    LayerWeights lw{Matrix(1, d), Matrix(1, d), Matrix(d, d), Matrix(1, d), Matrix(d, d), Matrix(1, d),
                    Matrix(d, d), Matrix(1, d), Matrix(d, d), Matrix(1, d), Matrix(1, d), Matrix(1, d),
                    Matrix(d, f), Matrix(1, f), Matrix(f, d), Matrix(1, d)};
    w.layers.push_back(std::move(lw));
  }
  w.lnf_g = Matrix(1, d);
  w.lnf_b = Matrix(1, d);
  return w;
}

EncodedDocument encode(const EncoderWeights& weights, const EncoderConfig& config, std::span<const int> ids,
                       Mode mode, std::uint64_t dropout_seed) {
  const std::size_t l = ids.size(), d = config.model_dim, nh = config.heads, dh = config.head_dim();
  if (l == 0) throw EncodingError("encode: empty token sequence");
  if (l > config.max_len) {
    throw LengthError("encode: sequence length " + std::to_string(l) + " exceeds max_len " +
                      std::to_string(config.max_len));
  }
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size) {
      throw EncodingError("encode: token id " + std::to_string(id) + " outside vocabulary");
    }
  }
  const bool drop = mode == Mode::train && config.dropout_rate > 0.0;
  std::mt19937_64 rng(dropout_seed);

  EncodedDocument enc;
  enc.ids.assign(ids.begin(), ids.end());
  enc.heads = nh;
  Matrix x(l, d);
  for (std::size_t i = 0; i < l; ++i) {
    const double* te = weights.tok_emb.row(static_cast<std::size_t>(ids[i]));
    const double* pe = weights.pos_emb.row(i);
    double* xi = x.row(i);
    for (std::size_t j = 0; j < d; ++j) xi[j] = te[j] + pe[j];
  }
  if (drop) {
    enc.drop0 = dropout_mask(l, d, config.dropout_rate, rng);
    apply_mask(x, enc.drop0);
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  enc.layers.resize(config.layers);
  for (std::size_t li = 0; li < config.layers; ++li) {
    const LayerWeights& w = weights.layers[li];
    LayerCache& c = enc.layers[li];
    c.x_in = x;
    layer_norm(x, w.ln1_g, w.ln1_b, c.h, c.ln1);
    c.q = affine(c.h, w.wq, w.bq);
    c.k = affine(c.h, w.wk, w.bk);
    c.v = affine(c.h, w.wv, w.bv);
    c.probs.resize(nh * l, l);
    c.o.resize(l, d);
    const auto& kt = kernels::active();
    for (std::size_t h = 0; h < nh; ++h) {
      double* scores = c.probs.row(h * l);
      kt.gemm_nt(l, l, dh, scale, c.q.data() + h * dh, d, c.k.data() + h * dh, d, scores, l);
      for (std::size_t i = 0; i < l; ++i) {
        double* row = scores + i * l;
        double mx = row[0];
        for (std::size_t j = 1; j < l; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < l; ++j) {
          row[j] = std::exp(row[j] - mx);
          sum += row[j];
        }
        for (std::size_t j = 0; j < l; ++j) row[j] /= sum;
      }
      kt.gemm_nn(l, dh, l, 1.0, scores, l, c.v.data() + h * dh, d, c.o.data() + h * dh, d);
    }
    Matrix att = affine(c.o, w.wo, w.bo);
    if (drop) {
      c.drop1 = dropout_mask(l, d, config.dropout_rate, rng);
      apply_mask(att, c.drop1);
    }
    c.x_mid = c.x_in;
    for (std::size_t i = 0; i < x.size(); ++i) c.x_mid.data()[i] += att.data()[i];

    layer_norm(c.x_mid, w.ln2_g, w.ln2_b, c.h2, c.ln2);
    c.u = affine(c.h2, w.w1, w.b1);
    c.g = c.u;
    for (auto& v : c.g.values()) v = gelu(v);
    Matrix f = affine(c.g, w.w2, w.b2);
    if (drop) {
      c.drop2 = dropout_mask(l, d, config.dropout_rate, rng);
      apply_mask(f, c.drop2);
    }
    x = c.x_mid;
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += f.data()[i];
  }
  layer_norm(x, weights.lnf_g, weights.lnf_b, enc.H, enc.lnf);
  return enc;
}

void encode_backward(const EncoderWeights& weights, const EncoderConfig& config, const EncodedDocument& enc,
                     const Matrix& d_hidden, const Matrix& d_attention, EncoderWeights& grads) {
  const std::size_t l = enc.length(), d = config.model_dim, nh = config.heads, dh = config.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& kt = kernels::active();

  Matrix dx(l, d);
  layer_norm_backward(d_hidden, weights.lnf_g, enc.lnf, dx, grads.lnf_g, grads.lnf_b);

  for (std::size_t li = config.layers; li-- > 0;) {
    const LayerWeights& w = weights.layers[li];
    LayerWeights& gw = grads.layers[li];
    const LayerCache& c = enc.layers[li];

    // feed-forward branch
    Matrix df = dx;
    apply_mask(df, c.drop2);
    Matrix dg(l, config.ffn_dim);
    affine_backward(c.g, w.w2, df, gw.w2, gw.b2, dg);
    for (std::size_t i = 0; i < dg.size(); ++i) dg.data()[i] *= gelu_grad(c.u.data()[i]);
    Matrix dh2(l, d);
    affine_backward(c.h2, w.w1, dg, gw.w1, gw.b1, dh2);
    Matrix dx_mid = dx;
    layer_norm_backward(dh2, w.ln2_g, c.ln2, dx_mid, gw.ln2_g, gw.ln2_b);

    // attention branch
    Matrix datt = dx_mid;
    apply_mask(datt, c.drop1);
    Matrix d_o(l, d);
    affine_backward(c.o, w.wo, datt, gw.wo, gw.bo, d_o);

    Matrix dq(l, d), dk(l, d), dv(l, d);
    Matrix dp(l, l);
    const bool last = li + 1 == config.layers;
    for (std::size_t h = 0; h < nh; ++h) {
      const double* p = c.probs.row(h * l);
      dp.set_zero();
      kt.gemm_nt(l, l, dh, 1.0, d_o.data() + h * dh, d, c.v.data() + h * dh, d, dp.data(), l);
      if (last && !d_attention.empty()) {
        for (std::size_t i = 0; i < l * l; ++i) dp.data()[i] += d_attention.row(h * l)[i];
      }
      // dV_h = P_h^T dO_h
      kt.gemm_tn(l, dh, l, 1.0, p, l, d_o.data() + h * dh, d, dv.data() + h * dh, d);
      // softmax backward, in place into dp
      for (std::size_t i = 0; i < l; ++i) {
        const double* pi = p + i * l;
        double* dpi = dp.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < l; ++j) dot += dpi[j] * pi[j];
        for (std::size_t j = 0; j < l; ++j) dpi[j] = pi[j] * (dpi[j] - dot) * scale;
      }
      kt.gemm_nn(l, dh, l, 1.0, dp.data(), l, c.k.data() + h * dh, d, dq.data() + h * dh, d);
      kt.gemm_tn(l, dh, l, 1.0, dp.data(), l, c.q.data() + h * dh, d, dk.data() + h * dh, d);
    }
    Matrix dh(l, d);
    affine_backward(c.h, w.wq, dq, gw.wq, gw.bq, dh);
    affine_backward(c.h, w.wk, dk, gw.wk, gw.bk, dh);
    affine_backward(c.h, w.wv, dv, gw.wv, gw.bv, dh);
    dx = dx_mid;
    layer_norm_backward(dh, w.ln1_g, c.ln1, dx, gw.ln1_g, gw.ln1_b);
  }

  apply_mask(dx, enc.drop0);
  for (std::size_t i = 0; i < l; ++i) {
    kernels::axpy(1.0, dx.row(i), grads.tok_emb.row(static_cast<std::size_t>(enc.ids[i])), d);
    kernels::axpy(1.0, dx.row(i), grads.pos_emb.row(i), d);
  }
}

}  // namespace relcl
