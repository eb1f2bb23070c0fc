#include <algorithm>
#include <cmath>

#include "relcl/encoder.hpp"
#include "relcl/error.hpp"
#include "relcl/kernels.hpp"

namespace relcl {

std::vector<double> entity_embedding(const std::vector<std::span<const double>>& mention_states) {
  if (mention_states.empty()) throw ArgumentError("entity_embedding: no mention states");
  const std::size_t d = mention_states.front().size();
  std::vector<double> out(d);
  for (std::size_t j = 0; j < d; ++j) {
    double mx = mention_states[0][j];
    for (const auto& s : mention_states) mx = std::max(mx, s[j]);
    double sum = 0.0;
    for (const auto& s : mention_states) sum += std::exp(s[j] - mx);
    out[j] = mx + std::log(sum);
  }
  return out;
}

namespace {

// Mean of the last-layer attention rows at `markers`, per head: heads x l.
Matrix entity_attention(const EncodedDocument& enc, std::span<const std::size_t> markers) {
  const std::size_t l = enc.length();
  Matrix out(enc.heads, l);
  const double w = 1.0 / static_cast<double>(markers.size());
  for (std::size_t h = 0; h < enc.heads; ++h) {
    for (std::size_t p : markers) kernels::axpy(w, enc.attention_row(h, p), out.row(h), l);
  }
  return out;
}

std::vector<std::span<const double>> rows_at(const Matrix& m, std::span<const std::size_t> idx) {
  std::vector<std::span<const double>> out;
  for (std::size_t i : idx) out.push_back(m.row_span(i));
  return out;
}

// Adds dL/dH at the mention positions for a LogSumExp-pooled entity.
void entity_embedding_backward(const Matrix& hidden, std::span<const std::size_t> markers,
                               std::span<const double> pooled, std::span<const double> d_pooled,
                               Matrix& d_hidden) {
  for (std::size_t p : markers) {
    const double* hp = hidden.row(p);
    double* dp = d_hidden.row(p);
    for (std::size_t j = 0; j < pooled.size(); ++j) dp[j] += d_pooled[j] * std::exp(hp[j] - pooled[j]);
  }
}

}  // namespace

LocalizedContext localized_context(const EncodedDocument& enc, std::span<const std::size_t> subject_markers,
                                   std::span<const std::size_t> object_markers) {
  if (subject_markers.empty() || object_markers.empty()) {
    throw ArgumentError("localized_context: both entities need at least one mention");
  }
  const std::size_t l = enc.length(), d = enc.H.cols();
  const Matrix as = entity_attention(enc, subject_markers);
  const Matrix ao = entity_attention(enc, object_markers);
  LocalizedContext out;
  out.q.assign(l, 0.0);
  for (std::size_t h = 0; h < enc.heads; ++h) {
    for (std::size_t t = 0; t < l; ++t) out.q[t] += as(h, t) * ao(h, t);
  }
  for (double v : out.q) out.q_sum += v;
  out.a.assign(l, 0.0);
  if (out.q_sum > 0.0) {
    for (std::size_t t = 0; t < l; ++t) out.a[t] = out.q[t] / (out.q_sum + kContextEpsilon);
  } else {
    out.uniform_fallback = true;
    std::fill(out.a.begin(), out.a.end(), 1.0 / static_cast<double>(l));
  }
  out.c.assign(d, 0.0);
  for (std::size_t t = 0; t < l; ++t) kernels::axpy(out.a[t], enc.H.row(t), out.c.data(), d);
  return out;
}

std::vector<double> pair_embedding(const Matrix& w_linear, std::span<const double> h_s,
                                   std::span<const double> h_o, std::span<const double> c) {
  const std::size_t d = w_linear.cols();
  if (w_linear.rows() != 3 * d || h_s.size() != d || h_o.size() != d || c.size() != d) {
    throw ArgumentError("pair_embedding: expected three vectors of dimension " + std::to_string(d) +
                        " and a 3d x d projection");
  }
  std::vector<double> z(d, 0.0);
  const std::span<const double> parts[3] = {h_s, h_o, c};
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t i = 0; i < d; ++i) kernels::axpy(parts[b][i], w_linear.row(b * d + i), z.data(), d);
  }
  return z;
}

PairForward pair_forward(const Matrix& w_linear, const EncodedDocument& enc,
                         std::span<const std::size_t> subject_markers, std::span<const std::size_t> object_markers) {
  PairForward f;
  f.subject_markers.assign(subject_markers.begin(), subject_markers.end());
  f.object_markers.assign(object_markers.begin(), object_markers.end());
  f.h_s = entity_embedding(rows_at(enc.H, subject_markers));
  f.h_o = entity_embedding(rows_at(enc.H, object_markers));
  f.context = localized_context(enc, subject_markers, object_markers);
  f.z = pair_embedding(w_linear, f.h_s, f.h_o, f.context.c);
  return f;
}

void pair_backward(const Matrix& w_linear, const EncodedDocument& enc, const PairForward& fwd,
                   std::span<const double> dz, Matrix& d_hidden, Matrix& d_attention, Matrix& d_w_linear) {
  const std::size_t d = w_linear.cols(), l = enc.length();
  // z = W^T x, x = [h_s; h_o; c]
  std::vector<double> x;
  x.reserve(3 * d);
  x.insert(x.end(), fwd.h_s.begin(), fwd.h_s.end());
  x.insert(x.end(), fwd.h_o.begin(), fwd.h_o.end());
  x.insert(x.end(), fwd.context.c.begin(), fwd.context.c.end());
  std::vector<double> dx(3 * d);
  for (std::size_t i = 0; i < 3 * d; ++i) {
    kernels::axpy(x[i], dz.data(), d_w_linear.row(i), d);
    dx[i] = kernels::dot(w_linear.row(i), dz.data(), d);
  }
  const std::span<const double> dhs(dx.data(), d), dho(dx.data() + d, d), dc(dx.data() + 2 * d, d);

  entity_embedding_backward(enc.H, fwd.subject_markers, fwd.h_s, dhs, d_hidden);
  entity_embedding_backward(enc.H, fwd.object_markers, fwd.h_o, dho, d_hidden);

  // c = H^T a
  const LocalizedContext& ctx = fwd.context;
  std::vector<double> da(l);
  for (std::size_t t = 0; t < l; ++t) {
    kernels::axpy(ctx.a[t], dc.data(), d_hidden.row(t), d);
    da[t] = kernels::dot(enc.H.row(t), dc.data(), d);
  }
  if (ctx.uniform_fallback || d_attention.empty()) return;

  // a = q / (sum q + eps)
  const double denom = ctx.q_sum + kContextEpsilon;
  double da_dot_q = 0.0;
  for (std::size_t t = 0; t < l; ++t) da_dot_q += da[t] * ctx.q[t];
  std::vector<double> dq(l);
  for (std::size_t t = 0; t < l; ++t) dq[t] = da[t] / denom - da_dot_q / (denom * denom);

  const Matrix as = entity_attention(enc, fwd.subject_markers);
  const Matrix ao = entity_attention(enc, fwd.object_markers);
  const double ws = 1.0 / static_cast<double>(fwd.subject_markers.size());
  const double wo = 1.0 / static_cast<double>(fwd.object_markers.size());
  std::vector<double> g(l);
  for (std::size_t h = 0; h < enc.heads; ++h) {
    for (std::size_t t = 0; t < l; ++t) g[t] = dq[t] * ao(h, t) * ws;
    for (std::size_t p : fwd.subject_markers) kernels::axpy(1.0, g.data(), d_attention.row(h * l + p), l);
    for (std::size_t t = 0; t < l; ++t) g[t] = dq[t] * as(h, t) * wo;
    for (std::size_t p : fwd.object_markers) kernels::axpy(1.0, g.data(), d_attention.row(h * l + p), l);
  }
}

Matrix mlm_forward(const EncodedDocument& enc, std::span<const std::size_t> positions, const Matrix& w_mlm,
                   const Matrix& b_mlm) {
  const std::size_t d = enc.H.cols();
  Matrix states(positions.size(), d);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] >= enc.length()) throw ArgumentError("mlm_forward: mask position out of range");
    std::copy(enc.H.row(positions[i]), enc.H.row(positions[i]) + d, states.row(i));
  }
  Matrix logits(positions.size(), w_mlm.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) std::copy(b_mlm.data(), b_mlm.data() + b_mlm.cols(), logits.row(i));
  if (!positions.empty()) kernels::matmul_acc(states, w_mlm, logits);
  return logits;
}

void mlm_backward(const EncodedDocument& enc, std::span<const std::size_t> positions, const Matrix& w_mlm,
                  const Matrix& d_logits, Matrix& d_hidden, Matrix& d_w_mlm, Matrix& d_b_mlm) {
  const std::size_t d = enc.H.cols(), v = w_mlm.cols();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double* dl = d_logits.row(i);
    const double* h = enc.H.row(positions[i]);
    kernels::axpy(1.0, dl, d_b_mlm.data(), v);
    for (std::size_t j = 0; j < d; ++j) kernels::axpy(h[j], dl, d_w_mlm.row(j), v);
    double* dh = d_hidden.row(positions[i]);
    for (std::size_t j = 0; j < d; ++j) dh[j] += kernels::dot(w_mlm.row(j), dl, v);
  }
}

}  // namespace relcl
