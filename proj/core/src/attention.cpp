// Copyright 2026 The CLPD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Small causal transformer without normalization layers:
//   x0 = E[tok] + P[pos]
//   y  = x + softmax_causal(x Wq^T (x Wk^T)^T / sqrt(d)) (x Wv^T) Wo^T
//   x' = y + relu(y W1^T + b1) W2^T + b2

#include <cmath>

#include "net_impl.hpp"

namespace clpd::detail {

namespace {

constexpr std::size_t kEmbed = 0;
constexpr std::size_t kPos = 1;
inline std::size_t block_slot(std::size_t layer) { return 2 + kBlockSlices * layer; }
enum : std::size_t { kWq = 0, kWk, kWv, kWo, kW1, kB1, kW2, kB2 };
inline std::size_t out_w(std::size_t layers) { return 2 + kBlockSlices * layers; }
inline std::size_t out_b(std::size_t layers) { return 3 + kBlockSlices * layers; }

}  // namespace

RowMat attn_block_forward(const StudentModel& m, std::size_t s0, const RowMat& x, AttnLayerCache& c) {
  const Eigen::Index T = x.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.cols()));
  c.x = x;
  c.q.noalias() = x * param_matrix(m, s0 + kWq).transpose();
  c.k.noalias() = x * param_matrix(m, s0 + kWk).transpose();
  c.v.noalias() = x * param_matrix(m, s0 + kWv).transpose();
  RowMat s(T, T);
  s.noalias() = c.q * c.k.transpose();
  c.a = RowMat::Zero(T, T);
  for (Eigen::Index i = 0; i < T; ++i) {
    auto row = s.row(i).head(i + 1).array() * scale;
    const double mx = row.maxCoeff();
    const Eigen::ArrayXd e = (row - mx).exp().transpose();
    c.a.row(i).head(i + 1) = (e / e.sum()).matrix().transpose();
  }
  c.o.noalias() = c.a * c.v;
  c.y = x;
  c.y.noalias() += c.o * param_matrix(m, s0 + kWo).transpose();
  c.u.noalias() = c.y * param_matrix(m, s0 + kW1).transpose();
  c.u.rowwise() += param_vector(m, s0 + kB1).transpose();
  const RowMat relu = c.u.cwiseMax(0.0);
  RowMat out = c.y;
  out.noalias() += relu * param_matrix(m, s0 + kW2).transpose();
  out.rowwise() += param_vector(m, s0 + kB2).transpose();
  return out;
}

RowMat attn_block_backward(const StudentModel& m, std::size_t s0, const AttnLayerCache& c, const RowMat& dout,
                           Eigen::VectorXd& grad) {
  const Eigen::Index T = c.x.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(c.x.cols()));
  // MLP branch.
  const RowMat relu = c.u.cwiseMax(0.0);
  grad_matrix(m, grad, s0 + kW2).noalias() += dout.transpose() * relu;
  grad_vector(m, grad, s0 + kB2) += dout.colwise().sum().transpose();
  RowMat du = dout * param_matrix(m, s0 + kW2);
  du = (c.u.array() > 0.0).select(du, 0.0);
  grad_matrix(m, grad, s0 + kW1).noalias() += du.transpose() * c.y;
  grad_vector(m, grad, s0 + kB1) += du.colwise().sum().transpose();
  RowMat dy = dout;
  dy.noalias() += du * param_matrix(m, s0 + kW1);

  // Attention branch.
  grad_matrix(m, grad, s0 + kWo).noalias() += dy.transpose() * c.o;
  RowMat d_o = dy * param_matrix(m, s0 + kWo);
  RowMat da = d_o * c.v.transpose();
  RowMat dv = c.a.transpose() * d_o;
  RowMat ds = RowMat::Zero(T, T);
  for (Eigen::Index i = 0; i < T; ++i) {
    const auto a = c.a.row(i).head(i + 1).array();
    const auto g = da.row(i).head(i + 1).array();
    const double dot = (a * g).sum();
    ds.row(i).head(i + 1) = (a * (g - dot) * scale).matrix();
  }
  RowMat dq = ds * c.k;
  RowMat dk = ds.transpose() * c.q;
  grad_matrix(m, grad, s0 + kWq).noalias() += dq.transpose() * c.x;
  grad_matrix(m, grad, s0 + kWk).noalias() += dk.transpose() * c.x;
  grad_matrix(m, grad, s0 + kWv).noalias() += dv.transpose() * c.x;

  RowMat dx = dy;
  dx.noalias() += dq * param_matrix(m, s0 + kWq);
  dx.noalias() += dk * param_matrix(m, s0 + kWk);
  dx.noalias() += dv * param_matrix(m, s0 + kWv);
  return dx;
}

RowMat attn_forward(const StudentModel& m, std::span<const TokenId> tokens, AttnCache& cache) {
  const auto T = static_cast<Eigen::Index>(tokens.size());
  const auto D = static_cast<Eigen::Index>(m.config.embed_dim);
  const std::size_t L = m.config.num_layers;

  cache.tokens.assign(tokens.begin(), tokens.end());
  cache.layers.resize(L);
  const ConstMatMap embed = param_matrix(m, kEmbed);
  const ConstMatMap pos = param_matrix(m, kPos);
  RowMat x(T, D);
  for (Eigen::Index t = 0; t < T; ++t) x.row(t) = embed.row(tokens[static_cast<std::size_t>(t)]) + pos.row(t);
  for (std::size_t l = 0; l < L; ++l) x = attn_block_forward(m, block_slot(l), x, cache.layers[l]);
  cache.x_final = x;
  RowMat logits(T, static_cast<Eigen::Index>(m.config.vocab_size));
  logits.noalias() = x * param_matrix(m, out_w(L)).transpose();
  logits.rowwise() += param_vector(m, out_b(L)).transpose();
  return logits;
}

void attn_backward(const StudentModel& m, const AttnCache& cache, const RowMat& dlogits, Eigen::VectorXd& grad) {
  const auto T = static_cast<Eigen::Index>(cache.tokens.size());
  const std::size_t L = m.config.num_layers;

  grad_matrix(m, grad, out_w(L)).noalias() += dlogits.transpose() * cache.x_final;
  grad_vector(m, grad, out_b(L)) += dlogits.colwise().sum().transpose();
  RowMat dx = dlogits * param_matrix(m, out_w(L));
  for (std::size_t li = L; li-- > 0;) dx = attn_block_backward(m, block_slot(li), cache.layers[li], dx, grad);

  MatMap dE = grad_matrix(m, grad, kEmbed);
  MatMap dP = grad_matrix(m, grad, kPos);
  for (Eigen::Index t = 0; t < T; ++t) {
    dE.row(cache.tokens[static_cast<std::size_t>(t)]) += dx.row(t);
    dP.row(t) += dx.row(t);
  }
}

}  // namespace clpd::detail
