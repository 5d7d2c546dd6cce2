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

// Stacked GRU, gate layout [reset | update | candidate]:
//   r = sigmoid(Wx_r x + bx_r + Wh_r h + bh_r)
//   z = sigmoid(Wx_z x + bx_z + Wh_z h + bh_z)
//   n = tanh(Wx_n x + bx_n + r * (Wh_n h + bh_n))
//   h' = (1 - z) * n + z * h
// With attention_readout, a residual attention block runs over each
// sequence's top-layer states before the linear readout.

#include <algorithm>
#include <cmath>

#include "clpd/errors.hpp"
#include "net_impl.hpp"

namespace clpd::detail {

namespace {

// Slice indices follow make_layout: embed, then 4 per layer, then readout.
constexpr std::size_t kEmbed = 0;
inline std::size_t wx(std::size_t l) { return 1 + 4 * l; }
inline std::size_t bx(std::size_t l) { return 2 + 4 * l; }
inline std::size_t wh(std::size_t l) { return 3 + 4 * l; }
inline std::size_t bh(std::size_t l) { return 4 + 4 * l; }
inline std::size_t readout_slot(std::size_t layers) { return 1 + 4 * layers; }
inline std::size_t out_w(const StudentModel& m) {
  return readout_slot(m.config.num_layers) + (m.config.attention_readout ? kBlockSlices : 0);
}
inline std::size_t out_b(const StudentModel& m) { return out_w(m) + 1; }

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& a) {
  return 1.0 / (1.0 + (-a).exp());
}

}  // namespace

RowMat gru_forward(const StudentModel& m, const SeqBatch& batch, GruCache& cache) {
  const auto B = static_cast<Eigen::Index>(batch.batch);
  const auto T = static_cast<Eigen::Index>(batch.steps);
  const auto H = static_cast<Eigen::Index>(m.config.hidden_dim);
  const auto E = static_cast<Eigen::Index>(m.config.embed_dim);
  const std::size_t L = m.config.num_layers;

  const ConstMatMap embed = param_matrix(m, kEmbed);
  cache.x0.resize(T * B, E);
  for (Eigen::Index row = 0; row < T * B; ++row) cache.x0.row(row) = embed.row(batch.tokens[static_cast<std::size_t>(row)]);

  cache.layers.resize(L);
  const RowMat* input = &cache.x0;
  for (std::size_t l = 0; l < L; ++l) {
    GruLayerCache& c = cache.layers[l];
    const ConstMatMap Wx = param_matrix(m, wx(l));
    const ConstVecMap bxv = param_vector(m, bx(l));
    const ConstMatMap Wh = param_matrix(m, wh(l));
    const ConstVecMap bhv = param_vector(m, bh(l));

    RowMat gx(T * B, 3 * H);
    gx.noalias() = (*input) * Wx.transpose();
    gx.rowwise() += bxv.transpose();

    c.r.resize(T * B, H);
    c.z.resize(T * B, H);
    c.n.resize(T * B, H);
    c.ghn.resize(T * B, H);
    c.h.resize(T * B, H);

    RowMat hprev = RowMat::Zero(B, H);
    RowMat gh(B, 3 * H);
    for (Eigen::Index t = 0; t < T; ++t) {
      gh.noalias() = hprev * Wh.transpose();
      gh.rowwise() += bhv.transpose();
      const Eigen::Index r0 = t * B;
      auto r = c.r.middleRows(r0, B);
      auto z = c.z.middleRows(r0, B);
      auto n = c.n.middleRows(r0, B);
      auto ghn = c.ghn.middleRows(r0, B);
      r = sigmoid(gx.block(r0, 0, B, H).array() + gh.leftCols(H).array()).matrix();
      z = sigmoid(gx.block(r0, H, B, H).array() + gh.middleCols(H, H).array()).matrix();
      ghn = gh.rightCols(H);
      n = (gx.block(r0, 2 * H, B, H).array() + r.array() * ghn.array()).tanh().matrix();
      c.h.middleRows(r0, B) = ((1.0 - z.array()) * n.array() + z.array() * hprev.array()).matrix();
      hprev = c.h.middleRows(r0, B);
    }
    input = &c.h;
  }

  cache.top = *input;
  if (m.config.attention_readout) {
    cache.readout.resize(static_cast<std::size_t>(B));
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto len = static_cast<Eigen::Index>(batch.lengths[static_cast<std::size_t>(b)]);
      RowMat x(len, H);
      for (Eigen::Index t = 0; t < len; ++t) x.row(t) = input->row(t * B + b);
      const RowMat y = attn_block_forward(m, readout_slot(L), x, cache.readout[static_cast<std::size_t>(b)]);
      for (Eigen::Index t = 0; t < len; ++t) cache.top.row(t * B + b) = y.row(t);
    }
  }

  const ConstMatMap Wo = param_matrix(m, out_w(m));
  const ConstVecMap bo = param_vector(m, out_b(m));
  RowMat logits(T * B, Wo.rows());
  logits.noalias() = cache.top * Wo.transpose();
  logits.rowwise() += bo.transpose();
  return logits;
}

void gru_backward(const StudentModel& m, const SeqBatch& batch, const GruCache& cache, const RowMat& dlogits,
                  Eigen::VectorXd& grad) {
  const auto B = static_cast<Eigen::Index>(batch.batch);
  const auto T = static_cast<Eigen::Index>(batch.steps);
  const auto H = static_cast<Eigen::Index>(m.config.hidden_dim);
  const std::size_t L = m.config.num_layers;

  {
    MatMap dWo = grad_matrix(m, grad, out_w(m));
    VecMap dbo = grad_vector(m, grad, out_b(m));
    dWo.noalias() += dlogits.transpose() * cache.top;
    dbo += dlogits.colwise().sum().transpose();
  }
  RowMat dh_out = dlogits * param_matrix(m, out_w(m));
  if (m.config.attention_readout) {
    // Padding rows never feed the block, so their gradient is dropped.
    RowMat dh_in = RowMat::Zero(T * B, H);
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto len = static_cast<Eigen::Index>(batch.lengths[static_cast<std::size_t>(b)]);
      RowMat dy(len, H);
      for (Eigen::Index t = 0; t < len; ++t) dy.row(t) = dh_out.row(t * B + b);
      const RowMat dx = attn_block_backward(m, readout_slot(L), cache.readout[static_cast<std::size_t>(b)], dy, grad);
      for (Eigen::Index t = 0; t < len; ++t) dh_in.row(t * B + b) = dx.row(t);
    }
    dh_out = std::move(dh_in);
  }

  for (std::size_t li = L; li-- > 0;) {
    const GruLayerCache& c = cache.layers[li];
    const RowMat& input = li == 0 ? cache.x0 : cache.layers[li - 1].h;
    const ConstMatMap Wx = param_matrix(m, wx(li));
    const ConstMatMap Wh = param_matrix(m, wh(li));

    RowMat dgx(T * B, 3 * H);
    RowMat dgh(T * B, 3 * H);
    RowMat dh_next = RowMat::Zero(B, H);
    for (Eigen::Index t = T; t-- > 0;) {
      const Eigen::Index r0 = t * B;
      const RowArr dh = (dh_out.middleRows(r0, B) + dh_next).array();
      const auto r = c.r.middleRows(r0, B).array();
      const auto z = c.z.middleRows(r0, B).array();
      const auto n = c.n.middleRows(r0, B).array();
      const auto ghn = c.ghn.middleRows(r0, B).array();
      const RowArr hp =
          t > 0 ? RowArr(c.h.middleRows(r0 - B, B).array()) : RowArr::Zero(B, H);

      const RowArr dan = dh * (1.0 - z) * (1.0 - n * n);
      const RowArr daz = dh * (hp - n) * z * (1.0 - z);
      const RowArr dar = dan * ghn * r * (1.0 - r);

      dgx.block(r0, 0, B, H) = dar.matrix();
      dgx.block(r0, H, B, H) = daz.matrix();
      dgx.block(r0, 2 * H, B, H) = dan.matrix();
      dgh.block(r0, 0, B, H) = dar.matrix();
      dgh.block(r0, H, B, H) = daz.matrix();
      dgh.block(r0, 2 * H, B, H) = (dan * r).matrix();

      dh_next = (dh * z).matrix();
      dh_next.noalias() += dgh.middleRows(r0, B) * Wh;
    }

    MatMap dWx = grad_matrix(m, grad, wx(li));
    VecMap dbx = grad_vector(m, grad, bx(li));
    MatMap dWh = grad_matrix(m, grad, wh(li));
    VecMap dbh = grad_vector(m, grad, bh(li));
    dWx.noalias() += dgx.transpose() * input;
    dbx += dgx.colwise().sum().transpose();
    if (T > 1) dWh.noalias() += dgh.bottomRows((T - 1) * B).transpose() * c.h.topRows((T - 1) * B);
    dbh += dgh.colwise().sum().transpose();

    RowMat dx(T * B, Wx.cols());
    dx.noalias() = dgx * Wx;
    dh_out = std::move(dx);
  }

  MatMap dE = grad_matrix(m, grad, kEmbed);
  for (Eigen::Index row = 0; row < T * B; ++row) {
    dE.row(batch.tokens[static_cast<std::size_t>(row)]) += dh_out.row(row);
  }
}

std::vector<DecodeResult> gru_decode(const StudentModel& m, std::span<const TokenSeq> prompts, std::size_t max_len) {
  const auto B = static_cast<Eigen::Index>(prompts.size());
  const auto H = static_cast<Eigen::Index>(m.config.hidden_dim);
  const auto E = static_cast<Eigen::Index>(m.config.embed_dim);
  const std::size_t L = m.config.num_layers;
  const std::size_t ctx = m.config.context_len;
  const TokenId bos = Vocabulary::standard().bos();
  const TokenId eos = Vocabulary::standard().eos();

  std::vector<DecodeResult> out(prompts.size());
  std::vector<bool> done(prompts.size(), false);
  std::size_t remaining = prompts.size();
  std::size_t longest = 0;
  for (const auto& p : prompts) {
    if (p.size() + 1 > ctx) throw ConfigError("prompt does not fit the context window");
    longest = std::max(longest, p.size());
  }

  const ConstMatMap embed = param_matrix(m, kEmbed);
  const ConstMatMap Wo = param_matrix(m, out_w(m));
  const ConstVecMap bo = param_vector(m, out_b(m));
  std::vector<RowMat> state(L, RowMat::Zero(B, H));
  std::vector<TokenId> next_input(prompts.size(), bos);
  RowMat x(B, E);
  RowMat gh, gx;

  // Attention readout: keys and values of every position read so far.
  const bool readout = m.config.attention_readout;
  const std::size_t rs = readout_slot(L);
  const std::size_t steps_cap = longest + 1 + max_len;
  std::vector<RowMat> keys, values;
  if (readout) {
    keys.assign(prompts.size(), RowMat(static_cast<Eigen::Index>(std::min(steps_cap, ctx)), H));
    values.assign(prompts.size(), RowMat(static_cast<Eigen::Index>(std::min(steps_cap, ctx)), H));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(H));

  for (std::size_t t = 0; remaining > 0 && t < steps_cap; ++t) {
    for (Eigen::Index b = 0; b < B; ++b) x.row(b) = embed.row(next_input[static_cast<std::size_t>(b)]);
    RowMat* in = &x;
    for (std::size_t l = 0; l < L; ++l) {
      const ConstMatMap Wx = param_matrix(m, wx(l));
      const ConstVecMap bxv = param_vector(m, bx(l));
      const ConstMatMap Wh = param_matrix(m, wh(l));
      const ConstVecMap bhv = param_vector(m, bh(l));
      gx.noalias() = (*in) * Wx.transpose();
      gx.rowwise() += bxv.transpose();
      gh.noalias() = state[l] * Wh.transpose();
      gh.rowwise() += bhv.transpose();
      const RowArr r = sigmoid(gx.leftCols(H).array() + gh.leftCols(H).array());
      const RowArr z = sigmoid(gx.middleCols(H, H).array() + gh.middleCols(H, H).array());
      const RowArr n = (gx.rightCols(H).array() + r * gh.rightCols(H).array()).tanh();
      state[l] = ((1.0 - z) * n + z * state[l].array()).matrix();
      in = &state[l];
    }
    RowMat top = *in;
    if (readout) {
      const RowMat q = (*in) * param_matrix(m, rs + 0).transpose();
      const RowMat k = (*in) * param_matrix(m, rs + 1).transpose();
      const RowMat v = (*in) * param_matrix(m, rs + 2).transpose();
      RowMat o = RowMat::Zero(B, H);
      const auto len = static_cast<Eigen::Index>(t + 1);
      for (Eigen::Index b = 0; b < B; ++b) {
        if (done[static_cast<std::size_t>(b)]) continue;
        RowMat& K = keys[static_cast<std::size_t>(b)];
        RowMat& V = values[static_cast<std::size_t>(b)];
        K.row(len - 1) = k.row(b);
        V.row(len - 1) = v.row(b);
        const Eigen::VectorXd s = K.topRows(len) * q.row(b).transpose() * scale;
        const Eigen::ArrayXd e = (s.array() - s.maxCoeff()).exp();
        o.row(b) = (e / e.sum()).matrix().transpose() * V.topRows(len);
      }
      RowMat y = *in;
      y.noalias() += o * param_matrix(m, rs + 3).transpose();
      RowMat u = y * param_matrix(m, rs + 4).transpose();
      u.rowwise() += param_vector(m, rs + 5).transpose();
      top = y;
      top.noalias() += u.cwiseMax(0.0) * param_matrix(m, rs + 6).transpose();
      top.rowwise() += param_vector(m, rs + 7).transpose();
    }
    RowMat logits = top * Wo.transpose();
    logits.rowwise() += bo.transpose();

    for (std::size_t b = 0; b < prompts.size(); ++b) {
      if (done[b]) continue;
      const std::size_t plen = prompts[b].size();
      if (t < plen) {
        next_input[b] = prompts[b][t];
        continue;
      }
      Eigen::Index best = 0;
      logits.row(static_cast<Eigen::Index>(b)).maxCoeff(&best);
      const auto tok = static_cast<TokenId>(best);
      if (tok == eos) {
        done[b] = true;
        --remaining;
        continue;
      }
      out[b].tokens.push_back(tok);
      // The next step would read position t + 1; it must stay inside the window.
      if (out[b].tokens.size() >= max_len || t + 2 > ctx) {
        out[b].truncated = true;
        done[b] = true;
        --remaining;
        continue;
      }
      next_input[b] = tok;
    }
  }
  return out;
}

}  // namespace clpd::detail
