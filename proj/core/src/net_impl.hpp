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

// Architecture kernels behind model.cpp. Not installed.

#ifndef CLPD_SRC_NET_IMPL_HPP_
#define CLPD_SRC_NET_IMPL_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "clpd/model.hpp"

namespace clpd::detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowArr = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
using MatMap = Eigen::Map<RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

inline ConstMatMap param_matrix(const StudentModel& m, std::size_t slice) {
  const ParamSlice& s = m.layout[slice];
  return ConstMatMap(m.params.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
}
inline ConstVecMap param_vector(const StudentModel& m, std::size_t slice) {
  const ParamSlice& s = m.layout[slice];
  return ConstVecMap(m.params.data() + s.offset, static_cast<Eigen::Index>(s.size()));
}
inline MatMap grad_matrix(const StudentModel& m, Eigen::VectorXd& g, std::size_t slice) {
  const ParamSlice& s = m.layout[slice];
  return MatMap(g.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
}
inline VecMap grad_vector(const StudentModel& m, Eigen::VectorXd& g, std::size_t slice) {
  const ParamSlice& s = m.layout[slice];
  return VecMap(g.data() + s.offset, static_cast<Eigen::Index>(s.size()));
}

// Time-major batch of input sequences: row t*B + b holds sequence b at time t.
// Positions past a sequence's length carry <pad> and never receive loss.
struct SeqBatch {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<TokenId> tokens;
  std::vector<std::size_t> lengths;
};

struct GruLayerCache {
  RowMat r, z, n, ghn, h;
};

struct AttnLayerCache {
  RowMat x, q, k, v, a, o, y, u;
};

struct GruCache {
  RowMat x0;
  std::vector<GruLayerCache> layers;
  std::vector<AttnLayerCache> readout;  // per sequence, attention readout only
  RowMat top;                           // input of the linear readout
};

// Returns logits (steps*batch x vocab), time-major.
RowMat gru_forward(const StudentModel& m, const SeqBatch& batch, GruCache& cache);
// Accumulates parameter gradients for the given logit gradients.
void gru_backward(const StudentModel& m, const SeqBatch& batch, const GruCache& cache, const RowMat& dlogits,
                  Eigen::VectorXd& grad);
std::vector<DecodeResult> gru_decode(const StudentModel& m, std::span<const TokenSeq> prompts, std::size_t max_len);

struct AttnCache {
  std::vector<TokenId> tokens;
  std::vector<AttnLayerCache> layers;
  RowMat x_final;
};

// Single sequence; returns logits (tokens.size() x vocab).
RowMat attn_forward(const StudentModel& m, std::span<const TokenId> tokens, AttnCache& cache);
void attn_backward(const StudentModel& m, const AttnCache& cache, const RowMat& dlogits, Eigen::VectorXd& grad);

// One residual block (causal single-head attention, then ReLU MLP) whose
// eight slices start at first_slot, in the order wq wk wv wo w1 b1 w2 b2.
inline constexpr std::size_t kBlockSlices = 8;
RowMat attn_block_forward(const StudentModel& m, std::size_t first_slot, const RowMat& x, AttnLayerCache& c);
// Accumulates the block's parameter gradients and returns the input gradient.
RowMat attn_block_backward(const StudentModel& m, std::size_t first_slot, const AttnLayerCache& c, const RowMat& dout,
                           Eigen::VectorXd& grad);

}  // namespace clpd::detail

#endif  // CLPD_SRC_NET_IMPL_HPP_
