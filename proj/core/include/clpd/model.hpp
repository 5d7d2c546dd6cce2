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

// The tiny next-token model used as student and as checkpoint teacher.
//
// Two architectures share one flat parameter vector layout scheme:
//   gated-recurrent  embedding -> num_layers GRU layers -> optional causal
//                    attention block over the GRU states -> linear readout
//   small-attention  token + position embedding -> num_layers blocks of
//                    single-head causal attention and a ReLU MLP, both
//                    residual -> linear readout
// All arithmetic is double precision. Gradients are computed by hand and
// are exact; see tests/unit/model_test.cpp for the finite-difference check.

#ifndef CLPD_MODEL_HPP_
#define CLPD_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "clpd/dataset.hpp"
#include "clpd/distill_sample.hpp"

namespace clpd {

enum class Arch { kGatedRecurrent, kSmallAttention };
std::string_view to_string(Arch arch);
Arch parse_arch(std::string_view name);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 1;
  std::size_t context_len = 192;
  Arch arch = Arch::kGatedRecurrent;
  // gated-recurrent only: one residual attention + MLP block (width
  // hidden_dim) between the top GRU layer and the readout.
  bool attention_readout = false;

  void validate() const;  // throws ConfigError
  bool operator==(const ModelConfig&) const = default;
};

struct ParamSlice {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
  bool operator==(const ParamSlice&) const = default;
};

std::vector<ParamSlice> make_layout(const ModelConfig& cfg);

struct StudentModel {
  ModelConfig config;
  std::vector<ParamSlice> layout;
  Eigen::VectorXd params;

  std::size_t num_params() const { return static_cast<std::size_t>(params.size()); }
  const ParamSlice& slice(std::string_view name) const;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per slice; bitwise reproducible.
StudentModel init_model(const ModelConfig& cfg, std::uint64_t seed);

// Next-token logits, one row per input position (tokens.size() x vocab).
Eigen::MatrixXd forward_logits(const StudentModel& model, std::span<const TokenId> tokens);

// One supervised sequence: the model reads <bos> + prompt + response and is
// scored on the response tokens only.
struct TrainItem {
  std::span<const TokenId> prompt;
  std::span<const TokenId> response;
  // Required for LossKind::kForwardKl: one distribution per response token.
  const std::vector<std::vector<double>>* distributions = nullptr;
};

enum class LossKind { kSeqKd, kForwardKl };
std::string_view to_string(LossKind kind);
LossKind parse_loss(std::string_view name);

// Mean over items of the per-item mean per-token loss (nats). When grad is
// non-null it is resized and receives the exact gradient.
double batch_loss(const StudentModel& model, std::span<const TrainItem> items, LossKind kind,
                  Eigen::VectorXd* grad);

// Per-item mean response NLL (teacher forcing, no gradient).
std::vector<double> per_item_nll(const StudentModel& model, std::span<const TrainItem> items);

struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// Mean response-token NLL of the teacher's output under the model.
LossResult seqkd_loss(const StudentModel& model, const DistillSample& sample, std::span<const TokenId> prompt);
// Mean per-position KL(p_teacher || p_student) over the response.
LossResult skd_kld_loss(const StudentModel& model, const DistillSample& sample, std::span<const TokenId> prompt);

enum class OptimMethod { kSgdMomentum, kAdam };
std::string_view to_string(OptimMethod method);
OptimMethod parse_optim(std::string_view name);

struct OptimConfig {
  OptimMethod method = OptimMethod::kSgdMomentum;
  double lr = 3e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double clip = 1.0;  // global-norm threshold; <= 0 disables clipping
};

struct OptimState {
  OptimMethod method = OptimMethod::kSgdMomentum;
  double lr = 3e-3;
  std::size_t step_count = 0;
  Eigen::VectorXd m;  // momentum / first moment
  Eigen::VectorXd v;  // second moment (adam only)
  OptimConfig config;

  static OptimState create(const OptimConfig& cfg, std::size_t num_params);
};

// Clips grad to global norm `clip` (if clip > 0), applies the configured rule
// and returns the norm of the gradient that was actually applied.
double apply_update(StudentModel& model, OptimState& state, const Eigen::VectorXd& grad, double clip);

struct DecodeResult {
  TokenSeq tokens;  // response without the terminating <eos>
  bool truncated = false;
};

DecodeResult greedy_decode(const StudentModel& model, std::span<const TokenId> prompt, std::size_t max_len);
std::vector<DecodeResult> greedy_decode_batch(const StudentModel& model, std::span<const TokenSeq> prompts,
                                              std::size_t max_len);

// Fraction of examples whose decoded final numeric answer equals the reference.
double exact_match_accuracy(const StudentModel& model, const Dataset& d, std::size_t max_len);
double exact_match_accuracy(const StudentModel& model, const Dataset& d, std::span<const std::size_t> indices,
                            std::size_t max_len);

// Little-endian binary checkpoint: magic, JSON header with config and layout,
// parameter count, raw doubles.
void save_checkpoint(const StudentModel& model, const std::filesystem::path& path);
StudentModel load_checkpoint(const std::filesystem::path& path);

}  // namespace clpd

#endif  // CLPD_MODEL_HPP_
