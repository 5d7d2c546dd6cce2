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

#include "clpd/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "clpd/errors.hpp"
#include "clpd/rng.hpp"
#include "net_impl.hpp"

namespace clpd {

using detail::RowMat;

namespace {

// Sequences scored per forward pass when no gradient is needed.
constexpr std::size_t kScoreChunk = 32;

void add_slice(std::vector<ParamSlice>& layout, std::string name, std::size_t rows, std::size_t cols) {
  const std::size_t offset = layout.empty() ? 0 : layout.back().offset + layout.back().size();
  layout.push_back(ParamSlice{std::move(name), offset, rows, cols});
}

// Attention + MLP block of width d with an MLP of width f.
void add_block(std::vector<ParamSlice>& layout, const std::string& p, std::size_t d, std::size_t f) {
  add_slice(layout, p + ".wq", d, d);
  add_slice(layout, p + ".wk", d, d);
  add_slice(layout, p + ".wv", d, d);
  add_slice(layout, p + ".wo", d, d);
  add_slice(layout, p + ".w1", f, d);
  add_slice(layout, p + ".b1", f, 1);
  add_slice(layout, p + ".w2", d, f);
  add_slice(layout, p + ".b2", d, 1);
}

// Fan-in used for the init bound of each slice; biases share their weight's.
std::size_t fan_in(const ParamSlice& s, const ModelConfig& cfg) {
  if (s.name == "embed" || s.name == "pos") return 1;
  if (s.cols > 1) return s.cols;
  if (s.name == "out.b") return cfg.arch == Arch::kGatedRecurrent ? cfg.hidden_dim : cfg.embed_dim;
  if (s.name.ends_with(".b_x")) return s.name.starts_with("gru0") ? cfg.embed_dim : cfg.hidden_dim;
  if (s.name.ends_with(".b_h")) return cfg.hidden_dim;
  if (s.name.ends_with(".b1")) return s.name.starts_with("readout") ? cfg.hidden_dim : cfg.embed_dim;
  return cfg.hidden_dim;  // .b2
}

struct PreparedItem {
  TokenSeq input;         // <bos> + prompt + response[:-1]
  std::size_t first = 0;  // first supervised input position
  std::size_t count = 0;  // number of supervised positions
  std::span<const TokenId> response;
  const std::vector<std::vector<double>>* distributions = nullptr;
};

PreparedItem prepare(const StudentModel& model, const TrainItem& item, LossKind kind) {
  if (item.response.empty()) throw ConfigError("response must be non-empty");
  PreparedItem p;
  p.input.reserve(item.prompt.size() + item.response.size());
  p.input.push_back(Vocabulary::standard().bos());
  p.input.insert(p.input.end(), item.prompt.begin(), item.prompt.end());
  p.input.insert(p.input.end(), item.response.begin(), item.response.end() - 1);
  if (p.input.size() > model.config.context_len) {
    throw ConfigError("sequence of length " + std::to_string(p.input.size()) + " exceeds context_len " +
                      std::to_string(model.config.context_len));
  }
  for (TokenId t : p.input) {
    if (t < 0 || static_cast<std::size_t>(t) >= model.config.vocab_size) throw ConfigError("token outside vocabulary");
  }
  for (TokenId t : item.response) {
    if (t < 0 || static_cast<std::size_t>(t) >= model.config.vocab_size) throw ConfigError("token outside vocabulary");
  }
  p.first = item.prompt.size();
  p.count = item.response.size();
  p.response = item.response;
  if (kind == LossKind::kForwardKl) {
    if (item.distributions == nullptr) {
      throw ConfigError("forward-KL loss needs teacher token distributions; use the seqkd loss for this teacher");
    }
    if (item.distributions->size() != item.response.size()) {
      throw ConfigError("one teacher distribution per response token is required");
    }
    for (const auto& dist : *item.distributions) {
      if (dist.size() != model.config.vocab_size) throw ConfigError("teacher distribution has wrong vocabulary size");
    }
    p.distributions = item.distributions;
  }
  return p;
}

// Loss of one logit row; writes weight * dloss/dlogits into drow if non-null.
template <typename Row, typename DRow>
double row_loss(const Row& logits, TokenId target, const std::vector<double>* dist, double weight, DRow* drow) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  double loss;
  if (dist == nullptr) {
    loss = lse - logits(target);
  } else {
    loss = 0.0;
    for (Eigen::Index v = 0; v < logits.size(); ++v) {
      const double pt = (*dist)[static_cast<std::size_t>(v)];
      if (pt > 0.0) loss += pt * (std::log(pt) - (logits(v) - lse));
    }
  }
  if (drow != nullptr) {
    *drow = ((logits.array() - lse).exp() * weight).matrix();
    if (dist == nullptr) {
      (*drow)(target) -= weight;
    } else {
      for (Eigen::Index v = 0; v < logits.size(); ++v) (*drow)(v) -= weight * (*dist)[static_cast<std::size_t>(v)];
    }
  }
  return loss;
}

// Per-item mean losses; accumulates the gradient of sum_b item_weight * mean_b.
std::vector<double> run_items(const StudentModel& model, std::span<const PreparedItem> items, double item_weight,
                              Eigen::VectorXd* grad) {
  std::vector<double> means(items.size(), 0.0);
  if (items.empty()) return means;
  const auto V = static_cast<Eigen::Index>(model.config.vocab_size);

  if (model.config.arch == Arch::kGatedRecurrent) {
    detail::SeqBatch batch;
    batch.batch = items.size();
    for (const auto& it : items) batch.steps = std::max(batch.steps, it.input.size());
    batch.tokens.assign(batch.steps * batch.batch, Vocabulary::standard().pad());
    batch.lengths.resize(items.size());
    for (std::size_t b = 0; b < items.size(); ++b) {
      batch.lengths[b] = items[b].input.size();
      for (std::size_t t = 0; t < items[b].input.size(); ++t) batch.tokens[t * batch.batch + b] = items[b].input[t];
    }
    detail::GruCache cache;
    RowMat logits = detail::gru_forward(model, batch, cache);
    RowMat dlogits;
    if (grad != nullptr) dlogits = RowMat::Zero(logits.rows(), V);
    for (std::size_t b = 0; b < items.size(); ++b) {
      const PreparedItem& it = items[b];
      const double w = item_weight / static_cast<double>(it.count);
      double sum = 0.0;
      for (std::size_t j = 0; j < it.count; ++j) {
        const auto row = static_cast<Eigen::Index>((it.first + j) * batch.batch + b);
        const std::vector<double>* dist = it.distributions ? &(*it.distributions)[j] : nullptr;
        if (grad != nullptr) {
          auto drow = dlogits.row(row);
          sum += row_loss(logits.row(row), it.response[j], dist, w, &drow);
        } else {
          sum += row_loss(logits.row(row), it.response[j], dist, w, static_cast<decltype(dlogits.row(0))*>(nullptr));
        }
      }
      means[b] = sum / static_cast<double>(it.count);
    }
    if (grad != nullptr) detail::gru_backward(model, batch, cache, dlogits, *grad);
    return means;
  }

  for (std::size_t b = 0; b < items.size(); ++b) {
    const PreparedItem& it = items[b];
    detail::AttnCache cache;
    RowMat logits = detail::attn_forward(model, it.input, cache);
    RowMat dlogits;
    if (grad != nullptr) dlogits = RowMat::Zero(logits.rows(), V);
    const double w = item_weight / static_cast<double>(it.count);
    double sum = 0.0;
    for (std::size_t j = 0; j < it.count; ++j) {
      const auto row = static_cast<Eigen::Index>(it.first + j);
      const std::vector<double>* dist = it.distributions ? &(*it.distributions)[j] : nullptr;
      if (grad != nullptr) {
        auto drow = dlogits.row(row);
        sum += row_loss(logits.row(row), it.response[j], dist, w, &drow);
      } else {
        sum += row_loss(logits.row(row), it.response[j], dist, w, static_cast<decltype(dlogits.row(0))*>(nullptr));
      }
    }
    means[b] = sum / static_cast<double>(it.count);
    if (grad != nullptr) detail::attn_backward(model, cache, dlogits, *grad);
  }
  return means;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw ParseError("truncated checkpoint", 0);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

constexpr char kMagic[8] = {'C', 'L', 'P', 'D', 'C', 'K', 'P', '1'};

}  // namespace

std::string_view to_string(Arch arch) {
  return arch == Arch::kGatedRecurrent ? "gated-recurrent" : "small-attention";
}

Arch parse_arch(std::string_view name) {
  if (name == "gated-recurrent") return Arch::kGatedRecurrent;
  if (name == "small-attention") return Arch::kSmallAttention;
  throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) { return kind == LossKind::kSeqKd ? "seqkd" : "skd_kld"; }

LossKind parse_loss(std::string_view name) {
  if (name == "seqkd") return LossKind::kSeqKd;
  if (name == "skd_kld") return LossKind::kForwardKl;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(OptimMethod method) {
  return method == OptimMethod::kSgdMomentum ? "sgd-momentum" : "adam-style";
}

OptimMethod parse_optim(std::string_view name) {
  if (name == "sgd-momentum") return OptimMethod::kSgdMomentum;
  if (name == "adam-style" || name == "adam") return OptimMethod::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (vocab_size < 1 || embed_dim < 1 || hidden_dim < 1 || num_layers < 1 || context_len < 1) {
    throw ConfigError("model dimensions must all be >= 1");
  }
  if (attention_readout && arch != Arch::kGatedRecurrent) {
    throw ConfigError("attention_readout applies to the gated-recurrent architecture only");
  }
  if (vocab_size < 3) throw ConfigError("vocab_size must cover <pad>, <bos>, <eos>");
}

std::vector<ParamSlice> make_layout(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamSlice> layout;
  const std::size_t V = cfg.vocab_size, E = cfg.embed_dim, H = cfg.hidden_dim;
  if (cfg.arch == Arch::kGatedRecurrent) {
    add_slice(layout, "embed", V, E);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
      const std::string p = "gru" + std::to_string(l);
      add_slice(layout, p + ".w_x", 3 * H, l == 0 ? E : H);
      add_slice(layout, p + ".b_x", 3 * H, 1);
      add_slice(layout, p + ".w_h", 3 * H, H);
      add_slice(layout, p + ".b_h", 3 * H, 1);
    }
    if (cfg.attention_readout) add_block(layout, "readout", H, H);
    add_slice(layout, "out.w", V, H);
  } else {
    add_slice(layout, "embed", V, E);
    add_slice(layout, "pos", cfg.context_len, E);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) add_block(layout, "blk" + std::to_string(l), E, H);
    add_slice(layout, "out.w", V, E);
  }
  add_slice(layout, "out.b", V, 1);
  return layout;
}

const ParamSlice& StudentModel::slice(std::string_view name) const {
  for (const auto& s : layout) {
    if (s.name == name) return s;
  }
  throw ConfigError("no parameter slice named '" + std::string(name) + "'");
}

StudentModel init_model(const ModelConfig& cfg, std::uint64_t seed) {
  StudentModel m;
  m.config = cfg;
  m.layout = make_layout(cfg);
  m.params.resize(static_cast<Eigen::Index>(m.layout.back().offset + m.layout.back().size()));
  Rng rng(derive_seed({seed, tag_hash("init")}));
  for (const ParamSlice& s : m.layout) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(s, cfg)));
    for (std::size_t i = 0; i < s.size(); ++i) {
      m.params[static_cast<Eigen::Index>(s.offset + i)] = (2.0 * uniform01(rng) - 1.0) * bound;
    }
  }
  return m;
}

Eigen::MatrixXd forward_logits(const StudentModel& model, std::span<const TokenId> tokens) {
  if (tokens.size() > model.config.context_len) {
    throw ConfigError("input of length " + std::to_string(tokens.size()) + " exceeds context_len " +
                      std::to_string(model.config.context_len));
  }
  for (TokenId t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= model.config.vocab_size) throw ConfigError("token outside vocabulary");
  }
  if (tokens.empty()) return Eigen::MatrixXd(0, static_cast<Eigen::Index>(model.config.vocab_size));
  if (model.config.arch == Arch::kGatedRecurrent) {
    detail::SeqBatch batch;
    batch.batch = 1;
    batch.steps = tokens.size();
    batch.tokens.assign(tokens.begin(), tokens.end());
    batch.lengths = {tokens.size()};
    detail::GruCache cache;
    return detail::gru_forward(model, batch, cache);
  }
  detail::AttnCache cache;
  return detail::attn_forward(model, tokens, cache);
}

double batch_loss(const StudentModel& model, std::span<const TrainItem> items, LossKind kind,
                  Eigen::VectorXd* grad) {
  if (grad != nullptr) grad->setZero(model.params.size());
  if (items.empty()) return 0.0;
  std::vector<PreparedItem> prepared;
  prepared.reserve(items.size());
  for (const auto& it : items) prepared.push_back(prepare(model, it, kind));
  const double w = 1.0 / static_cast<double>(items.size());
  const std::vector<double> means = run_items(model, prepared, w, grad);
  double total = 0.0;
  for (double m : means) total += m;
  return total * w;
}

std::vector<double> per_item_nll(const StudentModel& model, std::span<const TrainItem> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (std::size_t start = 0; start < items.size(); start += kScoreChunk) {
    const std::size_t end = std::min(items.size(), start + kScoreChunk);
    std::vector<PreparedItem> prepared;
    for (std::size_t i = start; i < end; ++i) prepared.push_back(prepare(model, items[i], LossKind::kSeqKd));
    const auto means = run_items(model, prepared, 1.0, nullptr);
    out.insert(out.end(), means.begin(), means.end());
  }
  return out;
}

LossResult seqkd_loss(const StudentModel& model, const DistillSample& sample, std::span<const TokenId> prompt) {
  const TrainItem item{prompt, sample.output_tokens, nullptr};
  LossResult r;
  r.loss = batch_loss(model, std::span<const TrainItem>(&item, 1), LossKind::kSeqKd, &r.grad);
  return r;
}

LossResult skd_kld_loss(const StudentModel& model, const DistillSample& sample, std::span<const TokenId> prompt) {
  if (!sample.token_distributions) {
    throw ConfigError("sample from teacher '" + sample.teacher_id +
                      "' carries no token distributions; use the seqkd loss instead");
  }
  const TrainItem item{prompt, sample.output_tokens, &*sample.token_distributions};
  LossResult r;
  r.loss = batch_loss(model, std::span<const TrainItem>(&item, 1), LossKind::kForwardKl, &r.grad);
  return r;
}

OptimState OptimState::create(const OptimConfig& cfg, std::size_t num_params) {
  if (!(cfg.lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  OptimState s;
  s.method = cfg.method;
  s.lr = cfg.lr;
  s.config = cfg;
  s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_params));
  if (cfg.method == OptimMethod::kAdam) s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_params));
  return s;
}

double apply_update(StudentModel& model, OptimState& state, const Eigen::VectorXd& grad, double clip) {
  if (grad.size() != model.params.size() || state.m.size() != model.params.size()) {
    throw ConfigError("gradient / optimizer buffers do not match the parameter vector");
  }
  if (!grad.allFinite()) {
    Eigen::Index bad = 0;
    for (; bad < grad.size(); ++bad) {
      if (!std::isfinite(grad[bad])) break;
    }
    std::string where = "parameter " + std::to_string(bad);
    for (const auto& s : model.layout) {
      if (static_cast<std::size_t>(bad) >= s.offset && static_cast<std::size_t>(bad) < s.offset + s.size()) {
        where = s.name + "[" + std::to_string(static_cast<std::size_t>(bad) - s.offset) + "]";
      }
    }
    throw RuntimeFailure("non-finite gradient at " + where + " (step " + std::to_string(state.step_count) + ")");
  }
  const double norm = grad.norm();
  double scale = 1.0;
  if (clip > 0.0 && norm > clip) scale = clip / norm;
  const OptimConfig& c = state.config;
  ++state.step_count;
  if (state.method == OptimMethod::kSgdMomentum) {
    state.m = c.momentum * state.m + scale * grad;
    model.params -= state.lr * state.m;
  } else {
    if (state.v.size() != model.params.size()) state.v = Eigen::VectorXd::Zero(model.params.size());
    state.m = c.beta1 * state.m + (1.0 - c.beta1) * scale * grad;
    state.v = c.beta2 * state.v + (1.0 - c.beta2) * (scale * grad).cwiseAbs2();
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    const Eigen::ArrayXd step = (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + c.eps);
    model.params.array() -= state.lr * (step + c.weight_decay * model.params.array());
  }
  return norm * scale;
}

std::vector<DecodeResult> greedy_decode_batch(const StudentModel& model, std::span<const TokenSeq> prompts,
                                              std::size_t max_len) {
  if (model.config.arch == Arch::kGatedRecurrent) return detail::gru_decode(model, prompts, max_len);
  const TokenId bos = Vocabulary::standard().bos();
  const TokenId eos = Vocabulary::standard().eos();
  std::vector<DecodeResult> out;
  out.reserve(prompts.size());
  for (const TokenSeq& prompt : prompts) {
    if (prompt.size() + 1 > model.config.context_len) throw ConfigError("prompt does not fit the context window");
    TokenSeq seq;
    seq.push_back(bos);
    seq.insert(seq.end(), prompt.begin(), prompt.end());
    DecodeResult r;
    for (;;) {
      detail::AttnCache cache;
      const RowMat logits = detail::attn_forward(model, seq, cache);
      Eigen::Index best = 0;
      logits.row(logits.rows() - 1).maxCoeff(&best);
      const auto tok = static_cast<TokenId>(best);
      if (tok == eos) break;
      r.tokens.push_back(tok);
      if (r.tokens.size() >= max_len || seq.size() + 1 > model.config.context_len) {
        r.truncated = true;
        break;
      }
      seq.push_back(tok);
    }
    out.push_back(std::move(r));
  }
  return out;
}

DecodeResult greedy_decode(const StudentModel& model, std::span<const TokenId> prompt, std::size_t max_len) {
  const TokenSeq p(prompt.begin(), prompt.end());
  return greedy_decode_batch(model, std::span<const TokenSeq>(&p, 1), max_len).front();
}

double exact_match_accuracy(const StudentModel& model, const Dataset& d, std::span<const std::size_t> indices,
                            std::size_t max_len) {
  if (indices.empty()) return 0.0;
  constexpr std::size_t kDecodeChunk = 64;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < indices.size(); start += kDecodeChunk) {
    const std::size_t end = std::min(indices.size(), start + kDecodeChunk);
    std::vector<TokenSeq> prompts;
    for (std::size_t i = start; i < end; ++i) prompts.push_back(d.examples.at(indices[i]).prompt);
    const auto decoded = greedy_decode_batch(model, prompts, max_len);
    for (std::size_t i = start; i < end; ++i) {
      const auto answer = parse_final_answer(decoded[i - start].tokens, d.vocab);
      if (answer && *answer == d.examples[indices[i]].answer) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

double exact_match_accuracy(const StudentModel& model, const Dataset& d, std::size_t max_len) {
  std::vector<std::size_t> all(d.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return exact_match_accuracy(model, d, all, max_len);
}

void save_checkpoint(const StudentModel& model, const std::filesystem::path& path) {
  nlohmann::ordered_json header;
  header["arch"] = std::string(to_string(model.config.arch));
  header["vocab_size"] = model.config.vocab_size;
  header["embed_dim"] = model.config.embed_dim;
  header["hidden_dim"] = model.config.hidden_dim;
  header["num_layers"] = model.config.num_layers;
  header["context_len"] = model.config.context_len;
  header["attention_readout"] = model.config.attention_readout;
  auto& layout = header["layout"] = nlohmann::ordered_json::array();
  for (const auto& s : model.layout) {
    layout.push_back({{"name", s.name}, {"offset", s.offset}, {"rows", s.rows}, {"cols", s.cols}});
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_u64(out, static_cast<std::uint64_t>(model.params.size()));
  for (Eigen::Index i = 0; i < model.params.size(); ++i) write_u64(out, std::bit_cast<std::uint64_t>(model.params[i]));
  if (!out) throw RuntimeFailure("write failed for checkpoint " + path.string());
}

StudentModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw ParseError("not a clpd checkpoint: " + path.string(), 0);
  const std::uint64_t header_len = read_u64(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ParseError("truncated checkpoint header", 0);
  StudentModel m;
  try {
    const auto header = nlohmann::json::parse(text);
    m.config.arch = parse_arch(header.at("arch").get<std::string>());
    m.config.vocab_size = header.at("vocab_size").get<std::size_t>();
    m.config.embed_dim = header.at("embed_dim").get<std::size_t>();
    m.config.hidden_dim = header.at("hidden_dim").get<std::size_t>();
    m.config.num_layers = header.at("num_layers").get<std::size_t>();
    m.config.context_len = header.at("context_len").get<std::size_t>();
    m.config.attention_readout = header.value("attention_readout", false);
    for (const auto& s : header.at("layout")) {
      m.layout.push_back(ParamSlice{s.at("name").get<std::string>(), s.at("offset").get<std::size_t>(),
                                    s.at("rows").get<std::size_t>(), s.at("cols").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), 0);
  }
  if (m.layout != make_layout(m.config)) throw InvariantError("checkpoint layout does not match its config");
  const std::uint64_t count = read_u64(in);
  const std::size_t expected = m.layout.back().offset + m.layout.back().size();
  if (count != expected) throw InvariantError("checkpoint parameter count does not match its layout");
  m.params.resize(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) m.params[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(read_u64(in));
  if (!m.params.allFinite()) throw InvariantError("checkpoint contains non-finite parameters");
  return m;
}

}  // namespace clpd
