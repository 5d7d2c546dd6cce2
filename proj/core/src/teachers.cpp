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


#include "clpd/teachers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "clpd/errors.hpp"
#include "clpd/hash.hpp"

namespace clpd {

namespace {

struct ParsedStep {
  std::string op;  // "plus", "minus" or "times"
  std::int64_t operand = 0;
};

std::int64_t apply(const std::string& op, std::int64_t a, std::int64_t b) {
  if (op == "plus") return a + b;
  if (op == "minus") return a - b;
  return a * b;
}

// Start value and operations of an example's CoT.
std::pair<std::int64_t, std::vector<ParsedStep>> parse_chain(const Example& e) {
  if (!e.cot || e.cot->empty()) {
    throw ConfigError("oracle teachers need the CoT of example " + std::to_string(e.id));
  }
  std::int64_t start = 0;
  std::vector<ParsedStep> steps;
  for (std::size_t s = 0; s < e.cot->size(); ++s) {
    std::istringstream in((*e.cot)[s]);
    std::string a, op, b, eq, c;
    in >> a >> op >> b >> eq >> c;
    if (c.empty() || eq != "=" || (op != "plus" && op != "minus" && op != "times")) {
      throw InvariantError("malformed CoT step in example " + std::to_string(e.id));
    }
    if (s == 0) start = std::stoll(a);
    steps.push_back({op, std::stoll(b)});
  }
  return {start, steps};
}

std::vector<double> softmax_row(const Eigen::RowVectorXd& logits) {
  const double mx = logits.maxCoeff();
  std::vector<double> p(static_cast<std::size_t>(logits.size()));
  double sum = 0.0;
  for (Eigen::Index v = 0; v < logits.size(); ++v) {
    p[static_cast<std::size_t>(v)] = std::exp(logits(v) - mx);
    sum += p[static_cast<std::size_t>(v)];
  }
  for (double& x : p) x /= sum;
  return p;
}

}  // namespace

void CompetenceProfile::validate() const {
  for (const auto& [steps, acc] : accuracy_by_steps) {
    if (steps < 1) throw ConfigError("accuracy_by_steps keys must be >= 1");
    if (!(acc >= 0.0 && acc <= 1.0)) throw ConfigError("accuracy_by_steps values must lie in [0, 1]");
  }
  if (verbosity < 0) throw ConfigError("verbosity must be >= 0");
  if (!(style_noise >= 0.0 && style_noise <= 1.0)) throw ConfigError("style_noise must lie in [0, 1]");
}

std::string_view to_string(TeacherKind kind) { return kind == TeacherKind::kOracle ? "oracle" : "checkpoint"; }

Teacher Teacher::oracle(std::string id, CompetenceProfile profile) {
  Teacher t;
  t.id = std::move(id);
  t.kind = TeacherKind::kOracle;
  t.profile = std::move(profile);
  t.validate();
  return t;
}

Teacher Teacher::checkpoint(std::string id, StudentModel model, bool exposes_distribution, std::size_t max_len) {
  Teacher t;
  t.id = std::move(id);
  t.kind = TeacherKind::kCheckpoint;
  t.model = std::make_shared<const StudentModel>(std::move(model));
  t.exposes_distribution = exposes_distribution;
  t.max_len = max_len;
  t.validate();
  return t;
}

void Teacher::validate() const {
  if (id.empty()) throw ConfigError("teacher id must be non-empty");
  if (kind == TeacherKind::kOracle) {
    if (!profile || model) throw ConfigError("oracle teacher '" + id + "' needs a profile and no model");
    profile->validate();
  } else {
    if (profile || !model) throw ConfigError("checkpoint teacher '" + id + "' needs a model and no profile");
    if (max_len < 1) throw ConfigError("checkpoint teacher '" + id + "' needs max_len >= 1");
  }
}

std::string Teacher::definition_hash() const {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["kind"] = std::string(to_string(kind));
  if (profile) {
    nlohmann::ordered_json acc = nlohmann::ordered_json::object();
    for (const auto& [k, v] : profile->accuracy_by_steps) acc[std::to_string(k)] = v;
    j["accuracy_by_steps"] = acc;
    j["verbosity"] = profile->verbosity;
    j["style_noise"] = profile->style_noise;
  }
  if (model) {
    const auto* bytes = reinterpret_cast<const char*>(model->params.data());
    j["params"] = sha256_hex(std::string_view(bytes, model->num_params() * sizeof(double)));
    j["arch"] = std::string(to_string(model->config.arch));
    j["dims"] = {model->config.vocab_size, model->config.embed_dim, model->config.hidden_dim,
                 model->config.num_layers, model->config.context_len};
    j["exposes_distribution"] = exposes_distribution;
    j["max_len"] = max_len;
  }
  return sha256_hex(j.dump());
}

std::vector<std::string> TeacherPool::ids() const {
  std::vector<std::string> out;
  for (const auto& t : teachers) out.push_back(t.id);
  return out;
}

DistillSample oracle_generate(const Teacher& t, const Example& e, const RngStream& stream, const Vocabulary& vocab) {
  if (t.kind != TeacherKind::kOracle || !t.profile) throw ConfigError("teacher '" + t.id + "' is not an oracle");
  const CompetenceProfile& prof = *t.profile;
  const auto [start, steps] = parse_chain(e);
  const int k = static_cast<int>(steps.size());
  const auto acc = prof.accuracy_by_steps.find(k);
  if (acc == prof.accuracy_by_steps.end()) {
    throw ProfileCoverageError("teacher '" + t.id + "' has no accuracy for step_count " + std::to_string(k));
  }

  Rng correct_rng = stream.child("correct").engine();
  const bool correct = uniform01(correct_rng) < acc->second;
  std::int64_t wrong_step = -1;
  std::int64_t delta = 0;
  if (!correct) {
    Rng perturb = stream.child("perturb").engine();
    wrong_step = uniform_int(perturb, 0, k - 1);
    delta = uniform_int(perturb, 1, 3);
    if (uniform01(perturb) < 0.5) delta = -delta;
  }

  Rng filler_rng = stream.child("filler").engine();
  TokenSeq cot_tokens;
  std::int64_t value = start;
  for (int s = 0; s < k; ++s) {
    const std::int64_t a = value;
    std::int64_t c = apply(steps[static_cast<std::size_t>(s)].op, a, steps[static_cast<std::size_t>(s)].operand);
    if (s == wrong_step) c += delta;
    value = c;
    // Word groups of the step; numbers span several tokens and stay intact.
    std::vector<TokenSeq> words = {number_tokens(a, vocab), {vocab.id(steps[static_cast<std::size_t>(s)].op)},
                                   number_tokens(steps[static_cast<std::size_t>(s)].operand, vocab),
                                   {vocab.id("=")}, number_tokens(c, vocab)};
    std::vector<std::vector<TokenId>> before(words.size() + 1);
    for (int f = 0; f < prof.verbosity; ++f) {
      const auto slot = static_cast<std::size_t>(uniform_int(filler_rng, 0, static_cast<std::int64_t>(words.size())));
      const auto which = static_cast<std::size_t>(uniform_int(filler_rng, 0, kFillerWords.size() - 1));
      before[slot].push_back(vocab.id(kFillerWords[which]));
    }
    for (std::size_t w = 0; w <= words.size(); ++w) {
      cot_tokens.insert(cot_tokens.end(), before[w].begin(), before[w].end());
      if (w < words.size()) cot_tokens.insert(cot_tokens.end(), words[w].begin(), words[w].end());
    }
    cot_tokens.push_back(vocab.id(";"));
  }

  // One draw per CoT token whatever the noise level, so levels stay paired.
  Rng noise_rng = stream.child("noise").engine();
  for (TokenId& tok : cot_tokens) {
    const double u = uniform01(noise_rng);
    if (u >= prof.style_noise) continue;
    for (const auto& [canonical, synonym] : kSynonyms) {
      if (vocab.token(tok) == canonical) {
        tok = vocab.id(synonym);
        break;
      }
    }
  }

  DistillSample out;
  out.example_id = e.id;
  out.teacher_id = t.id;
  out.output_tokens = std::move(cot_tokens);
  out.output_tokens.push_back(vocab.id("answer"));
  const TokenSeq ans = number_tokens(value, vocab);
  out.output_tokens.insert(out.output_tokens.end(), ans.begin(), ans.end());
  out.output_tokens.push_back(vocab.eos());
  return out;
}

DistillSample checkpoint_generate(const Teacher& t, const Example& e) {
  if (t.kind != TeacherKind::kCheckpoint || !t.model) throw ConfigError("teacher '" + t.id + "' is not a checkpoint");
  const StudentModel& m = *t.model;
  const DecodeResult dec = greedy_decode(m, e.prompt, t.max_len);
  DistillSample out;
  out.example_id = e.id;
  out.teacher_id = t.id;
  out.output_tokens = dec.tokens;
  out.output_tokens.push_back(Vocabulary::standard().eos());
  out.truncated = dec.truncated;
  if (t.exposes_distribution) {
    TokenSeq input;
    input.push_back(Vocabulary::standard().bos());
    input.insert(input.end(), e.prompt.begin(), e.prompt.end());
    input.insert(input.end(), out.output_tokens.begin(), out.output_tokens.end() - 1);
    const Eigen::MatrixXd logits = forward_logits(m, input);
    std::vector<std::vector<double>> dists;
    dists.reserve(out.output_tokens.size());
    for (std::size_t j = 0; j < out.output_tokens.size(); ++j) {
      dists.push_back(softmax_row(logits.row(static_cast<Eigen::Index>(e.prompt.size() + j))));
    }
    out.token_distributions = std::move(dists);
  }
  return out;
}

DistillSample teacher_generate(const Teacher& t, const Example& e, const RngStream& stream) {
  if (t.kind == TeacherKind::kOracle) return oracle_generate(t, e, stream.child(static_cast<std::uint64_t>(e.id)));
  return checkpoint_generate(t, e);
}

double evaluate_teacher(const Teacher& t, const Dataset& val, std::span<const std::size_t> indices,
                        const RngStream& stream) {
  if (indices.empty()) throw ConfigError("teacher evaluation needs a non-empty validation set");
  std::size_t correct = 0;
  for (std::size_t i : indices) {
    const Example& e = val.examples.at(i);
    const DistillSample s = teacher_generate(t, e, stream);
    const auto answer = parse_final_answer(s.output_tokens, val.vocab);
    if (answer && *answer == e.answer) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

double evaluate_teacher(const Teacher& t, const Dataset& val, const RngStream& stream) {
  std::vector<std::size_t> all(val.size());
  std::iota(all.begin(), all.end(), 0);
  return evaluate_teacher(t, val, all, stream);
}

TeacherPool filter_and_order(const std::vector<Teacher>& candidates, const std::vector<double>& perf, double tau) {
  if (candidates.empty()) throw ConfigError("no candidate teachers");
  if (perf.size() != candidates.size()) throw ConfigError("one perf value per candidate is required");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (perf[i] >= tau) keep.push_back(i);
  }
  if (keep.empty()) {
    std::ostringstream msg;
    msg << "no viable teacher at tau=" << tau << " (best perf ";
    msg << *std::max_element(perf.begin(), perf.end()) << ")";
    throw NoViableTeacher(msg.str());
  }
  std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) { return perf[a] < perf[b]; });
  TeacherPool pool;
  pool.tau = tau;
  for (std::size_t i : keep) {
    pool.teachers.push_back(candidates[i]);
    pool.perf.push_back(perf[i]);
  }
  return pool;
}

TeacherPool filter_and_order(const std::vector<Teacher>& candidates, double tau, const Dataset& val,
                             const RngStream& stream) {
  std::vector<double> perf;
  perf.reserve(candidates.size());
  for (const Teacher& t : candidates) perf.push_back(evaluate_teacher(t, val, stream.child(t.id)));
  return filter_and_order(candidates, perf, tau);
}

AlignmentResult alignment_nll(const StudentModel& s, std::span<const DistillSample> samples, const Dataset& d) {
  if (samples.empty()) throw ConfigError("alignment needs at least one sample");
  if (s.config.vocab_size != d.vocab.size()) throw ConfigError("student and dataset vocabularies differ");
  const auto index = index_by_id(d);
  std::vector<TrainItem> items;
  AlignmentResult r;
  for (const DistillSample& sample : samples) {
    if (sample.output_tokens.empty()) {
      ++r.skipped;
      continue;
    }
    const auto it = index.find(sample.example_id);
    if (it == index.end()) throw ConfigError("sample for unknown example " + std::to_string(sample.example_id));
    items.push_back({d.examples[it->second].prompt, sample.output_tokens, nullptr});
  }
  if (items.empty()) throw ConfigError("every alignment sample was empty");
  const std::vector<double> nll = per_item_nll(s, items);
  double sum = 0.0;
  for (double x : nll) sum += x;
  r.used = items.size();
  r.mean_nll = sum / static_cast<double>(items.size());
  return r;
}

const DistillSample& Corpus::at(std::int64_t example_id) const {
  // Samples are stored in dataset order, which is ascending id.
  auto it = std::lower_bound(samples.begin(), samples.end(), example_id,
                             [](const DistillSample& s, std::int64_t id) { return s.example_id < id; });
  if (it == samples.end() || it->example_id != example_id) {
    throw MissingArtifact("corpus of teacher '" + teacher_id + "' has no sample for example " +
                          std::to_string(example_id));
  }
  return *it;
}

Corpus generate_corpus(const Teacher& t, const Dataset& d, std::uint64_t seed) {
  const RngStream stream(derive_seed({seed, tag_hash("corpus"), tag_hash(t.id)}));
  Corpus c;
  c.teacher_id = t.id;
  c.samples.reserve(d.size());
  for (const Example& e : d.examples) c.samples.push_back(teacher_generate(t, e, stream));
  std::stable_sort(c.samples.begin(), c.samples.end(),
                   [](const DistillSample& a, const DistillSample& b) { return a.example_id < b.example_id; });
  return c;
}

void write_corpus(std::ostream& out, const Corpus& c, const Vocabulary& vocab) {
  for (const DistillSample& s : c.samples) {
    nlohmann::ordered_json j;
    j["example_id"] = s.example_id;
    j["teacher_id"] = s.teacher_id;
    auto& toks = j["output_tokens"] = nlohmann::ordered_json::array();
    for (TokenId t : s.output_tokens) toks.push_back(vocab.token(t));
    j["truncated"] = s.truncated;
    if (s.token_distributions) j["distributions"] = *s.token_distributions;
    out << j.dump() << '\n';
  }
}

Corpus read_corpus(std::istream& in, const Vocabulary& vocab) {
  Corpus c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    DistillSample s;
    try {
      const auto j = nlohmann::json::parse(line);
      s.example_id = j.at("example_id").get<std::int64_t>();
      s.teacher_id = j.at("teacher_id").get<std::string>();
      for (const auto& tok : j.at("output_tokens")) s.output_tokens.push_back(vocab.id(tok.get<std::string>()));
      s.truncated = j.at("truncated").get<bool>();
      if (auto it = j.find("distributions"); it != j.end()) {
        s.token_distributions = it->get<std::vector<std::vector<double>>>();
      }
    } catch (const nlohmann::json::exception& err) {
      throw ParseError(std::string("bad corpus record: ") + err.what(), lineno);
    } catch (const ParseError& err) {
      throw ParseError(err.what(), lineno);
    }
    if (s.output_tokens.empty() || s.output_tokens.back() != vocab.eos()) {
      throw InvariantError("line " + std::to_string(lineno) + ": corpus output does not end with <eos>");
    }
    if (c.samples.empty()) c.teacher_id = s.teacher_id;
    if (s.teacher_id != c.teacher_id) throw InvariantError("line " + std::to_string(lineno) + ": mixed teacher ids");
    if (!c.samples.empty() && c.samples.back().example_id >= s.example_id) {
      throw InvariantError("line " + std::to_string(lineno) + ": corpus not sorted by example id");
    }
    c.samples.push_back(std::move(s));
  }
  return c;
}

std::string corpus_cache_name(const Teacher& t, const std::string& dataset_hash, std::uint64_t seed) {
  return t.id + "-" + short_hash(t.definition_hash()) + "-" + short_hash(dataset_hash) + "-s" + std::to_string(seed) +
         ".jsonl";
}

}  // namespace clpd
