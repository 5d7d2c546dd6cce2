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

// Teachers: programmatic oracles with controllable competence and style, and
// frozen model checkpoints decoded greedily. Also pool admission, corpus
// generation and caching, and the alignment metric.

#ifndef CLPD_TEACHERS_HPP_
#define CLPD_TEACHERS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clpd/dataset.hpp"
#include "clpd/distill_sample.hpp"
#include "clpd/model.hpp"
#include "clpd/rng.hpp"

namespace clpd {

struct CompetenceProfile {
  std::map<int, double> accuracy_by_steps;
  int verbosity = 0;         // filler words inserted into each CoT step
  double style_noise = 0.0;  // per-token synonym substitution probability

  void validate() const;  // throws ConfigError
  bool operator==(const CompetenceProfile&) const = default;
};

enum class TeacherKind { kOracle, kCheckpoint };
std::string_view to_string(TeacherKind kind);

struct Teacher {
  std::string id;
  TeacherKind kind = TeacherKind::kOracle;
  std::optional<CompetenceProfile> profile;              // oracle only
  std::shared_ptr<const StudentModel> model;             // checkpoint only
  bool exposes_distribution = false;                     // checkpoint only
  std::size_t max_len = 96;                              // checkpoint decode cap

  static Teacher oracle(std::string id, CompetenceProfile profile);
  static Teacher checkpoint(std::string id, StudentModel model, bool exposes_distribution, std::size_t max_len);

  void validate() const;
  // Hash of everything that determines this teacher's outputs.
  std::string definition_hash() const;
};

struct TeacherPool {
  std::vector<Teacher> teachers;  // weakest to strongest
  std::vector<double> perf;       // parallel to teachers
  double tau = 0.0;

  std::size_t size() const { return teachers.size(); }
  std::vector<std::string> ids() const;
};

// Oracle response to an example. All randomness comes from `stream`; its
// sub-streams fix correctness, the perturbation, filler placement and the
// per-token noise draws separately, so changing one knob keeps the others'
// draws paired.
DistillSample oracle_generate(const Teacher& t, const Example& e, const RngStream& stream,
                              const Vocabulary& vocab = Vocabulary::standard());

// Greedy decode of a checkpoint teacher, <eos> appended; distributions
// attached when the teacher exposes them.
DistillSample checkpoint_generate(const Teacher& t, const Example& e);

// Either kind; oracle draws use stream.child(example id).
DistillSample teacher_generate(const Teacher& t, const Example& e, const RngStream& stream);

// Exact-match accuracy of the teacher's final answers on the given examples.
double evaluate_teacher(const Teacher& t, const Dataset& val, std::span<const std::size_t> indices,
                        const RngStream& stream);
double evaluate_teacher(const Teacher& t, const Dataset& val, const RngStream& stream);

// Keeps teachers with perf >= tau, sorted ascending by perf (ties keep list
// order). Throws NoViableTeacher when nothing survives.
TeacherPool filter_and_order(const std::vector<Teacher>& candidates, double tau, const Dataset& val,
                             const RngStream& stream);
// Same law over precomputed perf values.
TeacherPool filter_and_order(const std::vector<Teacher>& candidates, const std::vector<double>& perf, double tau);

struct AlignmentResult {
  double mean_nll = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;  // samples with no tokens
};

// Mean over samples of the student's mean per-token NLL on output_tokens,
// teacher-forced after each sample's prompt.
AlignmentResult alignment_nll(const StudentModel& s, std::span<const DistillSample> samples, const Dataset& d);

// All responses of one teacher on one dataset, keyed by example id.
struct Corpus {
  std::string teacher_id;
  std::vector<DistillSample> samples;  // dataset order

  const DistillSample& at(std::int64_t example_id) const;
};

Corpus generate_corpus(const Teacher& t, const Dataset& d, std::uint64_t seed);

// JSON lines {example_id, teacher_id, output_tokens, truncated, distributions?};
// output_tokens are written as token strings.
void write_corpus(std::ostream& out, const Corpus& c, const Vocabulary& vocab);
Corpus read_corpus(std::istream& in, const Vocabulary& vocab);

// File name that encodes teacher id, teacher definition, dataset hash and seed.
std::string corpus_cache_name(const Teacher& t, const std::string& dataset_hash, std::uint64_t seed);

}  // namespace clpd

#endif  // CLPD_TEACHERS_HPP_
