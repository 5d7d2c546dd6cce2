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

// Staged distillation: split the ordered data into contiguous segments, bind
// one teacher to each, and train the student segment by segment. Baselines
// and ablations are different (data order, teacher list) plans fed to the
// same loop.

#ifndef CLPD_SCHEDULER_HPP_
#define CLPD_SCHEDULER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clpd/dataset.hpp"
#include "clpd/difficulty.hpp"
#include "clpd/model.hpp"
#include "clpd/teachers.hpp"

namespace clpd {

enum class Variant { kVanilla, kClOnly, kPdOnly, kClpd, kClpdRt, kClpdRd };
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
// vanilla and cl_only train on one fixed teacher.
bool is_single_teacher(Variant v);

struct SegmentPlan {
  std::vector<std::size_t> boundaries;  // m + 1 positions, 0 first, N last
  std::vector<std::string> teacher_ids;
  std::vector<double> fractions;

  std::size_t num_segments() const { return teacher_ids.size(); }
  std::size_t begin(std::size_t k) const { return boundaries[k]; }
  std::size_t end(std::size_t k) const { return boundaries[k + 1]; }
  bool operator==(const SegmentPlan&) const = default;
};

// Boundaries round(N * cumulative fraction), then nudged so every segment is
// non-empty. Uniform fractions when none are given.
SegmentPlan make_segments(std::size_t n, const std::vector<std::string>& teacher_ids,
                          const std::optional<std::vector<double>>& fractions = std::nullopt);
SegmentPlan make_segments(const Curriculum& c, const TeacherPool& pool,
                          const std::optional<std::vector<double>>& fractions = std::nullopt);

// Throws InvariantError unless the plan is contiguous, covering and non-empty.
void check_segments(const SegmentPlan& plan, std::size_t n);

struct RunConfig {
  Variant variant = Variant::kClpd;
  Estimator estimator = Estimator::kCotSteps;
  LossKind loss = LossKind::kSeqKd;
  std::size_t epochs = 3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double tau = 0.8;
  std::optional<std::vector<double>> fractions;
  bool dynamic_rerank = false;
  std::optional<std::string> fixed_teacher_id;
  // When false, vanilla and pd_only walk the curriculum instead of a shuffle.
  bool shuffle = true;
  OptimConfig optim;
  std::size_t decode_max_len = 96;
  // Validation examples decoded after every stage; 0 skips stage evaluation.
  std::size_t stage_eval_examples = 100;

  // Throws ConfigError when the variant cannot run on a pool of this size.
  void validate(std::size_t pool_size) const;
};

struct VariantPlan {
  std::vector<std::size_t> order;  // dataset indices in visiting order
  SegmentPlan segments;
};

VariantPlan plan_variant(const RunConfig& cfg, const Curriculum& c, const TeacherPool& pool);

struct StageRecord {
  std::size_t epoch = 0;
  std::size_t segment = 0;
  std::string teacher_id;
  double mean_loss = 0.0;
  double accuracy = 0.0;  // on the stage-evaluation slice; NaN when skipped
};

struct RunResult {
  RunConfig config;
  double final_accuracy = 0.0;
  std::vector<StageRecord> per_stage;
  std::vector<std::pair<std::string, double>> alignment;  // teacher id, final student NLL
  double wall_seconds = 0.0;
};

// Everything a run reads. All pointers are borrowed and read-only.
struct RunInputs {
  const Dataset* train = nullptr;
  const Dataset* validation = nullptr;
  const Dataset* test = nullptr;
  const Curriculum* curriculum = nullptr;  // over train
  const TeacherPool* pool = nullptr;
  std::map<std::string, const Corpus*> corpora;  // teacher id -> train-split corpus
  const StudentModel* base_student = nullptr;
  // Train examples scored for the alignment columns of RunResult.
  std::size_t alignment_examples = 200;
};

// Callback invoked after each parameter update with (epoch, segment, model).
using StepHook = std::function<void(std::size_t, std::size_t, const StudentModel&)>;

RunResult run_distillation(const RunConfig& cfg, const RunInputs& in, StudentModel* final_model = nullptr,
                           const StepHook& hook = nullptr);

// Trains `model` on the given train indices in order, with samples from one
// corpus, for `epochs` passes. Returns the mean loss of the last pass.
double train_on_indices(StudentModel& model, OptimState& optim, const Dataset& train,
                        const std::vector<std::size_t>& indices, const Corpus& corpus, LossKind loss,
                        std::size_t batch_size, double clip);

// Fresh student plus `steps` supervised updates on reference responses of
// `warm`, cycling through it in order.
StudentModel make_base_student(const ModelConfig& cfg, std::uint64_t seed, const Dataset& warm, std::size_t steps,
                               std::size_t batch_size, const OptimConfig& optim);

// One row of the competence / alignment grid.
struct CompetenceRow {
  std::string teacher_id;
  std::string split;  // "easy" or "hard"
  double teacher_accuracy = 0.0;
  double alignment_nll = 0.0;
  double student_accuracy = 0.0;
};

struct CompetenceOptions {
  double fraction = 0.2;
  std::size_t epochs = 3;
  std::size_t batch_size = 32;
  OptimConfig optim;
  std::size_t decode_max_len = 96;
};

// For each teacher and each extreme split of the train curriculum: teacher
// exact match on its corpus, the student's alignment NLL on those outputs,
// and the accuracy of a copy of the student trained only on that split,
// evaluated on the same-end split of the test set.
std::vector<CompetenceRow> competence_alignment_report(const TeacherPool& pool, const StudentModel& student,
                                                       const Curriculum& train_curriculum, const Dataset& train,
                                                       const Dataset& test,
                                                       const std::map<std::string, const Corpus*>& corpora,
                                                       const CompetenceOptions& opts);

struct SweepCell {
  double weak_share = 0.0;
  std::vector<double> fractions;
  Variant variant = Variant::kClpd;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracies;  // parallel to seeds
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one seed
};

using RunFn = std::function<RunResult(const RunConfig&)>;

// clpd and pd_only at every fraction vector and seed. `base` supplies all
// other settings; `run` executes one configuration.
std::vector<SweepCell> partition_sweep(const RunConfig& base, const std::vector<std::vector<double>>& fractions,
                                       const std::vector<std::uint64_t>& seeds, const RunFn& run);

double sample_mean(const std::vector<double>& xs);
// n - 1 denominator; 0 for fewer than two values.
double sample_std(const std::vector<double>& xs);

// Shortest decimal that round-trips.
std::string format_double(double x);
std::string format_fractions(const std::vector<double>& f);

// CSV with a header row and one data row; `comments` are emitted first as
// "# key=value" lines.
void write_run_csv(std::ostream& out, const RunResult& r,
                   const std::vector<std::pair<std::string, std::string>>& comments);

}  // namespace clpd

#endif  // CLPD_SCHEDULER_HPP_
