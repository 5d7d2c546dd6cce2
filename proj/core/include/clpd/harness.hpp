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

// Experiment plumbing behind the clpd command line.
//
// Artifact layout under the output directory:
//   data/{train,validation,test}.jsonl, data/manifest.json    gen
//   teachers.csv                                               teachers
//   corpora/<teacher>-<def>-<data>-s<seed>.jsonl               corpus
//   curriculum/<estimator>-<key>-s<seed>.jsonl                 rank
//   runs/<variant>[-<teacher>]-s<seed>.csv                     distill, suite
//   report.csv, report.svg                                     suite
//   runs/sweep/..., sweep.csv, sweep.svg                       sweep
//   table1.csv, table1.svg                                     table1
// Every command after gen checks for its inputs and throws MissingArtifact
// naming the command that produces them.

#ifndef CLPD_HARNESS_HPP_
#define CLPD_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "clpd/config.hpp"
#include "clpd/scheduler.hpp"

namespace clpd {

std::string tool_version();

struct Provenance {
  std::string config_hash;
  std::string dataset_hash;
  std::string tool_version;

  std::vector<std::pair<std::string, std::string>> comments() const;
};

// Hash over the serialized train, validation and test splits.
std::string dataset_hash(const Dataset& train, const Dataset& validation, const Dataset& test);

struct SeedInputs {
  std::map<std::string, Corpus> corpora;  // every candidate teacher, train split
  StudentModel base;
  Curriculum curriculum;
};

// Everything a run needs, held in memory. Either built from scratch
// (create) or from the artifacts of earlier commands (open).
class Experiment {
 public:
  static Experiment create(const ExperimentConfig& cfg);
  static Experiment open(const ExperimentConfig& cfg, const std::filesystem::path& root);

  const ExperimentConfig& config() const { return cfg_; }
  const Dataset& train() const { return train_; }
  const Dataset& validation() const { return validation_; }
  const Dataset& test() const { return test_; }
  const std::vector<Teacher>& candidates() const { return candidates_; }
  const std::vector<double>& perf() const { return perf_; }  // parallel to candidates
  const TeacherPool& pool() const;  // throws NoViableTeacher when empty
  const Provenance& provenance() const { return provenance_; }

  // Not thread-safe; prepare every seed before running in parallel.
  const SeedInputs& prepare(std::uint64_t seed);
  const SeedInputs& inputs(std::uint64_t seed) const;

  // Single-teacher variants without a teacher resolve to one row per pool
  // teacher, weakest first.
  std::vector<VariantSpec> expand(const std::vector<VariantSpec>& variants) const;

  RunResult run(const VariantSpec& v, std::uint64_t seed,
                const std::optional<std::vector<double>>& fractions = std::nullopt) const;

  // Grid rows over all candidate teachers, ordered by perf.
  std::vector<CompetenceRow> competence(std::uint64_t seed) const;

 private:
  Experiment() = default;
  void init_teachers();

  ExperimentConfig cfg_;
  std::optional<std::filesystem::path> root_;
  Dataset train_, validation_, test_;
  std::vector<Teacher> candidates_;
  std::vector<double> perf_;
  std::optional<TeacherPool> pool_;
  std::string pool_error_;
  Provenance provenance_;
  std::map<std::uint64_t, std::shared_ptr<const SeedInputs>> seeds_;
};

// Perf of each candidate on the validation split; oracle draws come from a
// stream fixed by the dataset seed so the pool is the same for every run seed.
std::vector<double> evaluate_candidates(const std::vector<Teacher>& candidates, const Dataset& validation,
                                        std::uint64_t dataset_seed);

StudentModel base_student(const ExperimentConfig& cfg, std::uint64_t seed, const Dataset& validation);
Curriculum make_curriculum(const ExperimentConfig& cfg, const Dataset& train, const StudentModel& base);
// File name under curriculum/ for this config, seed and dataset.
std::string curriculum_file_name(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& data_hash);

std::string run_file_name(const VariantSpec& v, std::uint64_t seed);
std::string sweep_file_name(Variant v, double weak_share, std::uint64_t seed);

// Runs jobs [0, n) on `jobs` worker threads (0 = hardware concurrency).
// The first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body);

// ---- Reports ---------------------------------------------------------------

struct RunCsv {
  std::vector<std::pair<std::string, std::string>> comments;
  std::vector<std::pair<std::string, std::string>> columns;
  const std::string& get(const std::string& column) const;  // throws ParseError
};
RunCsv read_run_csv(const std::filesystem::path& path);

struct ReportRow {
  std::string variant;
  std::string teacher;  // teacher id, or "pool"
  std::string fractions;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracies;  // parallel to seeds
  std::vector<std::string> files;  // relative to the report directory
  double mean = 0.0;
  double std = 0.0;
};

struct AggregateReport {
  Provenance provenance;
  std::vector<ReportRow> rows;
};

// Groups run files by (variant, teacher, fractions) in first-seen order and
// computes mean and sample std. Paths are relative to root.
AggregateReport aggregate_runs(const std::filesystem::path& root, const std::vector<std::string>& files,
                               const Provenance& provenance);
void write_report_csv(std::ostream& out, const AggregateReport& r);
AggregateReport read_report_csv(const std::filesystem::path& path);
// Re-reads every run listed in a report and aggregates again.
AggregateReport reaggregate(const std::filesystem::path& report_path);

// ---- Commands --------------------------------------------------------------

struct CommandOptions {
  std::optional<std::uint64_t> seed;  // restricts to one seed
  std::optional<std::string> variant;  // distill: required
  std::size_t jobs = 0;
  std::filesystem::path out;  // empty: config output_dir
  std::ostream* log = nullptr;
};

void cmd_gen(const ExperimentConfig& cfg, const CommandOptions& opt);
void cmd_corpus(const ExperimentConfig& cfg, const CommandOptions& opt);
void cmd_rank(const ExperimentConfig& cfg, const CommandOptions& opt);
void cmd_teachers(const ExperimentConfig& cfg, const CommandOptions& opt);
void cmd_distill(const ExperimentConfig& cfg, const CommandOptions& opt);
void cmd_suite(const ExperimentConfig& cfg, const CommandOptions& opt);
void cmd_sweep(const ExperimentConfig& cfg, const CommandOptions& opt);
void cmd_table1(const ExperimentConfig& cfg, const CommandOptions& opt);

}  // namespace clpd

#endif  // CLPD_HARNESS_HPP_
