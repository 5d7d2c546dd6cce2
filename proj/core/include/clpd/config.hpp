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

// Experiment configuration: one YAML file, optionally patched by environment
// variables, validated against a fixed schema before anything runs.
//
// Overrides use the prefix CLPD__ and "__" between path components, e.g.
//   CLPD__training__epochs=2
//   CLPD__teachers__1__style_noise=0.3
//   CLPD__seeds="[1, 2, 3]"
// Values are parsed as YAML scalars or flow collections.

#ifndef CLPD_CONFIG_HPP_
#define CLPD_CONFIG_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clpd/dataset.hpp"
#include "clpd/difficulty.hpp"
#include "clpd/model.hpp"
#include "clpd/scheduler.hpp"
#include "clpd/teachers.hpp"

namespace clpd {

inline constexpr const char* kEnvPrefix = "CLPD__";

struct DatasetSpec {
  GenConfig gen;
  std::array<double, 3> split = {0.8, 0.1, 0.1};
  std::uint64_t split_seed = 1;
};

struct TeacherSpec {
  std::string id;
  TeacherKind kind = TeacherKind::kOracle;
  std::optional<CompetenceProfile> profile;  // oracle
  std::string checkpoint_ref;                // path as written in the file
  std::filesystem::path checkpoint;          // resolved against the config directory
  std::string checkpoint_sha256;             // content hash, part of the config hash
  bool exposes_distribution = false;
  std::size_t max_len = 96;
};

struct TrainingSpec {
  std::size_t epochs = 3;
  std::size_t batch_size = 32;
  OptimConfig optim;
  bool shuffle = true;
  bool dynamic_rerank = false;
  std::size_t decode_max_len = 96;
  std::size_t stage_eval_examples = 100;
  std::size_t alignment_examples = 200;
  // Supervised steps on the validation split before distillation (and before
  // student-loss scoring), shared by every variant of a seed.
  std::size_t warm_start_steps = 0;
  std::size_t warm_start_batch = 32;
  std::optional<OptimConfig> warm_start_optim;
};

// One (variant, teacher) row of a suite. teacher is set only for
// single-teacher variants.
struct VariantSpec {
  Variant variant = Variant::kClpd;
  std::optional<std::string> teacher;
  bool operator==(const VariantSpec&) const = default;
};
std::string variant_label(const VariantSpec& v);
VariantSpec parse_variant_spec(const std::string& text);

// Weak-teacher shares for the clpd / pd_only partition sweep (two-teacher pools).
struct SweepSpec {
  std::vector<double> weak_shares = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
};

struct Table1Spec {
  double fraction = 0.2;
  std::size_t epochs = 3;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  ModelConfig model;
  std::vector<TeacherSpec> teachers;
  double tau = 0.8;
  Estimator estimator = Estimator::kCotSteps;
  LossKind loss = LossKind::kSeqKd;
  TrainingSpec training;
  std::vector<VariantSpec> variants;
  std::optional<std::vector<double>> fractions;
  SweepSpec sweep;
  Table1Spec table1;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::filesystem::path output_dir = "clpd-out";

  // Canonical JSON of every resolved field (sorted keys, no whitespace) and
  // its SHA-256. Filled by load_config / finalize_config.
  std::string canonical;
  std::string hash;

  RunConfig run_config(const VariantSpec& v, std::uint64_t seed) const;
};

// Reads, patches with `env` (name -> value, only CLPD__ names are used),
// validates and hashes. Throws ConfigError with the offending field path.
ExperimentConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& env = {});
ExperimentConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir,
                              const std::map<std::string, std::string>& env = {});

// The process environment restricted to CLPD__ names.
std::map<std::string, std::string> config_env_from_process();

// Recomputes canonical and hash after programmatic edits.
void finalize_config(ExperimentConfig& cfg);

// Builds the candidate teachers (checkpoints are loaded from disk).
std::vector<Teacher> build_teachers(const ExperimentConfig& cfg);

}  // namespace clpd

#endif  // CLPD_CONFIG_HPP_
