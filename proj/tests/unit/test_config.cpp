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

#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "clpd/config.hpp"
#include "clpd/errors.hpp"

using namespace clpd;

namespace {

const char* kMinimal = R"(
teachers:
  - id: a
    accuracy_by_steps: {1: 1.0, 2: 0.9, 3: 0.8, 4: 0.7, 5: 0.6, 6: 0.5}
  - id: b
    accuracy_by_steps: {1: 1.0, 2: 1.0, 3: 1.0, 4: 1.0, 5: 1.0, 6: 1.0}
    style_noise: 0.2
)";

ExperimentConfig parse(const std::string& text, const std::map<std::string, std::string>& env = {}) {
  return parse_config(text, std::filesystem::temp_directory_path(), env);
}

// Message of the ConfigError thrown by parsing `text`, or "" when it parses.
std::string error_of(const std::string& text, const std::map<std::string, std::string>& env = {}) {
  try {
    parse(text, env);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

TEST_CASE("the shipped default config loads") {
  const ExperimentConfig cfg = load_config(std::filesystem::path(CLPD_SOURCE_DIR) / "configs" / "default.yaml");
  CHECK(cfg.teachers.size() == 2);
  CHECK(cfg.teachers[0].id == "weak");
  CHECK(cfg.dataset.gen.n == 2500);
  CHECK(cfg.variants.size() == 6);
  CHECK(cfg.training.optim.method == OptimMethod::kAdam);
  CHECK(cfg.hash.size() == 64);
}

TEST_CASE("defaults fill unspecified fields") {
  const ExperimentConfig cfg = parse(kMinimal);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.tau == 0.8);
  CHECK(cfg.estimator == Estimator::kCotSteps);
  CHECK(cfg.loss == LossKind::kSeqKd);
  CHECK(cfg.variants.size() == 6);
  CHECK(cfg.model.vocab_size == Vocabulary::standard().size());
  CHECK(cfg.teachers[1].profile->style_noise == 0.2);
  CHECK(cfg.teachers[0].profile->accuracy_by_steps.at(6) == 0.5);
  const RunConfig rc = cfg.run_config({Variant::kVanilla, "a"}, 9);
  CHECK(rc.seed == 9);
  CHECK(rc.fixed_teacher_id == "a");
  CHECK(rc.epochs == cfg.training.epochs);
}

TEST_CASE("schema violations name the field") {
  const std::string base = kMinimal;
  CHECK(starts_with(error_of(base + "training:\n  epoch: 3\n"), "training.epoch: unknown key"));
  CHECK(starts_with(error_of(base + "training:\n  epochs: -1\n"), "training.epochs: must be >= 0"));
  CHECK(starts_with(error_of(base + "training:\n  epochs: two\n"), "training.epochs: expected an integer"));
  CHECK(starts_with(error_of(base + "tau: 1.5\n"), "tau: must lie in [0, 1]"));
  CHECK(starts_with(error_of(base + "seeds: []\n"), "seeds: must not be empty"));
  CHECK(starts_with(error_of(base + "seeds: [1, -2]\n"), "seeds[1]:"));
  CHECK(starts_with(error_of(base + "loss: kl\n"), "loss:"));
  CHECK(starts_with(error_of(base + "model:\n  arch: lstm\n"), "model.arch:"));
  CHECK(starts_with(error_of(base + "dataset:\n  split: [0.5, 0.5]\n"), "dataset.split:"));
  CHECK(starts_with(error_of(base + "dataset:\n  min_steps: 4\n  max_steps: 2\n"), "dataset.max_steps:"));
  CHECK(starts_with(error_of(base + "fractions: [0.5, 0.6]\n"), "fractions: must sum to 1"));
  CHECK(starts_with(error_of(base + "variants: [vanilla:c]\n"), "variants[0]: unknown teacher 'c'"));
  CHECK(starts_with(error_of(base + "variants: [clpd:a]\n"), "variants[0]:"));
  CHECK(starts_with(error_of(base + "sweep:\n  weak_shares: [0.5, 1.0]\n"), "sweep.weak_shares[1]:"));
  CHECK(starts_with(error_of("seeds: [1]\n"), "teachers: required"));
  CHECK(starts_with(error_of(R"(
teachers:
  - id: a
    accuracy_by_steps: {1: 1.0}
)"), "teachers[0].accuracy_by_steps:"));
  CHECK(starts_with(error_of(R"(
teachers:
  - id: a
    accuracy_by_steps: {1: 1.0, 2: 1.0, 3: 1.0, 4: 1.0, 5: 1.0, 6: 1.0}
  - id: a
    accuracy_by_steps: {1: 1.0, 2: 1.0, 3: 1.0, 4: 1.0, 5: 1.0, 6: 1.0}
)"), "teachers[1].id: duplicate"));
  CHECK(starts_with(error_of(R"(
teachers:
  - id: a
    kind: checkpoint
    path: no/such/file.bin
)"), "teachers[0].path: file not found"));
  CHECK_FALSE(error_of("teachers: [").empty());
}

TEST_CASE("environment overrides patch the tree before validation") {
  const ExperimentConfig base = parse(kMinimal);
  const ExperimentConfig e = parse(kMinimal, {{"CLPD__training__epochs", "7"},
                                              {"CLPD__teachers__1__style_noise", "0.3"},
                                              {"CLPD__seeds", "[4, 5]"},
                                              {"OTHER__tau", "0.1"}});
  CHECK(e.training.epochs == 7);
  CHECK(e.teachers[1].profile->style_noise == 0.3);
  CHECK(e.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(e.tau == base.tau);
  CHECK(e.hash != base.hash);
  CHECK(starts_with(error_of(kMinimal, {{"CLPD__training__epochs", "-1"}}), "training.epochs: must be >= 0"));
  CHECK(starts_with(error_of(kMinimal, {{"CLPD__teachers__5__id", "x"}}), "CLPD__teachers__5__id: index 5"));
  CHECK(starts_with(error_of(kMinimal, {{"CLPD__training__bogus", "1"}}), "training.bogus: unknown key"));
}

TEST_CASE("the config hash tracks content, not formatting") {
  const ExperimentConfig a = parse(kMinimal);
  const ExperimentConfig b = parse(std::string("# comment\n") + kMinimal + "tau: 0.80\n");
  CHECK(a.hash == b.hash);
  CHECK(a.canonical == b.canonical);
  const std::vector<std::string> edits = {
      "tau: 0.7\n", "seeds: [1, 2]\n", "loss: skd_kld\n", "estimator: student_loss\n",
      "output_dir: elsewhere\n", "fractions: [0.4, 0.6]\n", "variants: [clpd]\n",
      "dataset:\n  seed: 99\n", "dataset:\n  split_seed: 99\n", "model:\n  hidden_dim: 65\n",
      "training:\n  optimizer:\n    lr: 0.5\n", "training:\n  shuffle: false\n", "sweep:\n  weak_shares: [0.5]\n",
      "table1:\n  epochs: 1\n"};
  for (const std::string& edit : edits) {
    CAPTURE(edit);
    CHECK(parse(kMinimal + edit).hash != a.hash);
  }
  ExperimentConfig c = a;
  c.training.batch_size += 1;
  finalize_config(c);
  CHECK(c.hash != a.hash);
}

TEST_CASE("checkpoint teachers hash the file content") {
  const auto dir = std::filesystem::temp_directory_path() / "clpd_cfg_ckpt";
  std::filesystem::create_directories(dir);
  ModelConfig mc;
  mc.vocab_size = Vocabulary::standard().size();
  mc.embed_dim = 4;
  mc.hidden_dim = 4;
  save_checkpoint(init_model(mc, 1), dir / "t.bin");
  const std::string text = R"(
teachers:
  - id: ck
    kind: checkpoint
    path: t.bin
    exposes_distribution: true
)";
  const ExperimentConfig a = parse_config(text, dir);
  CHECK(a.teachers[0].checkpoint == dir / "t.bin");
  CHECK(build_teachers(a)[0].exposes_distribution);
  save_checkpoint(init_model(mc, 2), dir / "t.bin");
  CHECK(parse_config(text, dir).hash != a.hash);
  CHECK_THROWS_AS(build_teachers(a), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("variant labels round-trip") {
  for (const std::string s : {"vanilla", "vanilla:weak", "cl_only:strong", "pd_only", "clpd", "clpd_rt", "clpd_rd"}) {
    CHECK(variant_label(parse_variant_spec(s)) == s);
  }
  CHECK_THROWS_AS(parse_variant_spec("clpd:weak"), ConfigError);
  CHECK_THROWS_AS(parse_variant_spec("vanilla:"), ConfigError);
  CHECK_THROWS_AS(parse_variant_spec("nonsense"), ConfigError);
}
