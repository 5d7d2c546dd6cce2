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

// clpd gen|corpus|rank|teachers|distill|suite|sweep|table1 --config FILE
//      [--seed N] [--variant V] [--jobs K] [--out DIR]
//
// Exit codes: 0 ok, 2 config error, 3 missing artifact, 4 runtime failure.

#include <malloc.h>

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "clpd/config.hpp"
#include "clpd/errors.hpp"
#include "clpd/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kMissing = 3;
constexpr int kRuntime = 4;

using Command = std::function<void(const clpd::ExperimentConfig&, const clpd::CommandOptions&)>;

}  // namespace

int main(int argc, char** argv) {
  // Training allocates and frees many mid-sized Eigen buffers; keep them on
  // the heap instead of churning mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  const std::map<std::string, Command> commands = {
      {"gen", clpd::cmd_gen},         {"corpus", clpd::cmd_corpus}, {"rank", clpd::cmd_rank},
      {"teachers", clpd::cmd_teachers}, {"distill", clpd::cmd_distill}, {"suite", clpd::cmd_suite},
      {"sweep", clpd::cmd_sweep},     {"table1", clpd::cmd_table1},
  };

  CLI::App app{"Curriculum-coupled progressive distillation experiments"};
  app.set_version_flag("--version", clpd::tool_version());
  std::string command, config_path, variant, out;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  app.add_option("command", command, "gen, corpus, rank, teachers, distill, suite, sweep or table1")
      ->required()
      ->check(CLI::IsMember({"gen", "corpus", "rank", "teachers", "distill", "suite", "sweep", "table1"}));
  app.add_option("--config,-c", config_path, "experiment YAML")->required();
  auto* seed_opt = app.add_option("--seed", seed, "run only this seed");
  auto* variant_opt = app.add_option("--variant", variant, "variant[:teacher] for distill");
  app.add_option("--jobs,-j", jobs, "worker threads (default: all cores)");
  app.add_option("--out,-o", out, "output directory (overrides output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    const clpd::ExperimentConfig cfg = clpd::load_config(config_path, clpd::config_env_from_process());
    clpd::CommandOptions opt;
    if (*seed_opt) opt.seed = seed;
    if (*variant_opt) opt.variant = variant;
    opt.jobs = jobs;
    opt.out = out;
    opt.log = &std::cerr;
    commands.at(command)(cfg, opt);
    return kOk;
  } catch (const clpd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const clpd::NoViableTeacher& e) {
    std::cerr << "config error: tau: " << e.what() << '\n';
    return kConfig;
  } catch (const clpd::MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return kMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
