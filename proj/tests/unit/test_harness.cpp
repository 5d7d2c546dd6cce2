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

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <doctest.h>

#include "clpd/config.hpp"
#include "clpd/errors.hpp"
#include "clpd/harness.hpp"
#include "clpd/svg.hpp"

using namespace clpd;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"(
seeds: [1, 2, 3]
tau: 0.5
dataset:
  n: 150
  max_steps: 4
  seed: 5
  split_seed: 6
model:
  embed_dim: 8
  hidden_dim: 16
teachers:
  - id: weak
    accuracy_by_steps: {1: 1.0, 2: 0.9, 3: 0.8, 4: 0.7, 5: 0.6, 6: 0.5}
  - id: strong
    accuracy_by_steps: {1: 1.0, 2: 1.0, 3: 1.0, 4: 0.95, 5: 0.95, 6: 0.95}
    style_noise: 0.1
training:
  epochs: 3
  batch_size: 8
  optimizer: {method: adam, lr: 0.01}
  decode_max_len: 40
  stage_eval_examples: 5
  alignment_examples: 20
sweep:
  weak_shares: [0.3, 0.7]
table1:
  epochs: 1
  fraction: 0.3
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("clpd_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.yaml";
  std::ofstream(p) << text;
  return p;
}

ExperimentConfig tiny(const std::map<std::string, std::string>& env = {}) {
  return parse_config(kTiny, fs::temp_directory_path(), env);
}

CommandOptions opts(const fs::path& out) {
  CommandOptions o;
  o.out = out;
  o.jobs = 1;
  static std::ofstream quiet("/dev/null");
  o.log = &quiet;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Outcome {
  int code = -1;
  std::string output;
};

// Runs the clpd binary with stderr folded into the captured output.
Outcome run_tool(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(CLPD_TOOL) + "' " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) o.output += buf.data();
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

bool contains(const std::string& s, const std::string& what) { return s.find(what) != std::string::npos; }

// Shared pipeline output: gen, corpus, rank, teachers and suite on kTiny.
const fs::path& pipeline() {
  static const fs::path root = [] {
    const fs::path r = scratch("pipeline");
    const ExperimentConfig cfg = tiny();
    for (auto* cmd : {cmd_gen, cmd_corpus, cmd_rank, cmd_teachers, cmd_suite}) cmd(cfg, opts(r));
    return r;
  }();
  return root;
}

}  // namespace

TEST_CASE("suite report has one row per variant and teacher, each over every seed") {
  const fs::path& root = pipeline();
  const AggregateReport rep = read_report_csv(root / "report.csv");
  std::set<std::string> labels;
  for (const ReportRow& r : rep.rows) {
    labels.insert(r.variant + ":" + r.teacher);
    CHECK(r.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(r.accuracies.size() == 3);
    CHECK(r.files.size() == 3);
  }
  CHECK(labels == std::set<std::string>{"vanilla:weak", "vanilla:strong", "cl_only:weak", "cl_only:strong",
                                        "pd_only:pool", "clpd:pool", "clpd_rt:pool", "clpd_rd:pool"});
  CHECK(slurp(root / "report.csv").find("variant,teacher,fractions,n,mean,std") != std::string::npos);
  CHECK(slurp(root / "report.svg").rfind("<svg", 0) == 0);
  CHECK(fs::exists(root / "teachers.csv"));
}

TEST_CASE("report statistics match an independent recomputation from run files") {
  const fs::path& root = pipeline();
  const AggregateReport rep = read_report_csv(root / "report.csv");
  const AggregateReport again = reaggregate(root / "report.csv");
  REQUIRE(again.rows.size() == rep.rows.size());
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const ReportRow& r = rep.rows[i];
    std::vector<double> acc;
    for (const std::string& f : r.files) acc.push_back(std::stod(read_run_csv(root / f).get("final_accuracy")));
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= static_cast<double>(acc.size());
    double ss = 0.0;
    for (double a : acc) ss += (a - mean) * (a - mean);
    const double sd = std::sqrt(ss / static_cast<double>(acc.size() - 1));
    CHECK(std::abs(r.mean - mean) < 1e-12);
    CHECK(std::abs(r.std - sd) < 1e-12);
    CHECK(std::abs(again.rows[i].mean - r.mean) < 1e-12);
    CHECK(std::abs(again.rows[i].std - r.std) < 1e-12);
    CHECK(again.rows[i].accuracies == r.accuracies);
  }
}

TEST_CASE("every output carries the provenance block") {
  const fs::path& root = pipeline();
  const ExperimentConfig cfg = tiny();
  const std::string want = "# config_hash=" + cfg.hash;
  CHECK(contains(slurp(root / "report.csv"), want));
  CHECK(contains(slurp(root / "teachers.csv"), want));
  for (const auto& entry : fs::directory_iterator(root / "runs")) {
    if (entry.is_regular_file()) CHECK(contains(slurp(entry.path()), want));
  }
  const RunCsv run = read_run_csv(root / "runs" / run_file_name({Variant::kClpd, std::nullopt}, 2));
  CHECK(run.get("seed") == "2");
  CHECK(run.get("variant") == "clpd");
}

TEST_CASE("a stale run file is refused during aggregation") {
  const fs::path& root = pipeline();
  const fs::path copy = scratch("stale");
  fs::copy(root, copy, fs::copy_options::recursive);
  const fs::path f = copy / "runs" / run_file_name({Variant::kClpd, std::nullopt}, 1);
  std::string text = slurp(f);
  const auto pos = text.find("# config_hash=") + 14;
  text[pos] = text[pos] == '0' ? '1' : '0';
  std::ofstream(f, std::ios::binary) << text;
  CHECK_THROWS_AS(reaggregate(copy / "report.csv"), InvariantError);
  fs::remove_all(copy);
}

TEST_CASE("repeated runs write identical bytes") {
  const fs::path& root = pipeline();
  const fs::path other = scratch("repeat");
  fs::copy(root / "data", other / "data", fs::copy_options::recursive);
  fs::copy(root / "corpora", other / "corpora", fs::copy_options::recursive);
  fs::copy(root / "curriculum", other / "curriculum", fs::copy_options::recursive);
  CommandOptions o = opts(other);
  o.variant = "clpd";
  o.seed = 3;
  cmd_distill(tiny(), o);
  const std::string name = run_file_name({Variant::kClpd, std::nullopt}, 3);
  CHECK(slurp(other / "runs" / name) == slurp(root / "runs" / name));
  o.variant = "vanilla:strong";
  cmd_distill(tiny(), o);
  const std::string v = run_file_name({Variant::kVanilla, "strong"}, 3);
  CHECK(slurp(other / "runs" / v) == slurp(root / "runs" / v));
  fs::remove_all(other);
}

TEST_CASE("in-memory and on-disk experiments agree") {
  const fs::path& root = pipeline();
  const ExperimentConfig cfg = tiny();
  Experiment mem = Experiment::create(cfg);
  Experiment disk = Experiment::open(cfg, root);
  CHECK(mem.provenance().dataset_hash == disk.provenance().dataset_hash);
  CHECK(mem.perf() == disk.perf());
  mem.prepare(2);
  disk.prepare(2);
  const RunResult a = mem.run({Variant::kPdOnly, std::nullopt}, 2);
  const RunResult b = disk.run({Variant::kPdOnly, std::nullopt}, 2);
  CHECK(a.final_accuracy == b.final_accuracy);
  CHECK(std::stod(read_run_csv(root / "runs" / run_file_name({Variant::kPdOnly, std::nullopt}, 2)).get("final_accuracy")) ==
        a.final_accuracy);
  CHECK(mem.expand({{Variant::kVanilla, std::nullopt}}).size() == 2);
  CHECK(mem.expand({{Variant::kClpd, std::nullopt}}).size() == 1);
}

TEST_CASE("a vanilla-only suite reports one row per teacher") {
  const fs::path& root = pipeline();
  const fs::path other = scratch("vanilla");
  const ExperimentConfig cfg = tiny({{"CLPD__variants", "[vanilla]"}, {"CLPD__seeds", "[1]"}});
  fs::copy(root / "data", other / "data", fs::copy_options::recursive);
  fs::copy(root / "corpora", other / "corpora", fs::copy_options::recursive);
  fs::copy(root / "curriculum", other / "curriculum", fs::copy_options::recursive);
  cmd_suite(cfg, opts(other));
  const AggregateReport rep = read_report_csv(other / "report.csv");
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].teacher == "weak");
  CHECK(rep.rows[1].teacher == "strong");
  CHECK(rep.rows[0].std == 0.0);
  // Changing one field changes the hash stamped on every output.
  CHECK(cfg.hash != tiny().hash);
  CHECK(contains(slurp(other / "report.csv"), "# config_hash=" + cfg.hash));
  fs::remove_all(other);
}

TEST_CASE("sweep and table1 write their grids") {
  const fs::path& root = pipeline();
  const fs::path other = scratch("grids");
  const ExperimentConfig cfg = tiny({{"CLPD__seeds", "[1]"}});
  fs::copy(root / "data", other / "data", fs::copy_options::recursive);
  fs::copy(root / "corpora", other / "corpora", fs::copy_options::recursive);
  fs::copy(root / "curriculum", other / "curriculum", fs::copy_options::recursive);
  cmd_sweep(cfg, opts(other));
  const AggregateReport sweep = read_report_csv(other / "sweep.csv");
  CHECK(sweep.rows.size() == 4);
  CHECK(slurp(other / "sweep.svg").rfind("<svg", 0) == 0);
  cmd_table1(cfg, opts(other));
  const std::string t1 = slurp(other / "table1.csv");
  CHECK(contains(t1, "weak"));
  CHECK(contains(t1, "strong"));
  CHECK(contains(t1, "hard"));
  CHECK(contains(t1, "easy"));
  CHECK(slurp(other / "table1.svg").rfind("<svg", 0) == 0);
  fs::remove_all(other);
}

TEST_CASE("parallel and serial suites agree") {
  const fs::path& root = pipeline();
  const fs::path other = scratch("parallel");
  fs::copy(root / "data", other / "data", fs::copy_options::recursive);
  fs::copy(root / "corpora", other / "corpora", fs::copy_options::recursive);
  fs::copy(root / "curriculum", other / "curriculum", fs::copy_options::recursive);
  CommandOptions o = opts(other);
  o.jobs = 3;
  cmd_suite(tiny(), o);
  CHECK(slurp(other / "report.csv") == slurp(root / "report.csv"));
  fs::remove_all(other);
}

TEST_CASE("parallel_for visits every index and rethrows") {
  std::vector<int> hit(50, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::count(hit.begin(), hit.end(), 1) == 50);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw RuntimeFailure("boom");
                  }),
                  RuntimeFailure);
}

TEST_CASE("svg output is deterministic and escaped") {
  const std::vector<svg::BarGroup> g = {{"a<b", {{"x", 0.5, 0.1}}}, {"c&d", {{"x", 0.25, 0.0}}}};
  const std::string s = svg::bar_chart("t", "y", g, {"foot"});
  CHECK(s == svg::bar_chart("t", "y", g, {"foot"}));
  CHECK(contains(s, "a&lt;b"));
  CHECK(contains(s, "c&amp;d"));
  CHECK_FALSE(contains(s, "a<b"));
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("cli");
  const fs::path cfg = write_config(dir, kTiny);
  const std::string base = "--config '" + cfg.string() + "' --out '" + (dir / "out").string() + "'";

  Outcome o = run_tool("suite " + base);
  CHECK(o.code == 3);
  CHECK(contains(o.output, "run `clpd gen` first"));

  o = run_tool("bogus " + base);
  CHECK(o.code == 2);
  o = run_tool("suite --config '" + (dir / "missing.yaml").string() + "'");
  CHECK(o.code == 2);

  o = run_tool("gen " + base, "CLPD__training__epochs=-1");
  CHECK(o.code == 2);
  CHECK(contains(o.output, "training.epochs"));

  o = run_tool("gen " + base);
  CHECK(o.code == 0);
  o = run_tool("suite " + base);
  CHECK(o.code == 3);
  CHECK(contains(o.output, "clpd corpus"));

  o = run_tool("distill " + base);
  CHECK(o.code == 2);
  CHECK(contains(o.output, "--variant"));
  o = run_tool("distill --variant clpd:weak " + base);
  CHECK(o.code == 2);

  o = run_tool("corpus " + base, "CLPD__dataset__seed=77");
  CHECK(o.code == 3);
  CHECK(contains(o.output, "clpd gen"));

  const fs::path bad = dir / "bad.yaml";
  std::ofstream(bad) << std::string(kTiny) << "tau: 2\n";
  o = run_tool("gen --config '" + bad.string() + "'");
  CHECK(o.code == 2);
  CHECK(contains(o.output, "tau"));

  CHECK(run_tool("corpus " + base).code == 0);
  CHECK(run_tool("rank " + base).code == 0);
  // No admitted teacher: the report still lists verdicts, pool runs refuse.
  const std::string none = "CLPD__tau=0.99 CLPD__teachers__1__style_noise=0.5 "
                           "CLPD__teachers__1__accuracy_by_steps='{1: 0.5, 2: 0.5, 3: 0.5, 4: 0.5, 5: 0.5, 6: 0.5}'";
  CHECK(run_tool("teachers " + base, none).code == 0);
  CHECK(contains(slurp(dir / "out" / "teachers.csv"), "# tau=0.99"));
  CHECK_FALSE(contains(slurp(dir / "out" / "teachers.csv"), ",yes,"));
  o = run_tool("distill --variant clpd --seed 1 " + base, none);
  CHECK(o.code == 2);
  CHECK(contains(o.output, "tau"));
  o = run_tool("suite " + base, none);
  CHECK(o.code == 2);
  CHECK(run_tool("distill --variant vanilla:weak --seed 1 " + base, "CLPD__tau=0.99").code == 0);
  fs::remove_all(dir);
}
