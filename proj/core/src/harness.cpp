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

#include "clpd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "clpd/errors.hpp"
#include "clpd/hash.hpp"
#include "clpd/rng.hpp"
#include "clpd/svg.hpp"

namespace fs = std::filesystem;

namespace clpd {
namespace {

using Comments = std::vector<std::pair<std::string, std::string>>;

constexpr const char* kSplitFiles[3] = {"train.jsonl", "validation.jsonl", "test.jsonl"};
constexpr SplitTag kSplitTags[3] = {SplitTag::kTrain, SplitTag::kValidation, SplitTag::kTest};

// Writes through a temporary file so an interrupted command never leaves a
// truncated artifact behind.
void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + tmp.string());
    out << content;
    if (!out) throw RuntimeFailure("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

[[noreturn]] void missing(const fs::path& path, const std::string& command) {
  throw MissingArtifact("missing " + path.string() + "; run `clpd " + command + "` first");
}

void require(const fs::path& path, const std::string& command) {
  if (!fs::exists(path)) missing(path, command);
}

double parse_number(const std::string& text, const std::string& what) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("bad number '" + text + "' in " + what, 0);
  }
  return x;
}

std::uint64_t parse_uint(const std::string& text, const std::string& what) {
  std::uint64_t x = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("bad integer '" + text + "' in " + what, 0);
  }
  return x;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

nlohmann::json canonical_section(const ExperimentConfig& cfg, const char* key) {
  return nlohmann::json::parse(cfg.canonical).at(key);
}

std::ostream& log_of(const CommandOptions& opt) { return opt.log ? *opt.log : std::clog; }

fs::path root_of(const ExperimentConfig& cfg, const CommandOptions& opt) {
  return opt.out.empty() ? cfg.output_dir : opt.out;
}

std::vector<std::uint64_t> seeds_of(const ExperimentConfig& cfg, const CommandOptions& opt) {
  if (opt.seed) return {*opt.seed};
  return cfg.seeds;
}

std::vector<std::string> provenance_footer(const Provenance& p) {
  return {"config " + short_hash(p.config_hash) + "  data " + short_hash(p.dataset_hash) + "  clpd " +
          p.tool_version};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_comments(std::ostream& out, const Comments& comments) {
  for (const auto& [k, v] : comments) out << "# " << k << '=' << v << '\n';
}

std::string share_label(double share) {
  // Fixed two decimals keeps file names sortable.
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", share);
  return buf;
}

}  // namespace

std::string tool_version() { return CLPD_VERSION; }

Comments Provenance::comments() const {
  return {{"config_hash", config_hash}, {"dataset_hash", dataset_hash}, {"tool_version", tool_version}};
}

std::string dataset_hash(const Dataset& train, const Dataset& validation, const Dataset& test) {
  std::ostringstream s;
  for (const Dataset* d : {&train, &validation, &test}) {
    write_dataset(s, *d);
    s << "--\n";
  }
  return sha256_hex(s.str());
}

std::vector<double> evaluate_candidates(const std::vector<Teacher>& candidates, const Dataset& validation,
                                        std::uint64_t dataset_seed) {
  const RngStream stream(derive_seed({dataset_seed, tag_hash("perf")}));
  std::vector<double> perf;
  for (const Teacher& t : candidates) perf.push_back(evaluate_teacher(t, validation, stream.child(t.id)));
  return perf;
}

StudentModel base_student(const ExperimentConfig& cfg, std::uint64_t seed, const Dataset& validation) {
  const TrainingSpec& t = cfg.training;
  return make_base_student(cfg.model, seed, validation, t.warm_start_steps, t.warm_start_batch,
                           t.warm_start_optim.value_or(t.optim));
}

Curriculum make_curriculum(const ExperimentConfig& cfg, const Dataset& train, const StudentModel& base) {
  if (cfg.estimator == Estimator::kStudentLoss) {
    return build_curriculum(score_by_student_loss(base, train), Estimator::kStudentLoss);
  }
  return build_curriculum(score_by_cot(train), Estimator::kCotSteps);
}

std::string curriculum_file_name(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& data_hash) {
  nlohmann::json key = {{"estimator", std::string(to_string(cfg.estimator))}, {"data", data_hash}};
  // Student-loss ranks depend on the base student.
  if (cfg.estimator == Estimator::kStudentLoss) {
    const nlohmann::json training = canonical_section(cfg, "training");
    key["model"] = canonical_section(cfg, "model");
    key["warm_start"] = training.at("warm_start");
    if (!cfg.training.warm_start_optim) key["optimizer"] = training.at("optimizer");
  }
  return std::string(to_string(cfg.estimator)) + "-" + short_hash(sha256_hex(key.dump())) + "-s" +
         std::to_string(seed) + ".jsonl";
}

std::string run_file_name(const VariantSpec& v, std::uint64_t seed) {
  std::string name(to_string(v.variant));
  if (v.teacher) name += "-" + *v.teacher;
  return name + "-s" + std::to_string(seed) + ".csv";
}

std::string sweep_file_name(Variant v, double weak_share, std::uint64_t seed) {
  return std::string(to_string(v)) + "-w" + share_label(weak_share) + "-s" + std::to_string(seed) + ".csv";
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- Experiment ------------------------------------------------------------

Experiment Experiment::create(const ExperimentConfig& cfg) {
  Experiment e;
  e.cfg_ = cfg;
  const Dataset all = generate_task(cfg.dataset.gen);
  auto parts = split(all, cfg.dataset.split, cfg.dataset.split_seed);
  e.train_ = std::move(parts[0]);
  e.validation_ = std::move(parts[1]);
  e.test_ = std::move(parts[2]);
  e.init_teachers();
  return e;
}

Experiment Experiment::open(const ExperimentConfig& cfg, const fs::path& root) {
  Experiment e;
  e.cfg_ = cfg;
  e.root_ = root;
  const fs::path data = root / "data";
  const fs::path manifest_path = data / "manifest.json";
  require(manifest_path, "gen");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(manifest_path.string() + ": " + ex.what(), 0);
  }
  if (manifest.value("dataset", nlohmann::json()) != canonical_section(cfg, "dataset")) {
    throw MissingArtifact(data.string() + " was generated from different dataset settings; run `clpd gen` first");
  }
  Dataset* dst[3] = {&e.train_, &e.validation_, &e.test_};
  for (int i = 0; i < 3; ++i) {
    const fs::path p = data / kSplitFiles[i];
    require(p, "gen");
    *dst[i] = load_dataset(p, kSplitTags[i]);
  }
  e.init_teachers();
  if (manifest.value("dataset_hash", "") != e.provenance_.dataset_hash) {
    throw MissingArtifact(data.string() + " does not match its manifest; run `clpd gen` first");
  }
  return e;
}

void Experiment::init_teachers() {
  provenance_ = {cfg_.hash, dataset_hash(train_, validation_, test_), tool_version()};
  candidates_ = build_teachers(cfg_);
  perf_ = evaluate_candidates(candidates_, validation_, cfg_.dataset.gen.seed);
  try {
    pool_ = filter_and_order(candidates_, perf_, cfg_.tau);
  } catch (const NoViableTeacher& ex) {
    pool_.reset();
    pool_error_ = ex.what();
  }
}

const TeacherPool& Experiment::pool() const {
  if (!pool_) throw NoViableTeacher(pool_error_);
  return *pool_;
}

const SeedInputs& Experiment::prepare(std::uint64_t seed) {
  if (auto it = seeds_.find(seed); it != seeds_.end()) return *it->second;
  auto in = std::make_shared<SeedInputs>();
  for (const Teacher& t : candidates_) {
    if (root_) {
      const fs::path p = *root_ / "corpora" / corpus_cache_name(t, provenance_.dataset_hash, seed);
      require(p, "corpus");
      std::ifstream f(p);
      in->corpora[t.id] = read_corpus(f, train_.vocab);
    } else {
      in->corpora[t.id] = generate_corpus(t, train_, seed);
    }
  }
  in->base = base_student(cfg_, seed, validation_);
  if (root_) {
    const fs::path p = *root_ / "curriculum" / curriculum_file_name(cfg_, seed, provenance_.dataset_hash);
    require(p, "rank");
    std::ifstream f(p);
    in->curriculum = read_curriculum(f, train_);
    if (in->curriculum.estimator != cfg_.estimator) {
      throw MissingArtifact(p.string() + " holds a different estimator; run `clpd rank` first");
    }
  } else {
    in->curriculum = make_curriculum(cfg_, train_, in->base);
  }
  seeds_[seed] = in;
  return *in;
}

const SeedInputs& Experiment::inputs(std::uint64_t seed) const {
  auto it = seeds_.find(seed);
  if (it == seeds_.end()) throw ConfigError("seed " + std::to_string(seed) + " was not prepared");
  return *it->second;
}

std::vector<VariantSpec> Experiment::expand(const std::vector<VariantSpec>& variants) const {
  std::vector<VariantSpec> out;
  for (const VariantSpec& v : variants) {
    if (is_single_teacher(v.variant) && !v.teacher) {
      for (const std::string& id : pool().ids()) out.push_back({v.variant, id});
    } else {
      if (!is_single_teacher(v.variant)) (void)pool();
      if (v.teacher) {
        const bool known = std::any_of(candidates_.begin(), candidates_.end(),
                                       [&](const Teacher& t) { return t.id == *v.teacher; });
        if (!known) throw ConfigError("variants: unknown teacher '" + *v.teacher + "'");
      }
      out.push_back(v);
    }
  }
  return out;
}

RunResult Experiment::run(const VariantSpec& v, std::uint64_t seed,
                          const std::optional<std::vector<double>>& fractions) const {
  const SeedInputs& si = inputs(seed);
  RunConfig rc = cfg_.run_config(v, seed);
  if (fractions) rc.fractions = fractions;
  // Fixed-teacher runs do not need an admitted pool.
  static const TeacherPool kEmpty;
  const TeacherPool& p = is_single_teacher(v.variant) && !pool_ ? kEmpty : pool();
  RunInputs in;
  in.train = &train_;
  in.validation = &validation_;
  in.test = &test_;
  in.curriculum = &si.curriculum;
  in.pool = &p;
  for (const auto& [id, c] : si.corpora) in.corpora[id] = &c;
  in.base_student = &si.base;
  in.alignment_examples = cfg_.training.alignment_examples;
  return run_distillation(rc, in);
}

std::vector<CompetenceRow> Experiment::competence(std::uint64_t seed) const {
  const SeedInputs& si = inputs(seed);
  const TeacherPool all = filter_and_order(candidates_, perf_, 0.0);
  std::map<std::string, const Corpus*> corpora;
  for (const auto& [id, c] : si.corpora) corpora[id] = &c;
  CompetenceOptions opts;
  opts.fraction = cfg_.table1.fraction;
  opts.epochs = cfg_.table1.epochs;
  opts.batch_size = cfg_.training.batch_size;
  opts.optim = cfg_.training.optim;
  opts.decode_max_len = cfg_.training.decode_max_len;
  return competence_alignment_report(all, si.base, si.curriculum, train_, test_, corpora, opts);
}

// ---- Reports ---------------------------------------------------------------

const std::string& RunCsv::get(const std::string& column) const {
  for (const auto& [k, v] : columns) {
    if (k == column) return v;
  }
  throw ParseError("run file has no column '" + column + "'", 0);
}

RunCsv read_run_csv(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact("missing run file " + path.string());
  std::istringstream in(read_file(path));
  RunCsv r;
  std::string line;
  std::vector<std::string> header;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(path.string() + ": comment without '='", lineno);
      r.comments.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
    } else if (header.empty()) {
      header = split_on(line, ',');
    } else {
      const auto values = split_on(line, ',');
      if (values.size() != header.size()) {
        throw ParseError(path.string() + ": " + std::to_string(values.size()) + " fields for " +
                             std::to_string(header.size()) + " columns",
                         lineno);
      }
      if (!r.columns.empty()) throw ParseError(path.string() + ": more than one data row", lineno);
      for (std::size_t i = 0; i < header.size(); ++i) r.columns.emplace_back(header[i], values[i]);
    }
  }
  if (r.columns.empty()) throw ParseError(path.string() + ": no data row", lineno);
  return r;
}

AggregateReport aggregate_runs(const fs::path& root, const std::vector<std::string>& files,
                               const Provenance& provenance) {
  AggregateReport rep;
  rep.provenance = provenance;
  for (const std::string& f : files) {
    const RunCsv run = read_run_csv(root / f);
    for (const auto& [k, v] : provenance.comments()) {
      auto it = std::find_if(run.comments.begin(), run.comments.end(), [&](const auto& c) { return c.first == k; });
      if (it == run.comments.end() || it->second != v) {
        throw InvariantError(f + ": " + k + " does not match the report (stale run file)");
      }
    }
    const std::string variant = run.get("variant"), teacher = run.get("teacher"), fractions = run.get("fractions");
    auto row = std::find_if(rep.rows.begin(), rep.rows.end(), [&](const ReportRow& r) {
      return r.variant == variant && r.teacher == teacher && r.fractions == fractions;
    });
    if (row == rep.rows.end()) {
      rep.rows.push_back({variant, teacher, fractions, {}, {}, {}, 0.0, 0.0});
      row = rep.rows.end() - 1;
    }
    row->seeds.push_back(parse_uint(run.get("seed"), f));
    row->accuracies.push_back(parse_number(run.get("final_accuracy"), f));
    row->files.push_back(f);
  }
  for (ReportRow& r : rep.rows) {
    r.mean = sample_mean(r.accuracies);
    r.std = sample_std(r.accuracies);
  }
  return rep;
}

void write_report_csv(std::ostream& out, const AggregateReport& r) {
  write_comments(out, r.provenance.comments());
  out << "variant,teacher,fractions,n,mean,std,seeds,accuracies,runs\n";
  for (const ReportRow& row : r.rows) {
    std::vector<std::string> seeds, accs;
    for (auto s : row.seeds) seeds.push_back(std::to_string(s));
    for (double a : row.accuracies) accs.push_back(format_double(a));
    out << row.variant << ',' << row.teacher << ',' << row.fractions << ',' << row.accuracies.size() << ','
        << format_double(row.mean) << ',' << format_double(row.std) << ',' << join(seeds, ';') << ','
        << join(accs, ';') << ',' << join(row.files, ';') << '\n';
  }
}

AggregateReport read_report_csv(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact("missing report " + path.string());
  std::istringstream in(read_file(path));
  AggregateReport rep;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("comment without '='", lineno);
      const std::string k = line.substr(2, eq - 2), v = line.substr(eq + 1);
      if (k == "config_hash") rep.provenance.config_hash = v;
      if (k == "dataset_hash") rep.provenance.dataset_hash = v;
      if (k == "tool_version") rep.provenance.tool_version = v;
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    const auto f = split_on(line, ',');
    if (f.size() != 9) throw ParseError("expected 9 report fields", lineno);
    ReportRow row;
    row.variant = f[0];
    row.teacher = f[1];
    row.fractions = f[2];
    row.mean = parse_number(f[4], "mean");
    row.std = parse_number(f[5], "std");
    for (const auto& s : split_on(f[6], ';')) row.seeds.push_back(parse_uint(s, "seeds"));
    for (const auto& a : split_on(f[7], ';')) row.accuracies.push_back(parse_number(a, "accuracies"));
    row.files = split_on(f[8], ';');
    if (parse_uint(f[3], "n") != row.accuracies.size() || row.seeds.size() != row.accuracies.size() ||
        row.files.size() != row.accuracies.size()) {
      throw ParseError("report row lists inconsistent counts", lineno);
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

AggregateReport reaggregate(const fs::path& report_path) {
  const AggregateReport old = read_report_csv(report_path);
  std::vector<std::string> files;
  for (const ReportRow& r : old.rows) files.insert(files.end(), r.files.begin(), r.files.end());
  return aggregate_runs(report_path.parent_path(), files, old.provenance);
}

// ---- Commands --------------------------------------------------------------

namespace {

std::string run_csv_text(const RunResult& r, const Provenance& p) {
  std::ostringstream s;
  write_run_csv(s, r, p.comments());
  return s.str();
}

std::string report_text(const AggregateReport& r) {
  std::ostringstream s;
  write_report_csv(s, r);
  return s.str();
}

// Prepares every seed up front; workers then share the inputs read-only.
void prepare_all(Experiment& exp, const std::vector<std::uint64_t>& seeds, std::ostream& log) {
  for (std::uint64_t s : seeds) {
    log << "preparing seed " << s << '\n';
    exp.prepare(s);
  }
}

struct Job {
  VariantSpec spec;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> fractions;
  std::string file;  // relative to root
};

void run_jobs(const Experiment& exp, const fs::path& root, const std::vector<Job>& jobs, std::size_t workers,
              std::ostream& log) {
  std::mutex mu;
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const Job& j = jobs[i];
    const RunResult r = exp.run(j.spec, j.seed, j.fractions);
    write_file(root / j.file, run_csv_text(r, exp.provenance()));
    std::lock_guard<std::mutex> lock(mu);
    log << j.file << " accuracy " << format_double(r.final_accuracy) << '\n';
  });
}

std::string report_label(const ReportRow& r) {
  return r.teacher == "pool" ? r.variant : r.variant + ":" + r.teacher;
}

}  // namespace

void cmd_gen(const ExperimentConfig& cfg, const CommandOptions& opt) {
  const fs::path root = root_of(cfg, opt);
  Experiment exp = Experiment::create(cfg);
  const Dataset* parts[3] = {&exp.train(), &exp.validation(), &exp.test()};
  for (int i = 0; i < 3; ++i) {
    std::ostringstream s;
    write_dataset(s, *parts[i]);
    write_file(root / "data" / kSplitFiles[i], s.str());
  }
  nlohmann::ordered_json manifest;
  manifest["dataset"] = canonical_section(cfg, "dataset");
  manifest["dataset_hash"] = exp.provenance().dataset_hash;
  manifest["config_hash"] = cfg.hash;
  manifest["tool_version"] = tool_version();
  manifest["sizes"] = {exp.train().size(), exp.validation().size(), exp.test().size()};
  write_file(root / "data" / "manifest.json", manifest.dump(2) + "\n");
  log_of(opt) << "wrote " << (root / "data").string() << " (" << exp.train().size() << "/" << exp.validation().size()
              << "/" << exp.test().size() << ")\n";
}

void cmd_corpus(const ExperimentConfig& cfg, const CommandOptions& opt) {
  const fs::path root = root_of(cfg, opt);
  const Experiment exp = Experiment::open(cfg, root);
  const auto seeds = seeds_of(cfg, opt);
  const std::size_t nt = exp.candidates().size();
  std::mutex mu;
  parallel_for(seeds.size() * nt, opt.jobs, [&](std::size_t i) {
    const Teacher& t = exp.candidates()[i % nt];
    const std::uint64_t seed = seeds[i / nt];
    const Corpus c = generate_corpus(t, exp.train(), seed);
    std::ostringstream s;
    write_corpus(s, c, exp.train().vocab);
    const fs::path p = root / "corpora" / corpus_cache_name(t, exp.provenance().dataset_hash, seed);
    write_file(p, s.str());
    std::lock_guard<std::mutex> lock(mu);
    log_of(opt) << "wrote " << p.string() << '\n';
  });
}

void cmd_rank(const ExperimentConfig& cfg, const CommandOptions& opt) {
  const fs::path root = root_of(cfg, opt);
  const Experiment exp = Experiment::open(cfg, root);
  const auto seeds = seeds_of(cfg, opt);
  std::mutex mu;
  parallel_for(seeds.size(), opt.jobs, [&](std::size_t i) {
    const StudentModel base = base_student(cfg, seeds[i], exp.validation());
    const Curriculum c = make_curriculum(cfg, exp.train(), base);
    std::ostringstream s;
    write_curriculum(s, c);
    const fs::path p = root / "curriculum" / curriculum_file_name(cfg, seeds[i], exp.provenance().dataset_hash);
    write_file(p, s.str());
    std::lock_guard<std::mutex> lock(mu);
    log_of(opt) << "wrote " << p.string() << '\n';
  });
}

void cmd_teachers(const ExperimentConfig& cfg, const CommandOptions& opt) {
  const fs::path root = root_of(cfg, opt);
  const Experiment exp = Experiment::open(cfg, root);
  std::vector<std::string> admitted;
  try {
    admitted = exp.pool().ids();
  } catch (const NoViableTeacher&) {
  }
  std::ostringstream s;
  write_comments(s, exp.provenance().comments());
  s << "# tau=" << format_double(cfg.tau) << '\n';
  s << "teacher,kind,perf,admitted,rank,definition\n";
  for (std::size_t i = 0; i < exp.candidates().size(); ++i) {
    const Teacher& t = exp.candidates()[i];
    const auto it = std::find(admitted.begin(), admitted.end(), t.id);
    const bool in = it != admitted.end();
    s << csv_field(t.id) << ',' << to_string(t.kind) << ',' << format_double(exp.perf()[i]) << ','
      << (in ? "yes" : "no") << ',' << (in ? std::to_string(it - admitted.begin() + 1) : "") << ','
      << short_hash(t.definition_hash()) << '\n';
    log_of(opt) << t.id << " perf " << format_double(exp.perf()[i]) << (in ? " admitted" : " rejected") << '\n';
  }
  write_file(root / "teachers.csv", s.str());
}

void cmd_distill(const ExperimentConfig& cfg, const CommandOptions& opt) {
  if (!opt.variant) throw ConfigError("--variant: required for distill");
  VariantSpec spec;
  try {
    spec = parse_variant_spec(*opt.variant);
  } catch (const ConfigError& ex) {
    throw ConfigError(std::string("--variant: ") + ex.what());
  }
  const fs::path root = root_of(cfg, opt);
  Experiment exp = Experiment::open(cfg, root);
  const auto seeds = seeds_of(cfg, opt);
  const auto specs = exp.expand({spec});
  prepare_all(exp, seeds, log_of(opt));
  std::vector<Job> jobs;
  for (const VariantSpec& v : specs) {
    for (std::uint64_t s : seeds) jobs.push_back({v, s, std::nullopt, "runs/" + run_file_name(v, s)});
  }
  run_jobs(exp, root, jobs, opt.jobs, log_of(opt));
}

void cmd_suite(const ExperimentConfig& cfg, const CommandOptions& opt) {
  const fs::path root = root_of(cfg, opt);
  Experiment exp = Experiment::open(cfg, root);
  const auto seeds = seeds_of(cfg, opt);
  const auto specs = exp.expand(cfg.variants);
  prepare_all(exp, seeds, log_of(opt));
  std::vector<Job> jobs;
  std::vector<std::string> files;
  for (const VariantSpec& v : specs) {
    for (std::uint64_t s : seeds) {
      jobs.push_back({v, s, std::nullopt, "runs/" + run_file_name(v, s)});
      files.push_back(jobs.back().file);
    }
  }
  run_jobs(exp, root, jobs, opt.jobs, log_of(opt));
  const AggregateReport rep = aggregate_runs(root, files, exp.provenance());
  write_file(root / "report.csv", report_text(rep));
  std::vector<svg::BarGroup> groups;
  for (const ReportRow& r : rep.rows) groups.push_back({report_label(r), {{"accuracy", r.mean, r.std}}});
  write_file(root / "report.svg",
             svg::bar_chart("Test exact match (mean, std over " + std::to_string(seeds.size()) + " seeds)",
                            "accuracy", groups, provenance_footer(rep.provenance)));
  for (const ReportRow& r : rep.rows) {
    log_of(opt) << report_label(r) << " mean " << format_double(r.mean) << " std " << format_double(r.std) << '\n';
  }
}

void cmd_sweep(const ExperimentConfig& cfg, const CommandOptions& opt) {
  const fs::path root = root_of(cfg, opt);
  Experiment exp = Experiment::open(cfg, root);
  if (exp.pool().size() != 2) {
    throw ConfigError("sweep.weak_shares: the partition sweep needs exactly two admitted teachers, got " +
                      std::to_string(exp.pool().size()));
  }
  for (double w : cfg.sweep.weak_shares) {
    if (!(w > 0.0 && w < 1.0)) throw ConfigError("sweep.weak_shares: shares must lie in (0, 1)");
  }
  const auto seeds = seeds_of(cfg, opt);
  prepare_all(exp, seeds, log_of(opt));
  std::vector<Job> jobs;
  std::vector<std::string> files;
  for (double w : cfg.sweep.weak_shares) {
    for (Variant v : {Variant::kClpd, Variant::kPdOnly}) {
      for (std::uint64_t s : seeds) {
        jobs.push_back({{v, std::nullopt}, s, std::vector<double>{w, 1.0 - w}, "runs/sweep/" + sweep_file_name(v, w, s)});
        files.push_back(jobs.back().file);
      }
    }
  }
  run_jobs(exp, root, jobs, opt.jobs, log_of(opt));
  const AggregateReport rep = aggregate_runs(root, files, exp.provenance());
  write_file(root / "sweep.csv", report_text(rep));
  std::vector<svg::Series> series;
  for (Variant v : {Variant::kClpd, Variant::kPdOnly}) {
    svg::Series s;
    s.label = std::string(to_string(v));
    for (const ReportRow& r : rep.rows) {
      if (r.variant != s.label) continue;
      s.x.push_back(parse_number(split_on(r.fractions, ';').at(0), "fractions"));
      s.y.push_back(r.mean);
      s.error.push_back(r.std);
    }
    series.push_back(std::move(s));
  }
  write_file(root / "sweep.svg", svg::line_chart("Accuracy by weak-teacher share", "weak-teacher share",
                                                 "accuracy", series, provenance_footer(rep.provenance)));
  for (const ReportRow& r : rep.rows) {
    log_of(opt) << r.variant << " " << r.fractions << " mean " << format_double(r.mean) << " std "
                << format_double(r.std) << '\n';
  }
}

void cmd_table1(const ExperimentConfig& cfg, const CommandOptions& opt) {
  const fs::path root = root_of(cfg, opt);
  Experiment exp = Experiment::open(cfg, root);
  const auto seeds = seeds_of(cfg, opt);
  prepare_all(exp, seeds, log_of(opt));
  std::vector<std::vector<CompetenceRow>> grid(seeds.size());
  parallel_for(seeds.size(), opt.jobs, [&](std::size_t i) { grid[i] = exp.competence(seeds[i]); });

  std::map<std::string, double> perf;
  for (std::size_t i = 0; i < exp.candidates().size(); ++i) perf[exp.candidates()[i].id] = exp.perf()[i];
  std::vector<std::string> files;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::ostringstream s;
    write_comments(s, exp.provenance().comments());
    s << "teacher,perf,split,seed,teacher_accuracy,alignment_nll,student_accuracy\n";
    for (const CompetenceRow& r : grid[i]) {
      s << csv_field(r.teacher_id) << ',' << format_double(perf[r.teacher_id]) << ',' << r.split << ','
        << seeds[i] << ',' << format_double(r.teacher_accuracy) << ',' << format_double(r.alignment_nll) << ','
        << format_double(r.student_accuracy) << '\n';
    }
    files.push_back("runs/table1/s" + std::to_string(seeds[i]) + ".csv");
    write_file(root / files.back(), s.str());
  }

  // Rows in teacher-perf order, hard split first.
  std::ostringstream s;
  write_comments(s, exp.provenance().comments());
  s << "# fraction=" << format_double(cfg.table1.fraction) << '\n';
  s << "teacher,perf,split,n,teacher_accuracy_mean,teacher_accuracy_std,alignment_nll_mean,alignment_nll_std,"
       "student_accuracy_mean,student_accuracy_std,runs\n";
  std::vector<svg::BarGroup> groups;
  const std::size_t nrows = grid.empty() ? 0 : grid[0].size();
  std::map<std::string, svg::BarGroup> by_metric;
  const char* metrics[3] = {"teacher accuracy", "alignment nll", "student accuracy"};
  for (std::size_t k = 0; k < nrows; ++k) {
    const CompetenceRow& head = grid[0][k];
    std::vector<double> m[3];
    for (const auto& rows : grid) {
      m[0].push_back(rows[k].teacher_accuracy);
      m[1].push_back(rows[k].alignment_nll);
      m[2].push_back(rows[k].student_accuracy);
    }
    s << csv_field(head.teacher_id) << ',' << format_double(perf[head.teacher_id]) << ',' << head.split << ','
      << grid.size();
    for (auto& xs : m) s << ',' << format_double(sample_mean(xs)) << ',' << format_double(sample_std(xs));
    s << ',' << join(files, ';') << '\n';
    for (int j = 0; j < 3; ++j) {
      const std::string key = std::string(metrics[j]) + " (" + head.split + ")";
      auto& g = by_metric[key];
      g.label = key;
      g.bars.push_back({head.teacher_id, sample_mean(m[j]), sample_std(m[j])});
    }
  }
  write_file(root / "table1.csv", s.str());
  for (const char* split : {"hard", "easy"}) {
    for (const char* metric : metrics) {
      auto it = by_metric.find(std::string(metric) + " (" + split + ")");
      if (it != by_metric.end()) groups.push_back(it->second);
    }
  }
  write_file(root / "table1.svg", svg::bar_chart("Teacher competence and alignment by difficulty split", "value",
                                                 groups, provenance_footer(exp.provenance())));
  log_of(opt) << "wrote " << (root / "table1.csv").string() << '\n';
}

}  // namespace clpd
