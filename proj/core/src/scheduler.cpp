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


#include "clpd/scheduler.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "clpd/errors.hpp"
#include "clpd/rng.hpp"

namespace clpd {

namespace {

std::vector<double> checked_fractions(std::size_t m, const std::optional<std::vector<double>>& fractions) {
  if (!fractions) return std::vector<double>(m, 1.0 / static_cast<double>(m));
  if (fractions->size() != m) {
    throw ConfigError("need " + std::to_string(m) + " fractions, got " + std::to_string(fractions->size()));
  }
  double sum = 0.0;
  for (double f : *fractions) {
    if (!(f > 0.0)) throw ConfigError("segment fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("segment fractions must sum to 1");
  return *fractions;
}

std::vector<TrainItem> make_items(const Dataset& d, std::span<const std::size_t> idx, const Corpus& corpus) {
  std::vector<TrainItem> items;
  items.reserve(idx.size());
  for (std::size_t i : idx) {
    const Example& e = d.examples[i];
    const DistillSample& s = corpus.at(e.id);
    items.push_back({e.prompt, s.output_tokens, s.token_distributions ? &*s.token_distributions : nullptr});
  }
  return items;
}

const Corpus& corpus_for(const RunInputs& in, const std::string& teacher_id) {
  auto it = in.corpora.find(teacher_id);
  if (it == in.corpora.end() || it->second == nullptr) {
    const std::int64_t first = in.train->empty() ? 0 : in.train->examples.front().id;
    throw MissingArtifact("no corpus for teacher '" + teacher_id + "' (needed from example " + std::to_string(first) +
                          ")");
  }
  return *it->second;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kVanilla:
      return "vanilla";
    case Variant::kClOnly:
      return "cl_only";
    case Variant::kPdOnly:
      return "pd_only";
    case Variant::kClpd:
      return "clpd";
    case Variant::kClpdRt:
      return "clpd_rt";
    case Variant::kClpdRd:
      return "clpd_rd";
  }
  return "clpd";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kVanilla, Variant::kClOnly, Variant::kPdOnly, Variant::kClpd, Variant::kClpdRt,
                    Variant::kClpdRd}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

bool is_single_teacher(Variant v) { return v == Variant::kVanilla || v == Variant::kClOnly; }

SegmentPlan make_segments(std::size_t n, const std::vector<std::string>& teacher_ids,
                          const std::optional<std::vector<double>>& fractions) {
  const std::size_t m = teacher_ids.size();
  if (m < 1) throw ConfigError("a segment plan needs at least one teacher");
  if (n < m) throw ConfigError("cannot split " + std::to_string(n) + " examples into " + std::to_string(m) + " segments");
  SegmentPlan plan;
  plan.fractions = checked_fractions(m, fractions);
  plan.teacher_ids = teacher_ids;
  plan.boundaries.assign(m + 1, 0);
  double cum = 0.0;
  for (std::size_t k = 1; k < m; ++k) {
    cum += plan.fractions[k - 1];
    plan.boundaries[k] = static_cast<std::size_t>(std::llround(cum * static_cast<double>(n)));
  }
  plan.boundaries[m] = n;
  // Push up so each segment has at least one example, then pull down from the end.
  for (std::size_t k = 1; k < m; ++k) plan.boundaries[k] = std::max(plan.boundaries[k], plan.boundaries[k - 1] + 1);
  for (std::size_t k = m - 1; k >= 1; --k) plan.boundaries[k] = std::min(plan.boundaries[k], plan.boundaries[k + 1] - 1);
  return plan;
}

SegmentPlan make_segments(const Curriculum& c, const TeacherPool& pool,
                          const std::optional<std::vector<double>>& fractions) {
  return make_segments(c.size(), pool.ids(), fractions);
}

void check_segments(const SegmentPlan& plan, std::size_t n) {
  const std::size_t m = plan.teacher_ids.size();
  if (m == 0 || plan.boundaries.size() != m + 1 || plan.fractions.size() != m) {
    throw InvariantError("segment plan has inconsistent lengths");
  }
  if (plan.boundaries.front() != 0 || plan.boundaries.back() != n) throw InvariantError("segments do not cover [0, N)");
  for (std::size_t k = 0; k < m; ++k) {
    if (plan.boundaries[k] >= plan.boundaries[k + 1]) throw InvariantError("empty or inverted segment");
  }
}

void RunConfig::validate(std::size_t pool_size) const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (is_single_teacher(variant)) {
    if (!fixed_teacher_id) throw ConfigError(std::string(to_string(variant)) + " needs fixed_teacher_id");
  } else if (pool_size < 1) {
    throw ConfigError(std::string(to_string(variant)) + " needs a non-empty teacher pool");
  }
  if (dynamic_rerank && variant != Variant::kClOnly && variant != Variant::kClpd && variant != Variant::kClpdRt) {
    throw ConfigError("dynamic_rerank applies only to easy-to-hard variants (cl_only, clpd, clpd_rt)");
  }
}

VariantPlan plan_variant(const RunConfig& cfg, const Curriculum& c, const TeacherPool& pool) {
  cfg.validate(pool.size());
  const std::size_t n = c.size();
  VariantPlan out;
  auto shuffled = [&] {
    if (!cfg.shuffle) return c.order;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = RngStream(cfg.seed).child("shuffle").engine();
    shuffle_range(order.begin(), order.end(), rng);
    return order;
  };
  std::vector<std::string> ids = pool.ids();
  switch (cfg.variant) {
    case Variant::kVanilla:
      out.order = shuffled();
      out.segments = make_segments(n, {*cfg.fixed_teacher_id});
      break;
    case Variant::kClOnly:
      out.order = c.order;
      out.segments = make_segments(n, {*cfg.fixed_teacher_id});
      break;
    case Variant::kPdOnly:
      out.order = shuffled();
      out.segments = make_segments(n, ids, cfg.fractions);
      break;
    case Variant::kClpd:
      out.order = c.order;
      out.segments = make_segments(n, ids, cfg.fractions);
      break;
    case Variant::kClpdRt:
      out.order = c.order;
      out.segments = make_segments(n, ids, cfg.fractions);
      std::reverse(out.segments.teacher_ids.begin(), out.segments.teacher_ids.end());
      break;
    case Variant::kClpdRd:
      out.order.assign(c.order.rbegin(), c.order.rend());
      out.segments = make_segments(n, ids, cfg.fractions);
      break;
  }
  return out;
}

double train_on_indices(StudentModel& model, OptimState& optim, const Dataset& train,
                        const std::vector<std::size_t>& indices, const Corpus& corpus, LossKind loss,
                        std::size_t batch_size, double clip) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  Eigen::VectorXd grad;
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t end = std::min(indices.size(), start + batch_size);
    const auto items = make_items(train, std::span(indices).subspan(start, end - start), corpus);
    total += batch_loss(model, items, loss, &grad);
    apply_update(model, optim, grad, clip);
    ++batches;
  }
  return batches ? total / static_cast<double>(batches) : 0.0;
}

RunResult run_distillation(const RunConfig& cfg, const RunInputs& in, StudentModel* final_model,
                           const StepHook& hook) {
  if (!in.train || !in.validation || !in.test || !in.curriculum || !in.pool || !in.base_student) {
    throw ConfigError("run inputs are incomplete");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset& train = *in.train;
  if (in.curriculum->size() != train.size()) throw ConfigError("curriculum does not match the train split");

  Curriculum curriculum = *in.curriculum;
  VariantPlan plan = plan_variant(cfg, curriculum, *in.pool);
  check_segments(plan.segments, train.size());
  // Fail before training if any corpus is missing.
  for (const auto& id : plan.segments.teacher_ids) (void)corpus_for(in, id);

  StudentModel model = *in.base_student;
  OptimState optim = OptimState::create(cfg.optim, model.num_params());

  std::vector<std::size_t> stage_eval(std::min(cfg.stage_eval_examples, in.validation->size()));
  std::iota(stage_eval.begin(), stage_eval.end(), 0);

  RunResult result;
  result.config = cfg;
  Eigen::VectorXd grad;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t k = 0; k < plan.segments.num_segments(); ++k) {
      const std::string& teacher = plan.segments.teacher_ids[k];
      const Corpus& corpus = corpus_for(in, teacher);
      const std::size_t seg_begin = plan.segments.begin(k);
      const std::size_t seg_end = plan.segments.end(k);
      double loss_sum = 0.0;
      std::size_t batches = 0;
      // Batches never straddle a segment boundary; the last one may be short.
      for (std::size_t start = seg_begin; start < seg_end; start += cfg.batch_size) {
        const std::size_t end = std::min(seg_end, start + cfg.batch_size);
        const auto items = make_items(train, std::span(plan.order).subspan(start, end - start), corpus);
        loss_sum += batch_loss(model, items, cfg.loss, &grad);
        apply_update(model, optim, grad, cfg.optim.clip);
        ++batches;
        if (hook) hook(epoch, k, model);
      }
      StageRecord rec;
      rec.epoch = epoch;
      rec.segment = k;
      rec.teacher_id = teacher;
      rec.mean_loss = loss_sum / static_cast<double>(batches);
      rec.accuracy = stage_eval.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : exact_match_accuracy(model, *in.validation, stage_eval, cfg.decode_max_len);
      result.per_stage.push_back(rec);

      if (cfg.dynamic_rerank && epoch == 0 && k == 0) {
        curriculum = rerank_remaining(curriculum, seg_end, model, train);
        plan.order = curriculum.order;
      }
    }
  }

  result.final_accuracy = exact_match_accuracy(model, *in.test, cfg.decode_max_len);

  std::vector<std::string> seen;
  for (const auto& id : plan.segments.teacher_ids) {
    if (std::find(seen.begin(), seen.end(), id) != seen.end()) continue;
    seen.push_back(id);
    const Corpus& corpus = corpus_for(in, id);
    const std::size_t count = std::min(in.alignment_examples, train.size());
    if (count == 0) continue;
    std::vector<DistillSample> samples;
    for (std::size_t i = 0; i < count; ++i) samples.push_back(corpus.at(train.examples[i].id));
    result.alignment.emplace_back(id, alignment_nll(model, samples, train).mean_nll);
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (final_model) *final_model = std::move(model);
  return result;
}

StudentModel make_base_student(const ModelConfig& cfg, std::uint64_t seed, const Dataset& warm, std::size_t steps,
                               std::size_t batch_size, const OptimConfig& optim_cfg) {
  StudentModel model = init_model(cfg, derive_seed({seed, tag_hash("student")}));
  if (steps == 0) return model;
  if (warm.empty()) throw ConfigError("warm-start needs a non-empty dataset");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<TokenSeq> targets;
  targets.reserve(warm.size());
  for (const Example& e : warm.examples) targets.push_back(reference_response(e, warm.vocab));
  OptimState optim = OptimState::create(optim_cfg, model.num_params());
  Eigen::VectorXd grad;
  std::size_t next = 0;
  for (std::size_t step = 0; step < steps; ++step) {
    std::vector<TrainItem> items;
    for (std::size_t b = 0; b < batch_size; ++b) {
      items.push_back({warm.examples[next].prompt, targets[next], nullptr});
      next = (next + 1) % warm.size();
    }
    batch_loss(model, items, LossKind::kSeqKd, &grad);
    apply_update(model, optim, grad, optim_cfg.clip);
  }
  return model;
}

std::vector<CompetenceRow> competence_alignment_report(const TeacherPool& pool, const StudentModel& student,
                                                       const Curriculum& train_curriculum, const Dataset& train,
                                                       const Dataset& test,
                                                       const std::map<std::string, const Corpus*>& corpora,
                                                       const CompetenceOptions& opts) {
  const Curriculum test_curriculum = build_curriculum(score_by_cot(test), Estimator::kCotSteps);
  std::vector<CompetenceRow> rows;
  for (const Teacher& t : pool.teachers) {
    auto it = corpora.find(t.id);
    if (it == corpora.end() || it->second == nullptr) throw MissingArtifact("no corpus for teacher '" + t.id + "'");
    const Corpus& corpus = *it->second;
    for (SplitEnd end : {SplitEnd::kHardest, SplitEnd::kEasiest}) {
      const auto idx = take_extreme_split(train_curriculum, opts.fraction, end);
      CompetenceRow row;
      row.teacher_id = t.id;
      row.split = end == SplitEnd::kEasiest ? "easy" : "hard";
      std::vector<DistillSample> samples;
      std::size_t correct = 0;
      for (std::size_t i : idx) {
        const Example& e = train.examples[i];
        samples.push_back(corpus.at(e.id));
        const auto answer = parse_final_answer(samples.back().output_tokens, train.vocab);
        if (answer && *answer == e.answer) ++correct;
      }
      row.teacher_accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
      row.alignment_nll = alignment_nll(student, samples, train).mean_nll;

      StudentModel copy = student;
      OptimState optim = OptimState::create(opts.optim, copy.num_params());
      for (std::size_t e = 0; e < opts.epochs; ++e) {
        train_on_indices(copy, optim, train, idx, corpus, LossKind::kSeqKd, opts.batch_size, opts.optim.clip);
      }
      const auto test_idx = take_extreme_split(test_curriculum, opts.fraction, end);
      row.student_accuracy = exact_match_accuracy(copy, test, test_idx, opts.decode_max_len);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<SweepCell> partition_sweep(const RunConfig& base, const std::vector<std::vector<double>>& fractions,
                                       const std::vector<std::uint64_t>& seeds, const RunFn& run) {
  if (fractions.empty() || seeds.empty()) throw ConfigError("sweep needs fractions and seeds");
  std::vector<SweepCell> cells;
  for (const auto& f : fractions) {
    for (Variant v : {Variant::kClpd, Variant::kPdOnly}) {
      SweepCell cell;
      cell.fractions = f;
      cell.weak_share = f.at(0);
      cell.variant = v;
      cell.seeds = seeds;
      for (std::uint64_t seed : seeds) {
        RunConfig cfg = base;
        cfg.variant = v;
        cfg.fractions = f;
        cfg.seed = seed;
        cfg.fixed_teacher_id.reset();
        cfg.dynamic_rerank = false;
        cell.accuracies.push_back(run(cfg).final_accuracy);
      }
      cell.mean = sample_mean(cell.accuracies);
      cell.std = sample_std(cell.accuracies);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

double sample_mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string format_fractions(const std::vector<double>& f) {
  std::string out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) out += ';';
    out += format_double(f[i]);
  }
  return out;
}

void write_run_csv(std::ostream& out, const RunResult& r,
                   const std::vector<std::pair<std::string, std::string>>& comments) {
  for (const auto& [k, v] : comments) out << "# " << k << '=' << v << '\n';
  const RunConfig& c = r.config;
  std::vector<std::pair<std::string, std::string>> cols = {
      {"variant", std::string(to_string(c.variant))},
      {"teacher", is_single_teacher(c.variant) ? *c.fixed_teacher_id : "pool"},
      {"estimator", std::string(to_string(c.estimator))},
      {"loss", std::string(to_string(c.loss))},
      {"tau", format_double(c.tau)},
      {"fractions", c.fractions ? format_fractions(*c.fractions) : "uniform"},
      {"seed", std::to_string(c.seed)},
      {"final_accuracy", format_double(r.final_accuracy)},
  };
  for (const StageRecord& s : r.per_stage) {
    const std::string p = "e" + std::to_string(s.epoch) + "_s" + std::to_string(s.segment) + "_";
    cols.emplace_back(p + "teacher", s.teacher_id);
    cols.emplace_back(p + "loss", format_double(s.mean_loss));
    cols.emplace_back(p + "accuracy", format_double(s.accuracy));
  }
  for (const auto& [id, nll] : r.alignment) cols.emplace_back("alignment_" + id, format_double(nll));
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].first;
  out << '\n';
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].second;
  out << '\n';
}

}  // namespace clpd
