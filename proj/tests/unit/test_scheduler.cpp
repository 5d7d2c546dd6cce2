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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <doctest.h>

#include "clpd/dataset.hpp"
#include "clpd/difficulty.hpp"
#include "clpd/errors.hpp"
#include "clpd/model.hpp"
#include "clpd/rng.hpp"
#include "clpd/scheduler.hpp"
#include "clpd/teachers.hpp"

using namespace clpd;

namespace {

std::vector<std::string> names(std::size_t m) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < m; ++k) out.push_back("t" + std::to_string(k));
  return out;
}

CompetenceProfile flat(double acc) {
  CompetenceProfile p;
  for (int k = 1; k <= 6; ++k) p.accuracy_by_steps[k] = acc;
  return p;
}

// Small end-to-end setup: 60 train examples, two oracle teachers, cached
// corpora and a fresh student.
struct World {
  Dataset train, validation, test;
  Curriculum curriculum;
  TeacherPool pool;
  std::vector<Corpus> corpora;
  StudentModel student;

  explicit World(std::size_t teachers = 2) {
    GenConfig g;
    g.n = 90;
    g.seed = 21;
    g.max_steps = 4;
    const auto parts = split(generate_task(g), {0.67, 0.17, 0.16}, 3);
    train = parts[0];
    validation = parts[1];
    test = parts[2];
    curriculum = build_curriculum(score_by_cot(train));
    std::vector<Teacher> cands;
    std::vector<double> perf;
    for (std::size_t k = 0; k < teachers; ++k) {
      cands.push_back(Teacher::oracle("t" + std::to_string(k), flat(0.6 + 0.2 * static_cast<double>(k))));
      perf.push_back(0.6 + 0.2 * static_cast<double>(k));
    }
    pool = filter_and_order(cands, perf, 0.0);
    for (const Teacher& t : pool.teachers) corpora.push_back(generate_corpus(t, train, 4));
    ModelConfig mc;
    mc.vocab_size = train.vocab.size();
    mc.embed_dim = 8;
    mc.hidden_dim = 12;
    student = init_model(mc, 6);
  }

  RunInputs inputs() const {
    RunInputs in;
    in.train = &train;
    in.validation = &validation;
    in.test = &test;
    in.curriculum = &curriculum;
    in.pool = &pool;
    for (const Corpus& c : corpora) in.corpora[c.teacher_id] = &c;
    in.base_student = &student;
    in.alignment_examples = 10;
    return in;
  }

  RunConfig config(Variant v) const {
    RunConfig cfg;
    cfg.variant = v;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.seed = 3;
    cfg.decode_max_len = 24;
    cfg.stage_eval_examples = 4;
    cfg.optim.lr = 0.05;
    if (is_single_teacher(v)) cfg.fixed_teacher_id = pool.teachers.front().id;
    return cfg;
  }
};

std::size_t segment_of(const SegmentPlan& p, std::size_t pos) {
  std::size_t k = 0;
  while (pos >= p.end(k)) ++k;
  return k;
}

}  // namespace

TEST_CASE("segment boundary examples") {
  CHECK(make_segments(10, names(2)).boundaries == std::vector<std::size_t>{0, 5, 10});
  CHECK(make_segments(10, names(2), std::vector<double>{0.3, 0.7}).boundaries == std::vector<std::size_t>{0, 3, 10});
  CHECK(make_segments(7, names(3)).boundaries == std::vector<std::size_t>{0, 2, 5, 7});
  const SegmentPlan p = make_segments(10, names(2));
  CHECK(p.teacher_ids == names(2));
  CHECK(p.fractions == std::vector<double>{0.5, 0.5});
}

TEST_CASE("segment preconditions") {
  CHECK_THROWS_AS(make_segments(2, names(3)), ConfigError);
  CHECK_THROWS_AS(make_segments(5, {}), ConfigError);
  CHECK_THROWS_AS(make_segments(10, names(2), std::vector<double>{0.3, 0.6}), ConfigError);
  CHECK_THROWS_AS(make_segments(10, names(2), std::vector<double>{1.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(make_segments(10, names(2), std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("segments are contiguous, covering and non-empty for every size") {
  Rng rng(3);
  for (std::size_t n = 3; n <= 200; ++n) {
    for (std::size_t m = 1; m <= std::min<std::size_t>(5, n); ++m) {
      for (int trial = 0; trial < 3; ++trial) {
        std::optional<std::vector<double>> f;
        if (trial > 0) {
          std::vector<double> w(m);
          double s = 0.0;
          for (double& x : w) s += (x = trial == 1 ? uniform01(rng) + 1e-3 : std::pow(uniform01(rng) + 1e-3, 6));
          for (double& x : w) x /= s;
          f = w;
        }
        const SegmentPlan p = make_segments(n, names(m), f);
        REQUIRE_NOTHROW(check_segments(p, n));
        REQUIRE(p.num_segments() == m);
        // Plain rounding wins whenever it already yields non-empty segments.
        std::vector<std::size_t> rounded{0};
        double cum = 0.0;
        for (std::size_t k = 0; k + 1 < m; ++k) {
          cum += p.fractions[k];
          rounded.push_back(static_cast<std::size_t>(std::llround(cum * static_cast<double>(n))));
        }
        rounded.push_back(n);
        bool strictly = true;
        for (std::size_t k = 0; k < m; ++k) strictly = strictly && rounded[k] < rounded[k + 1];
        if (strictly) REQUIRE(p.boundaries == rounded);
      }
    }
  }
}

TEST_CASE("check_segments rejects broken plans") {
  SegmentPlan p = make_segments(10, names(2));
  CHECK_THROWS_AS(check_segments(p, 11), InvariantError);
  SegmentPlan empty = p;
  empty.boundaries = {0, 0, 10};
  CHECK_THROWS_AS(check_segments(empty, 10), InvariantError);
  SegmentPlan ragged = p;
  ragged.fractions.pop_back();
  CHECK_THROWS_AS(check_segments(ragged, 10), InvariantError);
}

TEST_CASE("variant plans cover every example and obey the coupling laws") {
  const World w(3);
  for (Variant v : {Variant::kVanilla, Variant::kClOnly, Variant::kPdOnly, Variant::kClpd, Variant::kClpdRt,
                    Variant::kClpdRd}) {
    CAPTURE(to_string(v));
    const VariantPlan p = plan_variant(w.config(v), w.curriculum, w.pool);
    std::vector<std::size_t> sorted = p.order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> all(w.train.size());
    std::iota(all.begin(), all.end(), 0);
    CHECK(sorted == all);
    CHECK_NOTHROW(check_segments(p.segments, w.train.size()));
  }

  const VariantPlan clpd = plan_variant(w.config(Variant::kClpd), w.curriculum, w.pool);
  const VariantPlan rt = plan_variant(w.config(Variant::kClpdRt), w.curriculum, w.pool);
  const VariantPlan rd = plan_variant(w.config(Variant::kClpdRd), w.curriculum, w.pool);
  CHECK(clpd.order == w.curriculum.order);
  CHECK(clpd.segments.teacher_ids == w.pool.ids());
  std::vector<std::string> reversed = clpd.segments.teacher_ids;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(rt.segments.teacher_ids == reversed);
  CHECK(rt.order == clpd.order);
  CHECK(rd.order == std::vector<std::size_t>(clpd.order.rbegin(), clpd.order.rend()));
  CHECK(rd.segments.teacher_ids == clpd.segments.teacher_ids);

  auto rank = [&](const std::string& id) {
    const auto ids = w.pool.ids();
    return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin());
  };
  for (std::size_t i = 1; i < clpd.order.size(); ++i) {
    const auto& s = w.curriculum.scores;
    CHECK_FALSE(score_less(s[clpd.order[i]], s[clpd.order[i - 1]]));
    CHECK(rank(clpd.segments.teacher_ids[segment_of(clpd.segments, i)]) >=
          rank(clpd.segments.teacher_ids[segment_of(clpd.segments, i - 1)]));
    CHECK(rank(rt.segments.teacher_ids[segment_of(rt.segments, i)]) <=
          rank(rt.segments.teacher_ids[segment_of(rt.segments, i - 1)]));
  }

  const VariantPlan vanilla = plan_variant(w.config(Variant::kVanilla), w.curriculum, w.pool);
  CHECK(vanilla.segments.num_segments() == 1);
  CHECK(vanilla.segments.teacher_ids.front() == w.pool.teachers.front().id);
  CHECK(vanilla.order != w.curriculum.order);
  CHECK(vanilla.order == plan_variant(w.config(Variant::kPdOnly), w.curriculum, w.pool).order);
  RunConfig other_seed = w.config(Variant::kVanilla);
  other_seed.seed = 4;
  CHECK(plan_variant(other_seed, w.curriculum, w.pool).order != vanilla.order);
}

TEST_CASE("run configuration checks") {
  const World w;
  RunConfig vanilla = w.config(Variant::kVanilla);
  vanilla.fixed_teacher_id.reset();
  CHECK_THROWS_AS(vanilla.validate(2), ConfigError);
  CHECK_THROWS_AS(w.config(Variant::kClpd).validate(0), ConfigError);
  CHECK_NOTHROW(w.config(Variant::kClOnly).validate(0));
  RunConfig rr = w.config(Variant::kPdOnly);
  rr.dynamic_rerank = true;
  CHECK_THROWS_AS(rr.validate(2), ConfigError);
  rr.variant = Variant::kClpd;
  CHECK_NOTHROW(rr.validate(2));
  RunConfig tau = w.config(Variant::kClpd);
  tau.tau = 1.5;
  CHECK_THROWS_AS(tau.validate(2), ConfigError);
}

TEST_CASE("stage records follow the segment plan every epoch") {
  const World w;
  for (Variant v : {Variant::kClpd, Variant::kClpdRt, Variant::kVanilla}) {
    const RunConfig cfg = w.config(v);
    const VariantPlan plan = plan_variant(cfg, w.curriculum, w.pool);
    const RunResult r = run_distillation(cfg, w.inputs());
    REQUIRE(r.per_stage.size() == plan.segments.num_segments() * cfg.epochs);
    for (std::size_t i = 0; i < r.per_stage.size(); ++i) {
      const std::size_t k = i % plan.segments.num_segments();
      CHECK(r.per_stage[i].epoch == i / plan.segments.num_segments());
      CHECK(r.per_stage[i].segment == k);
      CHECK(r.per_stage[i].teacher_id == plan.segments.teacher_ids[k]);
      CHECK(std::isfinite(r.per_stage[i].mean_loss));
    }
    CHECK(r.alignment.size() == plan.segments.num_segments());
  }
}

TEST_CASE("zero epochs leaves the student untouched") {
  const World w;
  RunConfig cfg = w.config(Variant::kClpd);
  cfg.epochs = 0;
  StudentModel out;
  const RunResult r = run_distillation(cfg, w.inputs(), &out);
  CHECK(r.per_stage.empty());
  CHECK(out.params == w.student.params);
  CHECK(r.final_accuracy == exact_match_accuracy(w.student, w.test, cfg.decode_max_len));
}

TEST_CASE("single-teacher clpd equals a direct training loop bit for bit") {
  const World w(1);
  RunConfig cfg = w.config(Variant::kClpd);
  cfg.shuffle = false;
  StudentModel staged;
  run_distillation(cfg, w.inputs(), &staged);

  StudentModel direct = w.student;
  OptimState o = OptimState::create(cfg.optim, direct.num_params());
  const Corpus& corpus = w.corpora.front();
  Eigen::VectorXd g;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t start = 0; start < w.train.size(); start += cfg.batch_size) {
      std::vector<TrainItem> items;
      for (std::size_t r = start; r < std::min(w.train.size(), start + cfg.batch_size); ++r) {
        const Example& e = w.train.examples[w.curriculum.order[r]];
        items.push_back({e.prompt, corpus.at(e.id).output_tokens, nullptr});
      }
      batch_loss(direct, items, LossKind::kSeqKd, &g);
      apply_update(direct, o, g, cfg.optim.clip);
    }
  }
  CHECK(staged.params == direct.params);
}

TEST_CASE("one teacher makes clpd, ordered pd_only and cl_only identical") {
  const World w(1);
  RunConfig clpd = w.config(Variant::kClpd);
  RunConfig pd = w.config(Variant::kPdOnly);
  pd.shuffle = false;
  RunConfig cl = w.config(Variant::kClOnly);
  StudentModel a, b, c;
  const RunResult ra = run_distillation(clpd, w.inputs(), &a);
  const RunResult rb = run_distillation(pd, w.inputs(), &b);
  const RunResult rc = run_distillation(cl, w.inputs(), &c);
  CHECK(a.params == b.params);
  CHECK(a.params == c.params);
  CHECK(ra.final_accuracy == rb.final_accuracy);
  CHECK(ra.final_accuracy == rc.final_accuracy);
  REQUIRE(ra.per_stage.size() == rc.per_stage.size());
  for (std::size_t i = 0; i < ra.per_stage.size(); ++i) CHECK(ra.per_stage[i].mean_loss == rc.per_stage[i].mean_loss);
}

TEST_CASE("runs are deterministic and fail on missing corpora") {
  const World w;
  const RunConfig cfg = w.config(Variant::kPdOnly);
  StudentModel a, b;
  const RunResult ra = run_distillation(cfg, w.inputs(), &a);
  const RunResult rb = run_distillation(cfg, w.inputs(), &b);
  CHECK(a.params == b.params);
  std::ostringstream csv_a, csv_b;
  RunResult ta = ra, tb = rb;
  ta.wall_seconds = tb.wall_seconds = 0.0;
  write_run_csv(csv_a, ta, {{"k", "v"}});
  write_run_csv(csv_b, tb, {{"k", "v"}});
  CHECK(csv_a.str() == csv_b.str());
  CHECK(csv_a.str().rfind("# k=v\n", 0) == 0);

  RunInputs in = w.inputs();
  in.corpora.erase(w.pool.teachers.back().id);
  try {
    run_distillation(cfg, in);
    FAIL("expected MissingArtifact");
  } catch (const MissingArtifact& e) {
    CHECK(std::string(e.what()).find(w.pool.teachers.back().id) != std::string::npos);
  }
}

TEST_CASE("dynamic re-ranking keeps the first stage and then reorders") {
  const World w;
  RunConfig cfg = w.config(Variant::kClpd);
  cfg.dynamic_rerank = true;
  std::vector<std::size_t> steps_per_epoch(cfg.epochs, 0);
  const RunResult r = run_distillation(cfg, w.inputs(), nullptr,
                                       [&](std::size_t epoch, std::size_t, const StudentModel&) { ++steps_per_epoch[epoch]; });
  CHECK(r.per_stage.size() == 4);
  CHECK(steps_per_epoch[0] == steps_per_epoch[1]);
  const RunResult plain = run_distillation(w.config(Variant::kClpd), w.inputs());
  CHECK(r.per_stage[0].mean_loss == plain.per_stage[0].mean_loss);
}

TEST_CASE("partition sweep shape and degenerate cases") {
  RunConfig base;
  base.fixed_teacher_id = "ignored";
  std::size_t calls = 0;
  const RunFn fake = [&](const RunConfig& cfg) {
    ++calls;
    CHECK_FALSE(cfg.fixed_teacher_id);
    RunResult r;
    r.config = cfg;
    r.final_accuracy = (*cfg.fractions)[0] + (cfg.variant == Variant::kClpd ? 0.1 : 0.0) + 0.01 * static_cast<double>(cfg.seed);
    return r;
  };
  std::vector<std::vector<double>> grid;
  for (int i = 2; i <= 8; ++i) grid.push_back({i / 10.0, 1.0 - i / 10.0});
  const auto cells = partition_sweep(base, grid, {1, 2, 3}, fake);
  CHECK(cells.size() == 14);
  CHECK(calls == 42);
  for (const auto& c : cells) {
    CHECK(c.accuracies.size() == 3);
    CHECK(c.mean == doctest::Approx(c.weak_share + (c.variant == Variant::kClpd ? 0.1 : 0.0) + 0.02));
    CHECK(c.std == doctest::Approx(0.01));
  }

  const auto same = partition_sweep(base, {{0.5, 0.5}}, {7, 7, 7}, fake);
  CHECK(same[0].std == 0.0);

  const World w;
  const RunConfig cfg = w.config(Variant::kClpd);
  const RunFn real = [&](const RunConfig& c) { return run_distillation(c, w.inputs()); };
  const auto one = partition_sweep(cfg, {{0.5, 0.5}}, {cfg.seed}, real);
  RunConfig direct = cfg;
  direct.fractions = std::vector<double>{0.5, 0.5};
  CHECK(one[0].variant == Variant::kClpd);
  CHECK(one[0].accuracies[0] == run_distillation(direct, w.inputs()).final_accuracy);
  CHECK_THROWS_AS(partition_sweep(base, {}, {1}, fake), ConfigError);
}

TEST_CASE("summary statistics and number formatting") {
  CHECK(sample_std({1.0}) == 0.0);
  CHECK(sample_std({2, 4, 4, 4, 5, 5, 7, 9}) == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-14));
  CHECK(sample_mean({1, 2, 3, 4}) == 2.5);
  CHECK(std::isnan(sample_mean({})));
  for (double x : {0.1, 1.0 / 3.0, 0.368, 1e-17, -2.5, 123456.789}) CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(0.25) == "0.25");
  CHECK(format_fractions({0.2, 0.8}) == "0.2;0.8");
}
