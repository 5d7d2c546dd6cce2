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
#include <optional>
#include <sstream>

#include <doctest.h>

#include "clpd/dataset.hpp"
#include "clpd/errors.hpp"
#include "clpd/model.hpp"
#include "clpd/rng.hpp"
#include "clpd/scheduler.hpp"
#include "clpd/teachers.hpp"

using namespace clpd;

namespace {

Dataset task(std::size_t n, std::uint64_t seed, int min_steps = 1, int max_steps = 6) {
  GenConfig g;
  g.n = n;
  g.seed = seed;
  g.min_steps = min_steps;
  g.max_steps = max_steps;
  return generate_task(g);
}

CompetenceProfile flat(double acc, int verbosity = 0, double noise = 0.0) {
  CompetenceProfile p;
  for (int k = 1; k <= 6; ++k) p.accuracy_by_steps[k] = acc;
  p.verbosity = verbosity;
  p.style_noise = noise;
  return p;
}

bool answers_correctly(const DistillSample& s, const Example& e, const Vocabulary& v) {
  return parse_final_answer(s.output_tokens, v) == e.answer;
}

// Fresh tiny student trained on reference responses until it memorizes them.
StudentModel memorizer(const Dataset& d, std::size_t steps) {
  ModelConfig mc;
  mc.vocab_size = d.vocab.size();
  mc.embed_dim = 16;
  mc.hidden_dim = 32;
  OptimConfig oc;
  oc.method = OptimMethod::kAdam;
  oc.lr = 1e-2;
  return make_base_student(mc, 3, d, steps, d.size(), oc);
}

}  // namespace

TEST_CASE("perfect oracle reproduces the reference response") {
  const Dataset d = task(100, 1);
  const Teacher t = Teacher::oracle("perfect", flat(1.0));
  for (const auto& e : d.examples) {
    const DistillSample s = teacher_generate(t, e, RngStream(7));
    CHECK(s.output_tokens == reference_response(e, d.vocab));
    CHECK(s.teacher_id == "perfect");
    CHECK(s.example_id == e.id);
  }
}

TEST_CASE("zero-accuracy oracle always gets the answer wrong") {
  const Dataset d = task(300, 2);
  const Teacher t = Teacher::oracle("broken", flat(0.0));
  for (const auto& e : d.examples) {
    const DistillSample s = teacher_generate(t, e, RngStream(3));
    CHECK_FALSE(answers_correctly(s, e, d.vocab));
    CHECK(s.output_tokens.back() == d.vocab.eos());
  }
}

TEST_CASE("wrong answers come from one perturbed step that propagates") {
  const Dataset d = task(200, 4);
  const Teacher t = Teacher::oracle("broken", flat(0.0));
  const TokenId sep = d.vocab.id(";");
  for (const auto& e : d.examples) {
    const DistillSample s = teacher_generate(t, e, RngStream(5));
    std::vector<std::string> steps;
    std::vector<TokenId> step;
    for (std::size_t i = 0; i < s.output_tokens.size() && s.output_tokens[i] != d.vocab.id("answer"); ++i) {
      if (s.output_tokens[i] == sep) {
        steps.push_back(detokenize(step, d.vocab));
        step.clear();
      } else {
        step.push_back(s.output_tokens[i]);
      }
    }
    REQUIRE(steps.size() == e.cot->size());
    // Each step reads the previous result; exactly one step has bad arithmetic.
    int bad = 0;
    std::optional<std::int64_t> previous;
    for (const std::string& text : steps) {
      std::istringstream in(text);
      std::int64_t a, b, c;
      std::string op, eq;
      in >> a >> op >> b >> eq >> c;
      if (previous) CHECK(a == *previous);
      const std::int64_t want = op == "plus" ? a + b : op == "minus" ? a - b : a * b;
      if (want != c) ++bad;
      previous = c;
    }
    CHECK(bad == 1);
    CHECK(parse_final_answer(s.output_tokens, d.vocab) == previous);
  }
}

TEST_CASE("oracle accuracy at 0.95 is calibrated within 3 sigma") {
  const Dataset d = task(1, 9, 2, 2);
  CompetenceProfile p;
  p.accuracy_by_steps = {{2, 0.95}};
  const Teacher t = Teacher::oracle("t", p);
  int correct = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) correct += answers_correctly(oracle_generate(t, d.examples[0], RngStream(i)), d.examples[0], d.vocab);
  const double rate = static_cast<double>(correct) / n;
  CHECK(std::abs(rate - 0.95) <= 3 * std::sqrt(0.95 * 0.05 / n));
}

TEST_CASE("style knobs never touch the final answer") {
  const Dataset d = task(200, 5);
  const Teacher t = Teacher::oracle("chatty", flat(1.0, 3, 1.0));
  for (const auto& e : d.examples) {
    const DistillSample s = teacher_generate(t, e, RngStream(1));
    CHECK(answers_correctly(s, e, d.vocab));
    CHECK(s.output_tokens.size() > reference_response(e, d.vocab).size());
  }
}

TEST_CASE("oracle output is a pure function of the stream") {
  const Dataset d = task(50, 6);
  const Teacher t = Teacher::oracle("t", flat(0.6, 1, 0.3));
  for (const auto& e : d.examples) {
    CHECK(teacher_generate(t, e, RngStream(11)) == teacher_generate(t, e, RngStream(11)));
  }
}

TEST_CASE("profiles must cover the step count") {
  const Dataset d = task(20, 7, 3, 3);
  CompetenceProfile p;
  p.accuracy_by_steps = {{1, 1.0}, {2, 1.0}};
  const Teacher t = Teacher::oracle("short", p);
  CHECK_THROWS_AS(teacher_generate(t, d.examples[0], RngStream(1)), ProfileCoverageError);
  CompetenceProfile bad = flat(1.2);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("teacher evaluation") {
  const Dataset d = task(100, 8);
  CHECK(evaluate_teacher(Teacher::oracle("p", flat(1.0)), d, RngStream(1)) == 1.0);
  CHECK(evaluate_teacher(Teacher::oracle("z", flat(0.0)), d, RngStream(1)) == 0.0);
  const std::vector<std::size_t> some{0, 1, 2, 3};
  CHECK(evaluate_teacher(Teacher::oracle("p", flat(1.0)), d, some, RngStream(1)) == 1.0);
  CHECK_THROWS_AS(evaluate_teacher(Teacher::oracle("p", flat(1.0)), Dataset{}, RngStream(1)), ConfigError);
}

TEST_CASE("pool filtering and ordering") {
  const std::vector<Teacher> two = {Teacher::oracle("large", flat(1.0)), Teacher::oracle("small", flat(1.0))};
  const TeacherPool both = filter_and_order(two, {0.949, 0.885}, 0.8);
  CHECK(both.ids() == std::vector<std::string>{"small", "large"});
  CHECK(both.perf == std::vector<double>{0.885, 0.949});

  const TeacherPool one = filter_and_order(two, {0.9, 0.5}, 0.8);
  CHECK(one.ids() == std::vector<std::string>{"large"});

  CHECK_THROWS_AS(filter_and_order({two[0]}, {0.3}, 0.8), NoViableTeacher);

  // Ties keep candidate order; perf exactly at tau is admitted.
  const std::vector<Teacher> three = {Teacher::oracle("a", flat(1.0)), Teacher::oracle("b", flat(1.0)),
                                      Teacher::oracle("c", flat(1.0))};
  CHECK(filter_and_order(three, {0.9, 0.8, 0.9}, 0.8).ids() == std::vector<std::string>{"b", "a", "c"});
}

TEST_CASE("pool law over random perf vectors") {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = static_cast<std::size_t>(uniform_int(rng, 1, 6));
    std::vector<Teacher> cands;
    std::vector<double> perf;
    for (std::size_t i = 0; i < m; ++i) {
      cands.push_back(Teacher::oracle("t" + std::to_string(i), flat(1.0)));
      perf.push_back(static_cast<double>(uniform_int(rng, 0, 10)) / 10.0);
    }
    const double tau = static_cast<double>(uniform_int(rng, 0, 10)) / 10.0;
    const std::size_t viable = static_cast<std::size_t>(std::count_if(perf.begin(), perf.end(), [&](double p) { return p >= tau; }));
    if (viable == 0) {
      CHECK_THROWS_AS(filter_and_order(cands, perf, tau), NoViableTeacher);
      continue;
    }
    const TeacherPool pool = filter_and_order(cands, perf, tau);
    REQUIRE(pool.size() == viable);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      CHECK(pool.perf[i] >= tau);
      if (i > 0) CHECK(pool.perf[i - 1] <= pool.perf[i]);
    }
  }
}

TEST_CASE("uniform student alignment is ln V") {
  const Dataset d = task(30, 10);
  ModelConfig mc;
  mc.vocab_size = d.vocab.size();
  mc.embed_dim = 4;
  mc.hidden_dim = 4;
  StudentModel s = init_model(mc, 1);
  s.params.setZero();
  const Corpus c = generate_corpus(Teacher::oracle("t", flat(0.7, 2, 0.2)), d, 1);
  const AlignmentResult r = alignment_nll(s, c.samples, d);
  CHECK(r.mean_nll == doctest::Approx(std::log(d.vocab.size())).epsilon(1e-12));
  CHECK(r.used == d.size());

  std::vector<DistillSample> with_empty = c.samples;
  with_empty[0].output_tokens.clear();
  CHECK(alignment_nll(s, with_empty, d).skipped == 1);
  CHECK_THROWS_AS(alignment_nll(s, {}, d), ConfigError);
}

TEST_CASE("checkpoint teacher decodes greedily and deterministically") {
  const Dataset d = task(5, 12, 1, 2);
  const StudentModel m = memorizer(d, 400);
  const Teacher t = Teacher::checkpoint("ckpt", m, true, 64);
  for (const auto& e : d.examples) {
    const DistillSample s = checkpoint_generate(t, e);
    CHECK(s.output_tokens == reference_response(e, d.vocab));
    CHECK(s == checkpoint_generate(t, e));
    REQUIRE(s.token_distributions);
    REQUIRE(s.token_distributions->size() == s.output_tokens.size());
    for (const auto& p : *s.token_distributions) {
      CHECK(p.size() == d.vocab.size());
      CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-9);
      for (double x : p) CHECK(x >= 0.0);
    }
  }
  CHECK(evaluate_teacher(t, d, RngStream(99)) == 1.0);

  // The teacher's own outputs scored by the same network: self-NLL.
  std::vector<DistillSample> samples;
  std::vector<TrainItem> items;
  for (const auto& e : d.examples) samples.push_back(checkpoint_generate(t, e));
  for (std::size_t i = 0; i < d.size(); ++i) items.push_back({d.examples[i].prompt, samples[i].output_tokens, nullptr});
  const auto nll = per_item_nll(m, items);
  CHECK(alignment_nll(m, samples, d).mean_nll ==
        doctest::Approx(std::accumulate(nll.begin(), nll.end(), 0.0) / static_cast<double>(nll.size())).epsilon(1e-12));
}

TEST_CASE("checkpoint decode past max length is flagged, not an error") {
  const Dataset d = task(3, 13);
  ModelConfig mc;
  mc.vocab_size = d.vocab.size();
  mc.embed_dim = 4;
  mc.hidden_dim = 4;
  StudentModel m = init_model(mc, 2);
  const Teacher t = Teacher::checkpoint("short", m, false, 2);
  const DistillSample s = checkpoint_generate(t, d.examples[0]);
  if (s.truncated) CHECK(s.output_tokens.size() <= 3);
  CHECK_FALSE(s.token_distributions);
}

TEST_CASE("corpus files round-trip and cache names carry their key") {
  const Dataset d = task(40, 14);
  const Teacher t = Teacher::oracle("weak", flat(0.5, 1, 0.2));
  const Corpus c = generate_corpus(t, d, 3);
  REQUIRE(c.samples.size() == d.size());
  CHECK(c.at(d.examples[7].id).example_id == d.examples[7].id);
  std::stringstream s;
  write_corpus(s, c, d.vocab);
  CHECK(read_corpus(s, d.vocab).samples == c.samples);
  CHECK(generate_corpus(t, d, 3).samples == c.samples);
  CHECK_FALSE(generate_corpus(t, d, 4).samples == c.samples);

  const std::string name = corpus_cache_name(t, std::string(64, 'a'), 3);
  CHECK(name.rfind("weak-", 0) == 0);
  CHECK(name.find(std::string(16, 'a')) != std::string::npos);
  CHECK(name.find("-s3") != std::string::npos);
  CHECK(corpus_cache_name(Teacher::oracle("weak", flat(0.6)), std::string(64, 'a'), 3) != name);
}
