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

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <doctest.h>

#include "clpd/dataset.hpp"
#include "clpd/errors.hpp"

using namespace clpd;

namespace {

GenConfig gen(std::size_t n, int min_steps, int max_steps, std::uint64_t seed) {
  GenConfig g;
  g.n = n;
  g.min_steps = min_steps;
  g.max_steps = max_steps;
  g.seed = seed;
  return g;
}

// Re-executes a CoT from its text alone; independent of replay_cot.
std::int64_t run_chain(const std::vector<std::string>& cot) {
  std::int64_t value = 0;
  for (const std::string& step : cot) {
    std::istringstream in(step);
    std::int64_t a, b, c;
    std::string op, eq;
    in >> a >> op >> b >> eq >> c;
    if (op == "plus") value = a + b;
    if (op == "minus") value = a - b;
    if (op == "times") value = a * b;
    REQUIRE(value == c);
  }
  return value;
}

}  // namespace

TEST_CASE("empty dataset") { CHECK(generate_task(gen(0, 1, 6, 3)).empty()); }

TEST_CASE("one-step chain start 3 add 4 answers 7") {
  const TokenSeq want = tokenize("Start with 3. Then add 4. What is the result?", Vocabulary::standard());
  bool found = false;
  for (std::uint64_t seed = 0; seed < 20000 && !found; ++seed) {
    const Dataset d = generate_task(gen(1, 1, 1, seed));
    if (d.examples[0].prompt != want) continue;
    found = true;
    CHECK(d.examples[0].answer == 7);
    CHECK(d.examples[0].step_count == 1);
    CHECK(d.examples[0].cot->at(0) == "3 plus 4 = 7");
  }
  CHECK(found);
}

TEST_CASE("step counts are uniform within 3 sigma") {
  const Dataset d = generate_task(gen(1000, 1, 6, 7));
  std::map<int, int> hist;
  for (const auto& e : d.examples) ++hist[*e.step_count];
  const double p = 1.0 / 6.0, mu = 1000 * p, sigma = std::sqrt(1000 * p * (1 - p));
  CHECK(hist.size() == 6);
  for (const auto& [k, c] : hist) {
    CAPTURE(k);
    CHECK(std::abs(c - mu) <= 3 * sigma);
  }
}

TEST_CASE("every generated chain replays to its answer") {
  GenConfig g = gen(3000, 1, 6, 5);
  const Dataset d = generate_task(g);
  const auto& vocab = d.vocab;
  for (const auto& e : d.examples) {
    REQUIRE(e.cot);
    CHECK(static_cast<int>(e.cot->size()) == *e.step_count);
    std::size_t chars = 0;
    for (const auto& s : *e.cot) chars += s.size();
    CHECK(chars == *e.cot_char_len);
    CHECK(run_chain(*e.cot) == e.answer);
    CHECK(replay_cot(e) == e.answer);
    CHECK(std::llabs(e.answer) <= g.limit);
    for (TokenId t : e.prompt) CHECK(static_cast<std::size_t>(t) < vocab.size());
    for (TokenId t : reference_response(e, vocab)) CHECK(static_cast<std::size_t>(t) < vocab.size());
    CHECK(parse_final_answer(reference_response(e, vocab), vocab) == e.answer);
  }
  CHECK_NOTHROW(validate(d));
}

TEST_CASE("generation is a pure function of config and seed") {
  CHECK(generate_task(gen(200, 1, 6, 9)) == generate_task(gen(200, 1, 6, 9)));
  CHECK_FALSE(generate_task(gen(200, 1, 6, 9)) == generate_task(gen(200, 1, 6, 10)));
}

TEST_CASE("bad generator settings are config errors") {
  CHECK_THROWS_AS(generate_task(gen(5, 3, 2, 1)), ConfigError);
  CHECK_THROWS_AS(generate_task(gen(5, 0, 2, 1)), ConfigError);
  GenConfig g = gen(5, 1, 2, 1);
  g.lo = 5;
  g.hi = 4;
  CHECK_THROWS_AS(generate_task(g), ConfigError);
}

TEST_CASE("vocabulary is a bijection with one of each special") {
  const Vocabulary& v = Vocabulary::standard();
  std::set<std::string> seen;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string& t = v.token(static_cast<TokenId>(i));
    CHECK(seen.insert(t).second);
    CHECK(v.id(t) == static_cast<TokenId>(i));
  }
  CHECK(v.token(v.bos()) != v.token(v.eos()));
  CHECK_THROWS_AS(Vocabulary({"<bos>", "<eos>", "<pad>", "a", "a"}), ConfigError);
  CHECK_THROWS_AS(Vocabulary({"<bos>", "<pad>", "a"}), ConfigError);
  CHECK_THROWS_AS(v.id("nonsense"), ParseError);
}

TEST_CASE("numbers serialize digit by digit") {
  const Vocabulary& v = Vocabulary::standard();
  CHECK(number_tokens(407, v) == TokenSeq{v.digit(4), v.digit(0), v.digit(7)});
  CHECK(number_tokens(-12, v) == TokenSeq{v.minus_sign(), v.digit(1), v.digit(2)});
  for (std::int64_t x = -999; x <= 999; ++x) {
    TokenSeq t = number_tokens(x, v);
    t.push_back(v.eos());
    REQUIRE(parse_final_answer(t, v) == x);
  }
  CHECK_FALSE(parse_final_answer(TokenSeq{v.eos()}, v));
}

TEST_CASE("dataset files round-trip") {
  GenConfig g = gen(10, 1, 3, 1);
  const Dataset d = generate_task(g);
  std::stringstream s;
  write_dataset(s, d);
  CHECK(read_dataset(s) == d);

  const auto path = std::filesystem::temp_directory_path() / "clpd_dataset_rt.jsonl";
  save_dataset(d, path);
  CHECK(load_dataset(path) == d);
  std::filesystem::remove(path);
}

TEST_CASE("malformed records report line and field") {
  std::istringstream missing_answer(
      "{\"id\":0,\"prompt\":\"Start with 1. What is the result?\",\"answer\":1}\n"
      "{\"id\":1,\"prompt\":\"Start with 1. What is the result?\"}\n");
  try {
    read_dataset(missing_answer);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("answer") != std::string::npos);
  }
  std::istringstream bad_steps(
      "{\"id\":0,\"prompt\":\"Start with 1. Then add 2. What is the result?\",\"answer\":3,"
      "\"cot\":[\"1 plus 2 = 3\"],\"step_count\":2}\n");
  CHECK_THROWS_AS(read_dataset(bad_steps), InvariantError);
  std::istringstream not_json("{\"id\":0,\n");
  CHECK_THROWS_AS(read_dataset(not_json), ParseError);
}

TEST_CASE("split sizes, coverage and determinism") {
  const Dataset d = generate_task(gen(10, 1, 6, 2));
  const auto parts = split(d, {0.8, 0.1, 0.1}, 4);
  CHECK(parts[0].size() == 8);
  CHECK(parts[1].size() == 1);
  CHECK(parts[2].size() == 1);
  std::multiset<std::int64_t> ids;
  for (const auto& p : parts) {
    for (const auto& e : p.examples) ids.insert(e.id);
  }
  std::multiset<std::int64_t> want;
  for (const auto& e : d.examples) want.insert(e.id);
  CHECK(ids == want);
  CHECK(parts[1].split_tag == SplitTag::kValidation);
  CHECK(split(d, {0.8, 0.1, 0.1}, 4) == parts);

  CHECK_THROWS_AS(split(generate_task(gen(2, 1, 6, 2)), {0.8, 0.1, 0.1}, 1), ConfigError);
  CHECK_THROWS_AS(split(d, {0.8, 0.1, 0.2}, 1), ConfigError);
}

TEST_CASE("split keeps every part non-empty across sizes") {
  const Dataset d = generate_task(gen(60, 1, 6, 3));
  for (std::size_t n = 3; n <= 60; ++n) {
    Dataset sub = d;
    sub.examples.resize(n);
    const auto parts = split(sub, {0.8, 0.1, 0.1}, n);
    CHECK(parts[0].size() + parts[1].size() + parts[2].size() == n);
    for (const auto& p : parts) CHECK_FALSE(p.empty());
  }
}
