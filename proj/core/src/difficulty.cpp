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

#include "clpd/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "clpd/errors.hpp"

namespace clpd {

namespace {

void check_score(const DifficultyScore& s) {
  if (!std::isfinite(s.primary) || !std::isfinite(s.tiebreak) || s.primary < 0.0) {
    throw ConfigError("invalid difficulty score for example " + std::to_string(s.example_id));
  }
}

std::vector<std::size_t> sorted_indices(const std::vector<DifficultyScore>& scores, std::vector<std::size_t> idx) {
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return score_less(scores[a], scores[b]); });
  return idx;
}

}  // namespace

std::string_view to_string(Estimator e) { return e == Estimator::kCotSteps ? "cot_steps" : "student_loss"; }

Estimator parse_estimator(std::string_view name) {
  if (name == "cot_steps") return Estimator::kCotSteps;
  if (name == "student_loss") return Estimator::kStudentLoss;
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

bool score_less(const DifficultyScore& a, const DifficultyScore& b) {
  if (a.primary != b.primary) return a.primary < b.primary;
  if (a.tiebreak != b.tiebreak) return a.tiebreak < b.tiebreak;
  return a.example_id < b.example_id;
}

std::vector<DifficultyScore> score_by_cot(const Dataset& d) {
  std::vector<DifficultyScore> out;
  out.reserve(d.size());
  for (const Example& e : d.examples) {
    if (!e.cot || !e.step_count || !e.cot_char_len) {
      throw EstimatorUnavailable("example " + std::to_string(e.id) + " has no CoT; cot_steps estimator unavailable");
    }
    out.push_back({static_cast<double>(*e.step_count), static_cast<double>(*e.cot_char_len), e.id});
  }
  return out;
}

std::vector<DifficultyScore> score_by_student_loss(const StudentModel& s, const Dataset& d) {
  if (s.config.vocab_size != d.vocab.size()) {
    throw ConfigError("student vocabulary size " + std::to_string(s.config.vocab_size) +
                      " does not match dataset vocabulary size " + std::to_string(d.vocab.size()));
  }
  std::vector<TokenSeq> targets;
  targets.reserve(d.size());
  for (const Example& e : d.examples) targets.push_back(reference_response(e, d.vocab));
  std::vector<TrainItem> items;
  items.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) items.push_back({d.examples[i].prompt, targets[i], nullptr});
  const std::vector<double> nll = per_item_nll(s, items);
  std::vector<DifficultyScore> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto id = d.examples[i].id;
    // Rounding can push a near-perfect fit a hair below zero.
    out.push_back({std::max(0.0, nll[i]), static_cast<double>(id), id});
  }
  return out;
}

Curriculum build_curriculum(const std::vector<DifficultyScore>& scores, Estimator estimator) {
  if (scores.empty()) throw ConfigError("cannot build a curriculum from no scores");
  for (const auto& s : scores) check_score(s);
  Curriculum c;
  c.scores = scores;
  c.estimator = estimator;
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  c.order = sorted_indices(scores, std::move(idx));
  c.rescored_from = scores.size();
  return c;
}

void check_curriculum(const Curriculum& c) {
  const std::size_t n = c.order.size();
  if (c.scores.size() != n) throw InvariantError("curriculum scores and order differ in length");
  std::vector<std::size_t> sorted = c.order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (sorted[i] != i) throw InvariantError("curriculum order is not a permutation");
  }
  for (std::size_t r = 1; r < n; ++r) {
    if (r == c.rescored_from) continue;
    if (score_less(c.scores[c.order[r]], c.scores[c.order[r - 1]])) {
      throw InvariantError("curriculum scores decrease at rank " + std::to_string(r));
    }
  }
}

std::vector<std::size_t> take_extreme_split(const Curriculum& c, double fraction, SplitEnd end) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("split fraction must be in (0, 1]");
  const auto n = static_cast<double>(c.size());
  // Guard against products like 0.3 * 10 landing just above an integer.
  auto k = static_cast<std::size_t>(std::ceil(fraction * n - 1e-9));
  k = std::min(k, c.size());
  if (end == SplitEnd::kEasiest) return {c.order.begin(), c.order.begin() + static_cast<std::ptrdiff_t>(k)};
  return {c.order.end() - static_cast<std::ptrdiff_t>(k), c.order.end()};
}

Curriculum rerank_remaining(const Curriculum& c, std::size_t consumed, const StudentModel& s, const Dataset& d) {
  if (consumed > c.size()) throw ConfigError("consumed exceeds curriculum size");
  if (c.size() != d.size()) throw ConfigError("curriculum and dataset sizes differ");
  if (consumed == c.size()) return c;
  const std::vector<DifficultyScore> fresh = score_by_student_loss(s, d);
  Curriculum out = c;
  for (std::size_t r = consumed; r < c.size(); ++r) out.scores[c.order[r]] = fresh[c.order[r]];
  std::vector<std::size_t> suffix(c.order.begin() + static_cast<std::ptrdiff_t>(consumed), c.order.end());
  // Stable over ascending dataset index so equal scores fall back to id order.
  std::sort(suffix.begin(), suffix.end());
  suffix = sorted_indices(out.scores, std::move(suffix));
  std::copy(suffix.begin(), suffix.end(), out.order.begin() + static_cast<std::ptrdiff_t>(consumed));
  out.rescored_from = std::min(consumed, c.rescored_from);
  if (consumed == 0) out.estimator = Estimator::kStudentLoss;
  return out;
}

void write_curriculum(std::ostream& out, const Curriculum& c) {
  for (std::size_t r = 0; r < c.size(); ++r) {
    const DifficultyScore& s = c.scores[c.order[r]];
    nlohmann::ordered_json j;
    j["rank"] = r;
    j["example_id"] = s.example_id;
    j["primary"] = s.primary;
    j["tiebreak"] = s.tiebreak;
    j["estimator_tag"] = std::string(to_string(c.estimator_at(r)));
    out << j.dump() << '\n';
  }
}

Curriculum read_curriculum(std::istream& in, const Dataset& d) {
  const auto by_id = index_by_id(d);
  Curriculum c;
  c.scores.assign(d.size(), DifficultyScore{});
  std::vector<bool> seen(d.size(), false);
  std::string line;
  std::size_t lineno = 0;
  bool switched = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const std::size_t rank = j.at("rank").get<std::size_t>();
      if (rank != c.order.size()) throw ParseError("rank " + std::to_string(rank) + " out of sequence", lineno);
      const auto id = j.at("example_id").get<std::int64_t>();
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw ParseError("example_id " + std::to_string(id) + " not in dataset", lineno);
      if (seen[it->second]) throw ParseError("example_id " + std::to_string(id) + " repeated", lineno);
      seen[it->second] = true;
      const Estimator tag = parse_estimator(j.at("estimator_tag").get<std::string>());
      if (rank == 0) {
        c.estimator = tag;
      } else if (tag != c.estimator) {
        if (tag != Estimator::kStudentLoss) throw ParseError("unexpected estimator_tag", lineno);
        if (!switched) c.rescored_from = rank;
        switched = true;
      } else if (switched) {
        throw ParseError("estimator_tag switches back after re-ranking", lineno);
      }
      c.scores[it->second] = {j.at("primary").get<double>(), j.at("tiebreak").get<double>(), id};
      c.order.push_back(it->second);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed curriculum row: ") + e.what(), lineno);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (c.order.size() != d.size()) {
    throw ParseError("curriculum has " + std::to_string(c.order.size()) + " rows for " + std::to_string(d.size()) +
                         " examples",
                     0);
  }
  if (!switched) c.rescored_from = c.size();
  check_curriculum(c);
  return c;
}

}  // namespace clpd
