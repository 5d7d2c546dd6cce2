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

// Per-example difficulty scores and the easy-to-hard ordering built from them.

#ifndef CLPD_DIFFICULTY_HPP_
#define CLPD_DIFFICULTY_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "clpd/dataset.hpp"
#include "clpd/model.hpp"

namespace clpd {

enum class Estimator { kCotSteps, kStudentLoss };
std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

struct DifficultyScore {
  double primary = 0.0;   // step count, or mean per-token NLL in nats
  double tiebreak = 0.0;  // CoT character length, or example id
  std::int64_t example_id = 0;

  bool operator==(const DifficultyScore&) const = default;
};

// Lexicographic (primary, tiebreak, example_id).
bool score_less(const DifficultyScore& a, const DifficultyScore& b);

struct Curriculum {
  // order[r] is the dataset index at rank r.
  std::vector<std::size_t> order;
  // Indexed by dataset index, not by rank.
  std::vector<DifficultyScore> scores;
  Estimator estimator = Estimator::kCotSteps;
  // Ranks >= rescored_from were re-scored by the student-loss estimator.
  // Equals size() when no re-ranking happened.
  std::size_t rescored_from = 0;

  std::size_t size() const { return order.size(); }
  Estimator estimator_at(std::size_t rank) const {
    return rank >= rescored_from ? Estimator::kStudentLoss : estimator;
  }
  bool operator==(const Curriculum&) const = default;
};

// One score per example, in dataset order. Throws EstimatorUnavailable for an
// example without CoT.
std::vector<DifficultyScore> score_by_cot(const Dataset& d);

// Teacher-forced mean NLL of each example's reference response. Throws
// ConfigError when the model vocabulary differs from the dataset's.
std::vector<DifficultyScore> score_by_student_loss(const StudentModel& s, const Dataset& d);

// Stable ascending sort. Throws ConfigError for empty input or a non-finite
// or negative score.
Curriculum build_curriculum(const std::vector<DifficultyScore>& scores, Estimator estimator = Estimator::kCotSteps);

// Throws InvariantError unless order is a permutation and scores along it are
// non-decreasing within each estimator region.
void check_curriculum(const Curriculum& c);

enum class SplitEnd { kEasiest, kHardest };

// First or last ceil(fraction * N) dataset indices along the curriculum.
std::vector<std::size_t> take_extreme_split(const Curriculum& c, double fraction, SplitEnd end);

// Keeps ranks [0, consumed) and re-sorts the rest by the student's loss.
Curriculum rerank_remaining(const Curriculum& c, std::size_t consumed, const StudentModel& s, const Dataset& d);

// JSON lines {rank, example_id, primary, tiebreak, estimator_tag}.
void write_curriculum(std::ostream& out, const Curriculum& c);
// Inverse of write_curriculum for the dataset it was built on. Throws
// ParseError (with line) on malformed rows or ids missing from d.
Curriculum read_curriculum(std::istream& in, const Dataset& d);

}  // namespace clpd

#endif  // CLPD_DIFFICULTY_HPP_
