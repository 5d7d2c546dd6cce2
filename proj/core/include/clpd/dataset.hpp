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

// Synthetic multi-step arithmetic tasks with ground-truth chain-of-thought,
// the closed word-level vocabulary they are written in, JSON-lines
// persistence and seeded splits.

#ifndef CLPD_DATASET_HPP_
#define CLPD_DATASET_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace clpd {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

// Word tokens that the oracle teachers may insert or substitute. They are part
// of the closed vocabulary so every teacher output stays tokenizable.
inline constexpr std::array<std::string_view, 6> kFillerWords = {"so", "now", "next", "well", "hmm", "ok"};
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 5> kSynonyms = {{
    {"plus", "+"},
    {"minus", "less"},
    {"times", "*"},
    {"=", "equals"},
    {";", ","},
}};

class Vocabulary {
 public:
  // Exactly one each of <bos>, <eos>, <pad> must be present; tokens distinct.
  explicit Vocabulary(std::vector<std::string> tokens);

  // Digits, sign, prompt words, CoT words, synonyms, fillers, specials.
  static const Vocabulary& standard();

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<TokenId> find(std::string_view token) const;
  TokenId id(std::string_view token) const;  // throws ParseError when absent

  TokenId bos() const { return bos_; }
  TokenId eos() const { return eos_; }
  TokenId pad() const { return pad_; }
  TokenId minus_sign() const { return minus_; }
  bool is_digit(TokenId id) const { return id >= digit0_ && id < digit0_ + 10; }
  int digit_value(TokenId id) const { return id - digit0_; }
  TokenId digit(int value) const { return digit0_ + value; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId bos_ = -1, eos_ = -1, pad_ = -1, minus_ = -1, digit0_ = -1;
};

// Word-level tokenization: whitespace separated words, trailing '.', '?', ',',
// ';' split off, integers serialized as an optional '-' then one token per digit.
TokenSeq tokenize(std::string_view text, const Vocabulary& vocab);
// Inverse of tokenize for text produced by the generator.
std::string detokenize(std::span<const TokenId> tokens, const Vocabulary& vocab);
// Sign and digit tokens of an integer.
TokenSeq number_tokens(std::int64_t value, const Vocabulary& vocab);

struct Example {
  std::int64_t id = 0;
  TokenSeq prompt;
  std::int64_t answer = 0;
  std::optional<std::vector<std::string>> cot;
  std::optional<int> step_count;
  std::optional<std::size_t> cot_char_len;

  bool has_cot() const { return cot.has_value(); }
  bool operator==(const Example&) const = default;
};

enum class SplitTag { kTrain, kValidation, kTest };
std::string_view to_string(SplitTag tag);

struct Dataset {
  std::vector<Example> examples;
  Vocabulary vocab = Vocabulary::standard();
  SplitTag split_tag = SplitTag::kTrain;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  bool operator==(const Dataset&) const = default;
};

struct GenConfig {
  std::size_t n = 0;
  int min_steps = 1;
  int max_steps = 6;
  std::int64_t lo = 0;
  std::int64_t hi = 9;
  std::int64_t mul_lo = 2;  // multiply-by-small-constant range
  std::int64_t mul_hi = 3;
  std::int64_t limit = 999;  // |intermediate| bound; chains exceeding it are redrawn
  std::uint64_t seed = 0;
};

// Arithmetic chains "Start with a0. Then <op> v1. ... What is the result?".
// Step counts are uniform over [min_steps, max_steps]; the output is a pure
// function of the config.
Dataset generate_task(const GenConfig& cfg);

// Replays the CoT from the start value; nullopt when the steps are
// inconsistent (operand mismatch, wrong arithmetic, unparsable step).
std::optional<std::int64_t> replay_cot(const Example& example);

// Checks every Example/Dataset invariant, throwing InvariantError.
void validate(const Dataset& d);

// Supervision target for an example: CoT step tokens each closed by ';',
// then "answer", the answer digits and <eos>. Without CoT only the answer part.
TokenSeq reference_response(const Example& example, const Vocabulary& vocab);

// Final numeric answer of a decoded response: the last group of digit tokens
// (with an immediately preceding '-') before <eos> or the end.
std::optional<std::int64_t> parse_final_answer(std::span<const TokenId> response, const Vocabulary& vocab);

void write_dataset(std::ostream& out, const Dataset& d);
Dataset read_dataset(std::istream& in, SplitTag tag = SplitTag::kTrain);
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path, SplitTag tag = SplitTag::kTrain);

// Disjoint covering partition into train/validation/test. Sizes are rounded
// from the fractions with every part kept non-empty; examples inside each
// part keep ascending id order.
std::array<Dataset, 3> split(const Dataset& d, const std::array<double, 3>& fractions, std::uint64_t seed);

// Positions of examples by id.
std::unordered_map<std::int64_t, std::size_t> index_by_id(const Dataset& d);

}  // namespace clpd

#endif  // CLPD_DATASET_HPP_
