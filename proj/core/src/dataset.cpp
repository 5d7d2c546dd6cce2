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

#include "clpd/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "clpd/errors.hpp"
#include "clpd/rng.hpp"

namespace clpd {

namespace {

constexpr std::string_view kBos = "<bos>";
constexpr std::string_view kEos = "<eos>";
constexpr std::string_view kPad = "<pad>";

std::vector<std::string> standard_tokens() {
  std::vector<std::string> t = {std::string(kPad), std::string(kBos), std::string(kEos)};
  for (int d = 0; d < 10; ++d) t.push_back(std::to_string(d));
  t.push_back("-");
  for (const char* w : {"Start", "with", "Then", "add", "subtract", "multiply", "by", "What", "is", "the", "result",
                        ".", "?", "plus", "minus", "times", "=", ";", "answer"}) {
    t.emplace_back(w);
  }
  for (const auto& [canonical, synonym] : kSynonyms) t.emplace_back(synonym);
  for (auto f : kFillerWords) t.emplace_back(f);
  return t;
}

bool is_integer_word(std::string_view w) {
  if (w.empty()) return false;
  std::size_t i = w[0] == '-' ? 1 : 0;
  if (i == w.size()) return false;
  return std::all_of(w.begin() + static_cast<std::ptrdiff_t>(i), w.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<std::int64_t> parse_int(std::string_view w) {
  if (!is_integer_word(w)) return std::nullopt;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || ptr != w.data() + w.size()) return std::nullopt;
  return v;
}

enum class Op { kAdd, kSubtract, kMultiply };

std::int64_t apply_op(Op op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case Op::kAdd:
      return a + b;
    case Op::kSubtract:
      return a - b;
    case Op::kMultiply:
      return a * b;
  }
  return 0;
}

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\n') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw ConfigError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
  auto required = [&](std::string_view t) {
    auto it = index_.find(std::string(t));
    if (it == index_.end()) throw ConfigError("vocabulary lacks " + std::string(t));
    return it->second;
  };
  bos_ = required(kBos);
  eos_ = required(kEos);
  pad_ = required(kPad);
  minus_ = required("-");
  digit0_ = required("0");
  for (int d = 1; d < 10; ++d) {
    if (required(std::to_string(d)) != digit0_ + d) throw ConfigError("digit tokens must be contiguous");
  }
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary vocab(standard_tokens());
  return vocab;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
  if (auto t = find(token)) return *t;
  throw ParseError("unknown token '" + std::string(token) + "'", 0);
}

TokenSeq number_tokens(std::int64_t value, const Vocabulary& vocab) {
  TokenSeq out;
  if (value < 0) out.push_back(vocab.minus_sign());
  const std::string digits = std::to_string(value < 0 ? -value : value);
  for (char c : digits) out.push_back(vocab.digit(c - '0'));
  return out;
}

TokenSeq tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSeq out;
  for (std::string_view word : split_words(text)) {
    std::vector<std::string_view> trailing;
    while (word.size() > 1 && (word.back() == '.' || word.back() == '?' || word.back() == ',' || word.back() == ';')) {
      trailing.push_back(word.substr(word.size() - 1));
      word.remove_suffix(1);
    }
    if (auto v = parse_int(word)) {
      TokenSeq num = number_tokens(*v, vocab);
      // Preserve leading zeros verbatim ("07" is not produced by the generator).
      if (word.size() != std::to_string(*v).size()) {
        num.clear();
        for (char c : word) num.push_back(c == '-' ? vocab.minus_sign() : vocab.digit(c - '0'));
      }
      out.insert(out.end(), num.begin(), num.end());
    } else {
      out.push_back(vocab.id(word));
    }
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) out.push_back(vocab.id(*it));
  }
  return out;
}

std::string detokenize(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const TokenId t = tokens[i];
    const std::string& s = vocab.token(t);
    const bool attach_punct = (s == "." || s == "?") && !out.empty();
    const bool continue_number = vocab.is_digit(t) && i > 0 &&
                                 (vocab.is_digit(tokens[i - 1]) ||
                                  (tokens[i - 1] == vocab.minus_sign() && (i < 2 || !vocab.is_digit(tokens[i - 2]))));
    if (!out.empty() && !attach_punct && !continue_number) out.push_back(' ');
    out += s;
  }
  return out;
}

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain:
      return "train";
    case SplitTag::kValidation:
      return "validation";
    case SplitTag::kTest:
      return "test";
  }
  return "train";
}

Dataset generate_task(const GenConfig& cfg) {
  if (cfg.min_steps < 1 || cfg.min_steps > cfg.max_steps) {
    throw ConfigError("step_range must satisfy 1 <= min_steps <= max_steps");
  }
  if (cfg.lo > cfg.hi) throw ConfigError("value_range is inverted (lo > hi)");
  if (cfg.mul_lo > cfg.mul_hi) throw ConfigError("multiplier range is inverted");
  if (std::max(std::abs(cfg.lo), std::abs(cfg.hi)) > cfg.limit) {
    throw ConfigError("value_range exceeds the intermediate-value bound");
  }

  const Vocabulary& vocab = Vocabulary::standard();
  Rng rng(cfg.seed);
  Dataset d;
  d.examples.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const int k = static_cast<int>(uniform_int(rng, cfg.min_steps, cfg.max_steps));
    // Redraw values only; keeping k fixed keeps the step histogram uniform.
    for (;;) {
      const std::int64_t start = uniform_int(rng, cfg.lo, cfg.hi);
      std::string prompt = "Start with " + std::to_string(start) + ".";
      std::vector<std::string> cot;
      std::int64_t value = start;
      bool overflow = false;
      for (int s = 0; s < k; ++s) {
        const auto op = static_cast<Op>(uniform_int(rng, 0, 2));
        const std::int64_t operand =
            op == Op::kMultiply ? uniform_int(rng, cfg.mul_lo, cfg.mul_hi) : uniform_int(rng, cfg.lo, cfg.hi);
        const std::int64_t next = apply_op(op, value, operand);
        switch (op) {
          case Op::kAdd:
            prompt += " Then add " + std::to_string(operand) + ".";
            cot.push_back(std::to_string(value) + " plus " + std::to_string(operand) + " = " + std::to_string(next));
            break;
          case Op::kSubtract:
            prompt += " Then subtract " + std::to_string(operand) + ".";
            cot.push_back(std::to_string(value) + " minus " + std::to_string(operand) + " = " + std::to_string(next));
            break;
          case Op::kMultiply:
            prompt += " Then multiply by " + std::to_string(operand) + ".";
            cot.push_back(std::to_string(value) + " times " + std::to_string(operand) + " = " + std::to_string(next));
            break;
        }
        value = next;
        if (std::abs(value) > cfg.limit) overflow = true;
      }
      if (overflow) continue;
      prompt += " What is the result?";
      Example e;
      e.id = static_cast<std::int64_t>(i);
      e.prompt = tokenize(prompt, vocab);
      e.answer = value;
      e.step_count = k;
      e.cot_char_len = std::accumulate(cot.begin(), cot.end(), std::size_t{0},
                                       [](std::size_t acc, const std::string& s) { return acc + s.size(); });
      e.cot = std::move(cot);
      d.examples.push_back(std::move(e));
      break;
    }
  }
  return d;
}

std::optional<std::int64_t> replay_cot(const Example& example) {
  if (!example.cot || example.cot->empty()) return std::nullopt;
  std::optional<std::int64_t> previous;
  for (const std::string& step : *example.cot) {
    const auto words = split_words(step);
    if (words.size() != 5 || words[3] != "=") return std::nullopt;
    const auto a = parse_int(words[0]);
    const auto b = parse_int(words[2]);
    const auto c = parse_int(words[4]);
    if (!a || !b || !c) return std::nullopt;
    Op op;
    if (words[1] == "plus") {
      op = Op::kAdd;
    } else if (words[1] == "minus") {
      op = Op::kSubtract;
    } else if (words[1] == "times") {
      op = Op::kMultiply;
    } else {
      return std::nullopt;
    }
    if (previous && *previous != *a) return std::nullopt;
    if (apply_op(op, *a, *b) != *c) return std::nullopt;
    previous = *c;
  }
  return previous;
}

void validate(const Dataset& d) {
  std::unordered_set<std::int64_t> ids;
  for (const Example& e : d.examples) {
    const std::string where = "example " + std::to_string(e.id);
    if (!ids.insert(e.id).second) throw InvariantError("duplicate id in " + where);
    if (e.id < 0) throw InvariantError("negative id in " + where);
    if (e.prompt.empty()) throw InvariantError("empty prompt in " + where);
    for (TokenId t : e.prompt) {
      if (t < 0 || static_cast<std::size_t>(t) >= d.vocab.size()) throw InvariantError("token out of vocab in " + where);
    }
    if (e.cot.has_value() != e.step_count.has_value()) {
      throw InvariantError("cot and step_count must be present together in " + where);
    }
    if (e.cot) {
      if (*e.step_count < 1 || static_cast<std::size_t>(*e.step_count) != e.cot->size()) {
        throw InvariantError("step_count != length(cot) in " + where);
      }
      std::size_t chars = 0;
      for (const auto& s : *e.cot) chars += s.size();
      if (e.cot_char_len && *e.cot_char_len != chars) throw InvariantError("cot_char_len mismatch in " + where);
    }
  }
}

TokenSeq reference_response(const Example& example, const Vocabulary& vocab) {
  TokenSeq out;
  if (example.cot) {
    const TokenId sep = vocab.id(";");
    for (const std::string& step : *example.cot) {
      TokenSeq t = tokenize(step, vocab);
      out.insert(out.end(), t.begin(), t.end());
      out.push_back(sep);
    }
  }
  out.push_back(vocab.id("answer"));
  TokenSeq ans = number_tokens(example.answer, vocab);
  out.insert(out.end(), ans.begin(), ans.end());
  out.push_back(vocab.eos());
  return out;
}

std::optional<std::int64_t> parse_final_answer(std::span<const TokenId> response, const Vocabulary& vocab) {
  std::size_t end = response.size();
  for (std::size_t i = 0; i < response.size(); ++i) {
    if (response[i] == vocab.eos()) {
      end = i;
      break;
    }
  }
  std::size_t last = end;
  while (last > 0 && !vocab.is_digit(response[last - 1])) --last;
  if (last == 0) return std::nullopt;
  std::size_t first = last;
  while (first > 0 && vocab.is_digit(response[first - 1])) --first;
  // Digit groups are bounded by the generator's value limit; longer runs are
  // malformed output.
  if (last - first > 6) return std::nullopt;
  std::int64_t value = 0;
  for (std::size_t i = first; i < last; ++i) value = value * 10 + vocab.digit_value(response[i]);
  if (first > 0 && response[first - 1] == vocab.minus_sign()) value = -value;
  return value;
}

void write_dataset(std::ostream& out, const Dataset& d) {
  for (const Example& e : d.examples) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["prompt"] = detokenize(e.prompt, d.vocab);
    j["answer"] = e.answer;
    if (e.cot) {
      j["cot"] = *e.cot;
      j["step_count"] = *e.step_count;
    }
    out << j.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in, SplitTag tag) {
  Dataset d;
  d.split_tag = tag;
  std::string line;
  std::size_t lineno = 0;
  std::unordered_set<std::int64_t> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
      throw ParseError(std::string("malformed JSON: ") + err.what(), lineno);
    }
    if (!j.is_object()) throw ParseError("record is not an object", lineno);
    auto need = [&](const char* field) -> const nlohmann::json& {
      auto it = j.find(field);
      if (it == j.end()) throw ParseError(std::string("missing field '") + field + "'", lineno);
      return *it;
    };
    Example e;
    try {
      const auto& id = need("id");
      const auto& prompt = need("prompt");
      const auto& answer = need("answer");
      if (!id.is_number_integer()) throw ParseError("field 'id' must be an integer", lineno);
      if (!prompt.is_string()) throw ParseError("field 'prompt' must be a string", lineno);
      if (!answer.is_number_integer()) throw ParseError("field 'answer' must be an integer", lineno);
      e.id = id.get<std::int64_t>();
      e.answer = answer.get<std::int64_t>();
      e.prompt = tokenize(prompt.get<std::string>(), d.vocab);
      if (auto it = j.find("cot"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ParseError("field 'cot' must be an array of strings", lineno);
        std::vector<std::string> cot;
        for (const auto& s : *it) {
          if (!s.is_string()) throw ParseError("field 'cot' must be an array of strings", lineno);
          cot.push_back(s.get<std::string>());
        }
        e.cot = std::move(cot);
      }
      if (auto it = j.find("step_count"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw ParseError("field 'step_count' must be an integer", lineno);
        e.step_count = it->get<int>();
      }
    } catch (const ParseError& err) {
      if (err.line() != 0) throw;
      throw ParseError(err.what(), lineno);
    }
    if (e.cot) {
      if (!e.step_count) throw InvariantError("line " + std::to_string(lineno) + ": cot present without step_count");
      if (static_cast<std::size_t>(*e.step_count) != e.cot->size()) {
        throw InvariantError("line " + std::to_string(lineno) + ": step_count " + std::to_string(*e.step_count) +
                             " != length(cot) " + std::to_string(e.cot->size()));
      }
      std::size_t chars = 0;
      for (const auto& s : *e.cot) chars += s.size();
      e.cot_char_len = chars;
    } else if (e.step_count) {
      throw InvariantError("line " + std::to_string(lineno) + ": step_count present without cot");
    }
    if (e.prompt.empty()) throw InvariantError("line " + std::to_string(lineno) + ": empty prompt");
    if (!ids.insert(e.id).second) throw InvariantError("line " + std::to_string(lineno) + ": duplicate id");
    d.examples.push_back(std::move(e));
  }
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_dataset(out, d);
  if (!out) throw RuntimeFailure("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path, SplitTag tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot read dataset " + path.string());
  return read_dataset(in, tag);
}

std::array<Dataset, 3> split(const Dataset& d, const std::array<double, 3>& fractions, std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f > 0.0)) throw ConfigError("split fractions must be positive");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  const std::size_t n = d.size();
  if (n < 3) throw ConfigError("cannot split a dataset with fewer than 3 examples");

  std::array<std::size_t, 3> sizes{};
  sizes[0] = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  sizes[1] = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
  sizes[0] = std::clamp<std::size_t>(sizes[0], 1, n - 2);
  sizes[1] = std::clamp<std::size_t>(sizes[1], 1, n - 1 - sizes[0]);
  sizes[2] = n - sizes[0] - sizes[1];

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  shuffle_range(perm.begin(), perm.end(), rng);

  std::array<Dataset, 3> out;
  constexpr std::array<SplitTag, 3> tags = {SplitTag::kTrain, SplitTag::kValidation, SplitTag::kTest};
  std::size_t pos = 0;
  for (std::size_t part = 0; part < 3; ++part) {
    std::vector<std::size_t> members(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                                     perm.begin() + static_cast<std::ptrdiff_t>(pos + sizes[part]));
    std::sort(members.begin(), members.end());
    out[part].vocab = d.vocab;
    out[part].split_tag = tags[part];
    for (std::size_t m : members) out[part].examples.push_back(d.examples[m]);
    pos += sizes[part];
  }
  return out;
}

std::unordered_map<std::int64_t, std::size_t> index_by_id(const Dataset& d) {
  std::unordered_map<std::int64_t, std::size_t> idx;
  idx.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) idx.emplace(d.examples[i].id, i);
  return idx;
}

}  // namespace clpd
