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

#ifndef CLPD_DISTILL_SAMPLE_HPP_
#define CLPD_DISTILL_SAMPLE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clpd/dataset.hpp"

namespace clpd {

// One teacher response to one example. output_tokens is EOS-terminated;
// token_distributions, when present, holds one probability vector over the
// vocabulary per output position.
struct DistillSample {
  std::int64_t example_id = 0;
  std::string teacher_id;
  TokenSeq output_tokens;
  bool truncated = false;
  std::optional<std::vector<std::vector<double>>> token_distributions;

  bool operator==(const DistillSample&) const = default;
};

}  // namespace clpd

#endif  // CLPD_DISTILL_SAMPLE_HPP_
