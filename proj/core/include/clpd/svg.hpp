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

// Minimal self-contained SVG charts. Output depends only on the inputs, so
// plots are as byte-stable as the tables they come from.

#ifndef CLPD_SVG_HPP_
#define CLPD_SVG_HPP_

#include <string>
#include <utility>
#include <vector>

namespace clpd::svg {

struct Bar {
  std::string label;
  double value = 0.0;
  double error = 0.0;  // half-height of the error bar; 0 draws none
};

struct BarGroup {
  std::string label;
  std::vector<Bar> bars;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> error;  // empty or parallel to y
};

// `footer` lines are printed under the plot (provenance).
std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<BarGroup>& groups,
                      const std::vector<std::string>& footer);
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, const std::vector<std::string>& footer);

std::string escape(const std::string& text);

}  // namespace clpd::svg

#endif  // CLPD_SVG_HPP_
