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

#include <vector>

#include <benchmark/benchmark.h>

#include "clpd/dataset.hpp"
#include "clpd/difficulty.hpp"
#include "clpd/model.hpp"

using namespace clpd;

namespace {

Dataset sample_task(std::size_t n) {
  GenConfig g;
  g.n = n;
  g.seed = 5;
  return generate_task(g);
}

ModelConfig default_model(const Dataset& d) {
  ModelConfig mc;
  mc.vocab_size = d.vocab.size();
  return mc;
}

// Forward and backward over one batch of reference responses.
void BM_BatchLossGrad(benchmark::State& state) {
  const Dataset d = sample_task(static_cast<std::size_t>(state.range(0)));
  const StudentModel m = init_model(default_model(d), 1);
  std::vector<TokenSeq> targets;
  for (const auto& e : d.examples) targets.push_back(reference_response(e, d.vocab));
  std::vector<TrainItem> items;
  for (std::size_t i = 0; i < d.size(); ++i) items.push_back({d.examples[i].prompt, targets[i], nullptr});
  Eigen::VectorXd g;
  for (auto _ : state) benchmark::DoNotOptimize(batch_loss(m, items, LossKind::kSeqKd, &g));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchLossGrad)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ForwardOnly(benchmark::State& state) {
  const Dataset d = sample_task(1);
  const StudentModel m = init_model(default_model(d), 1);
  TokenSeq x = {1};
  x.insert(x.end(), d.examples[0].prompt.begin(), d.examples[0].prompt.end());
  const TokenSeq r = reference_response(d.examples[0], d.vocab);
  x.insert(x.end(), r.begin(), r.end());
  for (auto _ : state) benchmark::DoNotOptimize(forward_logits(m, x));
}
BENCHMARK(BM_ForwardOnly)->Unit(benchmark::kMicrosecond);

void BM_GreedyDecode(benchmark::State& state) {
  const Dataset d = sample_task(static_cast<std::size_t>(state.range(0)));
  const StudentModel m = init_model(default_model(d), 1);
  std::vector<TokenSeq> prompts;
  for (const auto& e : d.examples) prompts.push_back(e.prompt);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_decode_batch(m, prompts, 64));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GreedyDecode)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_BuildCurriculum(benchmark::State& state) {
  const Dataset d = sample_task(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_curriculum(score_by_cot(d)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildCurriculum)->Arg(1000)->Arg(10000);

}  // namespace
BENCHMARK_MAIN();
