// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "locoformer/losses.hpp"
#include "locoformer/model.hpp"
#include "locoformer/runtime.hpp"

using namespace locoformer;

namespace {

ModelConfig fixture_config() {
  ModelConfig cfg;
  cfg.embed_dim = 32;
  cfg.num_blocks = 2;
  cfg.hidden_dim = 64;
  cfg.kernel_size = 4;
  cfg.num_heads = 4;
  cfg.norm_groups = 4;
  cfg.num_sources = 2;
  cfg.stft = StftConfig{8000, 128, 64};
  return cfg;
}

void BM_ForwardInference(benchmark::State& state) {
  tune_allocator();
  const ModelConfig cfg = fixture_config();
  ModelParams<float> params = init_params<float>(cfg, 1);
  Rng rng(2);
  Tensor<float> x = Tensor<float>::zeros({8000});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.uniform(-1, 1));
  NoGradGuard ng;
  for (auto _ : state) {
    ForwardResult<float> r = forward(x, cfg, params);
    benchmark::DoNotOptimize(r.sources[0].data());
  }
}
BENCHMARK(BM_ForwardInference)->Unit(benchmark::kMillisecond);

void BM_TrainItem(benchmark::State& state) {
  tune_allocator();
  const ModelConfig cfg = fixture_config();
  ModelParams<float> params = init_params<float>(cfg, 1);
  std::vector<Tensor<float>*> prefs;
  visit_params(params, [&](const std::string&, Tensor<float>& t) { prefs.push_back(&t); });
  Rng rng(2);
  Tensor<float> x = Tensor<float>::zeros({8000});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.uniform(-1, 1));
  std::vector<Tensor<float>> refs{Tensor<float>::zeros({8000}), Tensor<float>::zeros({8000})};
  for (auto& r : refs) {
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<float>(rng.uniform(-1, 1));
  }
  for (auto _ : state) {
    ForwardResult<float> r = forward(x, cfg, params);
    PitResult<float> pit = pit_loss(r.sources, refs);
    backward(pit.loss, 1.0f);
    for (Tensor<float>* p : prefs) p->zero_grad();
    benchmark::DoNotOptimize(pit.loss.data());
  }
}
BENCHMARK(BM_TrainItem)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
