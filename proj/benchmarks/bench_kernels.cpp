// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the kernels that dominate a training step. Shapes
// match the desk-scale fixture: D=32, C=64, 127 frames x 65 bins.

#include <benchmark/benchmark.h>

#include "locoformer/gradcheck.hpp"
#include "locoformer/norms.hpp"
#include "locoformer/rope.hpp"
#include "locoformer/runtime.hpp"
#include "locoformer/stft.hpp"

using namespace locoformer;

namespace {

Tensor<float> random_tensor(std::vector<int> shape, uint64_t seed, bool grad = false) {
  Rng rng(seed);
  Tensor<float> t = Tensor<float>::zeros(std::move(shape), grad);
  fill_uniform(t, rng);
  return t;
}

void BM_Conv1dForward(benchmark::State& state) {
  tune_allocator();
  const int cin = 32, cout = 64, k = static_cast<int>(state.range(0)), s = 127, l = 65;
  Tensor<float> x = random_tensor({cin, s, l}, 1);
  Tensor<float> w = random_tensor({cout, cin, k}, 2);
  Tensor<float> b = random_tensor({cout}, 3);
  for (auto _ : state) {
    Tensor<float> y = conv1d(x, w, b);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(cout) * cin * k * s * l);
}
BENCHMARK(BM_Conv1dForward)->Arg(4)->Arg(8);

void BM_Conv1dTrainStep(benchmark::State& state) {
  tune_allocator();
  const int cin = 32, cout = 64, k = 4, s = 127, l = 65;
  Tensor<float> x = random_tensor({cin, s, l}, 1, true);
  Tensor<float> w = random_tensor({cout, cin, k}, 2, true);
  Tensor<float> b = random_tensor({cout}, 3, true);
  for (auto _ : state) {
    Tensor<float> y = conv1d(x, w, b);
    Tensor<float> loss = sum_all(mul(y, y));
    backward(loss);
    x.zero_grad();
    w.zero_grad();
    b.zero_grad();
    benchmark::DoNotOptimize(loss.data());
  }
}
BENCHMARK(BM_Conv1dTrainStep);

void BM_AttentionCore(benchmark::State& state) {
  tune_allocator();
  Tensor<float> q = random_tensor({32, 127, 65}, 1);
  Tensor<float> k = random_tensor({32, 127, 65}, 2);
  Tensor<float> v = random_tensor({32, 127, 65}, 3);
  for (auto _ : state) {
    Tensor<float> y = attention_core(q, k, v, 4);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_AttentionCore);

void BM_RmsGroupNorm(benchmark::State& state) {
  tune_allocator();
  Tensor<float> x = random_tensor({32, 127, 65}, 1);
  Tensor<float> gain = random_tensor({32}, 2);
  Tensor<float> bias = random_tensor({32}, 3);
  for (auto _ : state) {
    Tensor<float> y = rms_group_norm(x, gain, bias, 4, 1e-5f);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_RmsGroupNorm);

void BM_Stft(benchmark::State& state) {
  tune_allocator();
  const int win = static_cast<int>(state.range(0));
  const StftConfig cfg{8000, win, win / 2};
  Tensor<float> x = random_tensor({8000}, 1);
  for (auto _ : state) {
    Tensor<float> s = stft(x, cfg);
    benchmark::DoNotOptimize(s.data());
  }
}
BENCHMARK(BM_Stft)->Arg(128)->Arg(768)->Arg(1024);

}  // namespace
