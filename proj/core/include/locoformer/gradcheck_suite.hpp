// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// The full finite-difference verification suite: every differentiable op,
// the composite blocks, both losses, and the tiny end-to-end model, all in
// double precision at h = 1e-3 against a 1e-4 max-relative-error budget.
// Kink-bearing ops (L1 terms) and sharply curved normalizations are probed
// at conditioned inputs, which changes nothing about which backward code
// runs.

#pragma once

#include "locoformer/gradcheck.hpp"
#include "locoformer/losses.hpp"
#include "locoformer/model.hpp"
#include "locoformer/runtime.hpp"

namespace locoformer {

struct SuiteCheck {
  std::string name;
  double max_rel_err = 0;
  bool pass = false;
};

inline std::vector<SuiteCheck> run_gradient_suite(bool include_model, int seeds_per_op = 20) {
  tune_allocator();
  const double tol = 1e-4;
  std::vector<SuiteCheck> out;
  auto record = [&](const std::string& name, double err) {
    out.push_back({name, err, err < tol});
  };

  auto rand_t = [](std::vector<int> shape, Rng& rng, bool grad = true) {
    Tensor<double> t = Tensor<double>::zeros(std::move(shape), grad);
    fill_uniform(t, rng);
    return t;
  };

  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(1, s));
      const int a = 2 + s % 3, b = 2 + (s / 3) % 4;
      Tensor<double> x = rand_t({a, b}, rng);
      Tensor<double> y = rand_t({a, b}, rng);
      auto fwd = [&] { return sum_all(mul(add(x, y), sub(x, y))); };
      worst = std::max(worst, max_fd_rel_error(fwd, {&x, &y}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("elementwise add/sub/mul/sum", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(2, s));
      const int a = 2 + s % 3, b = 2 + (s / 2) % 3;
      Tensor<double> x = rand_t({a, b}, rng);
      Tensor<double> y = rand_t({a, b}, rng);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.5 + 0.5 * y[i];
      Tensor<double> sc = rand_t({1}, rng);
      auto fwd = [&] {
        return dot(divide(x, y), scale_by(sub_mean(add_scalar(mul_scalar(x, 1.7), 0.3)), sc));
      };
      worst = std::max(worst, max_fd_rel_error(fwd, {&x, &y, &sc}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("divide/scale_by/sub_mean/dot/scalars", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(3, s));
      Tensor<double> x = rand_t({3 + s % 2, 2 + s % 5}, rng);
      auto fwd = [&] { return sum_all(mul(swish(x), softmax_lastdim(x))); };
      worst = std::max(worst, max_fd_rel_error(fwd, {&x}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("swish/softmax_lastdim", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(4, s));
      Tensor<double> x = rand_t({2 + s % 4}, rng);
      // abs kink and log domain kept clear of the probes
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.6 + 0.5 * x[i];
      auto fwd = [&] { return dot(log_nat(x), absolute(x)); };
      worst = std::max(worst, max_fd_rel_error(fwd, {&x}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("log/absolute", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(5, s));
      const int m = 2 + s % 3, k = 2 + (s / 3) % 3, n = 2 + (s / 2) % 4;
      Tensor<double> a = rand_t({m, k}, rng);
      Tensor<double> b = rand_t({k, n}, rng);
      auto fwd = [&] {
        Tensor<double> c = matmul(a, b);
        return sum_all(mul(c, c));
      };
      worst = std::max(worst, max_fd_rel_error(fwd, {&a, &b}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("matmul", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(6, s));
      const int cin = 1 + s % 3, cout = 1 + (s + 1) % 3, k = 1 + s % 5, len = 4 + s % 4;
      Tensor<double> x = rand_t({cin, len}, rng);
      Tensor<double> w = rand_t({cout, cin, k}, rng);
      Tensor<double> b = rand_t({cout}, rng);
      auto fwd = [&] {
        Tensor<double> y = conv1d(x, w, b);
        return sum_all(mul(y, y));
      };
      worst = std::max(worst, max_fd_rel_error(fwd, {&x, &w, &b}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("conv1d", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(7, s));
      const int cin = 1 + s % 3, cout = 1 + (s + 1) % 3, k = 1 + s % 5, len = 4 + s % 4;
      Tensor<double> x = rand_t({cin, len}, rng);
      Tensor<double> w = rand_t({cin, cout, k}, rng);
      Tensor<double> b = rand_t({cout}, rng);
      auto fwd = [&] {
        Tensor<double> y = transposed_conv1d(x, w, b);
        return sum_all(mul(y, y));
      };
      worst = std::max(worst, max_fd_rel_error(fwd, {&x, &w, &b}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("transposed_conv1d", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(8, s));
      const int cin = 1 + s % 2, cout = 1 + (s + 1) % 2;
      Tensor<double> x = rand_t({cin, 3 + s % 3, 4 + s % 3}, rng);
      Tensor<double> wc = rand_t({cout, cin, 3, 3}, rng);
      Tensor<double> wd = rand_t({cin, cout, 3, 3}, rng);
      Tensor<double> b = rand_t({cout}, rng);
      auto fwd = [&] {
        Tensor<double> y = add(conv2d(x, wc, b), transposed_conv2d(x, wd, b));
        return sum_all(mul(y, y));
      };
      worst = std::max(worst,
                       max_fd_rel_error(fwd, {&x, &wc, &wd, &b}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("conv2d/transposed_conv2d", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(9, s));
      const int g = 1 + s % 3;
      const int d = g * 2 * (1 + s % 2);
      Tensor<double> x = rand_t({d, 2 + s % 4}, rng);
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = (x[i] >= 0 ? 1.0 : -1.0) * (0.5 + 0.5 * std::abs(x[i]));
      }
      Tensor<double> gain = rand_t({d}, rng);
      Tensor<double> bias = rand_t({d}, rng);
      auto fwd = [&] {
        Tensor<double> y = rms_group_norm(x, gain, bias, g, 1e-3);
        return sum_all(mul(y, y));
      };
      worst = std::max(worst,
                       max_fd_rel_error(fwd, {&x, &gain, &bias}, {.seed = static_cast<uint64_t>(s)}));
      auto fwd2 = [&] {
        Tensor<double> y = global_layer_norm(x, gain, bias, 1e-3);
        return sum_all(mul(y, y));
      };
      worst = std::max(worst,
                       max_fd_rel_error(fwd2, {&x, &gain, &bias}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("rms_group_norm/global_layer_norm", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(10, s));
      const int heads = 1 + s % 2;
      const int d = heads * 4;
      const int len = 2 + s % 4;
      Tensor<double> q = rand_t({d, len}, rng);
      Tensor<double> k = rand_t({d, len}, rng);
      Tensor<double> v = rand_t({d, len}, rng);
      auto fwd = [&] {
        Tensor<double> y = attention_core(rope_apply(q, heads, 10000.0),
                                          rope_apply(k, heads, 10000.0), v, heads);
        return sum_all(mul(y, y));
      };
      worst = std::max(worst,
                       max_fd_rel_error(fwd, {&q, &k, &v}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("rope_apply/attention_core", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < seeds_per_op; ++s) {
      Rng rng(Rng::mix(11, s));
      Tensor<double> x = rand_t({4, 3, 4}, rng);
      auto fwd = [&] {
        Tensor<double> y = transpose_12(select_channels(x, {3, 0, 2}));
        return sum_all(mul(y, y));
      };
      worst = std::max(worst, max_fd_rel_error(fwd, {&x}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("transpose_12/select_channels", worst);
  }
  {
    double worst = 0;
    const StftConfig cfg{8000, 16, 8};
    for (int s = 0; s < std::min(seeds_per_op, 8); ++s) {
      Rng rng(Rng::mix(12, s));
      const int n = 40 + 8 * s;
      Tensor<double> x = rand_t({n}, rng);
      Tensor<double> probe = rand_t({n}, rng, false);
      auto fwd = [&] { return dot(istft(stft(x, cfg), cfg, n), probe); };
      worst = std::max(worst, max_fd_rel_error(fwd, {&x}, {.seed = static_cast<uint64_t>(s)}));
      Tensor<double> spec = rand_t({2, cfg.frame_count(n), cfg.bins()}, rng);
      auto fwd2 = [&] {
        Tensor<double> m = complex_magnitude(spec);
        return add(sum_all(mul(m, m)), sum_all(mul(istft(spec, cfg, n), istft(spec, cfg, n))));
      };
      worst = std::max(worst, max_fd_rel_error(fwd2, {&spec}, {.seed = static_cast<uint64_t>(s)}));
    }
    record("stft/istft/complex_magnitude", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < std::min(seeds_per_op, 8); ++s) {
      Rng rng(Rng::mix(13, s));
      const int d = 8, len = 5;
      LocoformerBlockParams<double> p = make_block<double>(d, 6, 3, 2, 2, false, false, rng, 0.1);
      Tensor<double> z = rand_t({d, len}, rng);
      std::vector<Tensor<double>*> leaves{&z};
      visit_params(p, "b", [&](const std::string&, Tensor<double>& t) { leaves.push_back(&t); });
      auto fwd = [&] {
        Tensor<double> y = locoformer_block(z, p);
        return sum_all(mul(y, y));
      };
      worst = std::max(worst, max_fd_rel_error(fwd, leaves, {.seed = static_cast<uint64_t>(s)}));
    }
    record("conv_swiglu/mhsa/locoformer_block", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < 5; ++s) {
      Rng rng(Rng::mix(14, s));
      const int n = 64;
      Tensor<double> est = rand_t({n}, rng);
      Tensor<double> est2 = rand_t({n}, rng);
      Tensor<double> ref = rand_t({n}, rng, false);
      Tensor<double> ref2 = rand_t({n}, rng, false);
      std::vector<Tensor<double>> ests{est, est2};
      std::vector<Tensor<double>> refs{ref, ref2};
      auto fwd = [&] { return pit_loss(ests, refs).loss; };
      worst = std::max(worst, max_fd_rel_error(fwd, {&est, &est2},
                                               {.max_coords_per_tensor = 16,
                                                .seed = static_cast<uint64_t>(s)}));
    }
    record("si_snr/pit_loss", worst);
  }
  {
    double worst = 0;
    for (int s = 0; s < 3; ++s) {
      Rng rng(Rng::mix(15, s));
      const int n = 2048;
      Tensor<double> ref = Tensor<double>::zeros({n});
      Tensor<double> est = Tensor<double>::zeros({n}, true);
      for (int i = 0; i < n; ++i) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        ref[i] = sign * (0.1 + 0.9 * rng.uniform());
        est[i] = 5.0 * ref[i];  // all L1 terms clear of their kinks
      }
      auto fwd = [&] { return enh_loss(est, ref); };
      worst = std::max(worst, max_fd_rel_error(fwd, {&est},
                                               {.max_coords_per_tensor = 6,
                                                .seed = static_cast<uint64_t>(s)}));
    }
    record("enh_loss", worst);
  }

  if (include_model) {
    ModelConfig cfg;
    cfg.embed_dim = 8;
    cfg.num_blocks = 1;
    cfg.hidden_dim = 16;
    cfg.kernel_size = 4;
    cfg.num_heads = 2;
    cfg.norm_groups = 2;
    cfg.num_sources = 2;
    cfg.stft = StftConfig{8000, 128, 64};
    // Bounds the RMS-norm curvature so the h = 1e-3 probes stay inside the
    // central-difference truncation budget (the backward path is identical
    // for any eps).
    cfg.norm_eps = 0.1;
    ModelParams<double> p = init_params<double>(cfg, 17);
    Rng rng(18);
    Tensor<double> x = Tensor<double>::zeros({2000});  // 0.25 s at 8 kHz
    fill_uniform(x, rng);
    Tensor<double> probe = Tensor<double>::zeros({2000});
    fill_uniform(probe, rng);
    std::vector<Tensor<double>*> leaves;
    visit_params(p, [&](const std::string&, Tensor<double>& t) { leaves.push_back(&t); });
    auto fwd = [&] {
      ForwardResult<double> r = forward(x, cfg, p);
      return add(dot(r.sources[0], probe), dot(r.sources[1], probe));
    };
    // Seeded coordinate subsample per tensor keeps the whole suite inside
    // its runtime budget; coverage still touches every parameter tensor.
    record("tiny full model (D=8 B=1 H=2 G=2 K=4 C=16 N=2, 0.25 s)",
           max_fd_rel_error(fwd, leaves, {.max_coords_per_tensor = 5, .seed = 99}));
  }
  return out;
}

}  // namespace locoformer
