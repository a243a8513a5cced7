// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// STFT/ISTFT tests. The oracles here (window square sums, closed-form
// windowed-cosine DFT, closed-form single-bin synthesis) are computed with
// plain loops independent of the library transform.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "locoformer/gradcheck.hpp"
#include "locoformer/stft.hpp"

using namespace locoformer;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

std::vector<double> oracle_window(int n) {
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = std::sin(kPi * j / n);
  return w;
}

// Summed squared window over every frame covering padded position p.
double oracle_den(int p, int frames, int win, int hop) {
  const auto w = oracle_window(win);
  double d = 0;
  for (int t = 0; t < frames; ++t) {
    const int j = p - t * hop;
    if (j >= 0 && j < win) d += w[j] * w[j];
  }
  return d;
}

double rel_l2(const Tensor<float>& a, const Tensor<float>& b) {
  double num = 0, den = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    num += d * d;
    den += static_cast<double>(b[i]) * b[i];
  }
  return std::sqrt(num / den);
}

Tensor<float> random_wave(int n, uint64_t seed) {
  Rng rng(seed);
  Tensor<float> x = Tensor<float>::zeros({n});
  for (int i = 0; i < n; ++i) x[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

}  // namespace

TEST_CASE("window squared satisfies constant overlap-add on covered samples") {
  for (int win : {128, 256, 512, 768, 1024}) {
    const int hop = win / 2;
    const int frames = 8;
    // every position past the first hop and before the last frame's tail
    for (int p = hop; p < (frames - 1) * hop; ++p) {
      CHECK(oracle_den(p, frames, win, hop) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("stft: all-zero input gives an all-zero spectrogram") {
  StftConfig cfg;
  Tensor<float> x = Tensor<float>::zeros({1000});
  Tensor<float> s = stft(x, cfg);
  CHECK(s.shape() == std::vector<int>{2, cfg.frame_count(1000), cfg.bins()});
  for (size_t i = 0; i < s.size(); ++i) CHECK(s[i] == 0.0f);
}

TEST_CASE("stft: bin-center cosine concentrates on the expected bin") {
  StftConfig cfg;  // 128/64 @ 8 kHz
  const int n = 8000, N = cfg.win_length, k = 10;
  Tensor<float> x = Tensor<float>::zeros({n});
  for (int i = 0; i < n; ++i) x[i] = static_cast<float>(std::cos(2.0 * kPi * k * i / N));
  Tensor<float> s = stft(x, cfg);
  const int frames = cfg.frame_count(n), F = cfg.bins();
  const size_t plane = static_cast<size_t>(frames) * F;

  // Closed-form windowed-cosine DFT for one interior frame, evaluated
  // numerically with independent loops.
  {
    const int t = 5;
    const int start = t * cfg.hop_length - cfg.hop_length;
    const auto w = oracle_window(N);
    for (int f = 0; f < F; ++f) {
      double re = 0, im = 0;
      for (int j = 0; j < N; ++j) {
        const double v = w[j] * std::cos(2.0 * kPi * k * (start + j) / N);
        re += v * std::cos(2.0 * kPi * f * j / N);
        im -= v * std::sin(2.0 * kPi * f * j / N);
      }
      CHECK(s[static_cast<size_t>(t) * F + f] == doctest::Approx(re).epsilon(1e-4).scale(64));
      CHECK(s[plane + static_cast<size_t>(t) * F + f] == doctest::Approx(im).epsilon(1e-4).scale(64));
    }
  }

  // The analysis window spreads a bin-center tone into its immediate
  // neighbours, so concentration is asserted over k-1..k+1 with k dominant.
  for (int t = 2; t < frames - 2; ++t) {
    double tot = 0, near = 0, peak = 0;
    int argmax = -1;
    for (int f = 0; f < F; ++f) {
      const double re = s[static_cast<size_t>(t) * F + f];
      const double im = s[plane + static_cast<size_t>(t) * F + f];
      const double cf = (f == 0 || f == N / 2) ? 1.0 : 2.0;
      const double e = cf * (re * re + im * im);
      tot += e;
      if (f >= k - 1 && f <= k + 1) near += e;
      if (e > peak) {
        peak = e;
        argmax = f;
      }
    }
    CHECK(argmax == k);
    CHECK(near / tot >= 0.99);
  }
}

TEST_CASE("stft: Parseval with window/overlap compensation") {
  StftConfig cfg;
  const int n = 8000;
  Tensor<float> x = random_wave(n, 99);
  Tensor<float> s = stft(x, cfg);
  const int frames = cfg.frame_count(n), F = cfg.bins(), N = cfg.win_length;
  const size_t plane = static_cast<size_t>(frames) * F;
  double lhs = 0;
  for (int t = 0; t < frames; ++t) {
    for (int f = 0; f < F; ++f) {
      const double re = s[static_cast<size_t>(t) * F + f];
      const double im = s[plane + static_cast<size_t>(t) * F + f];
      const double cf = (f == 0 || f == N / 2) ? 1.0 : 2.0;
      lhs += cf * (re * re + im * im);
    }
  }
  lhs /= N;
  double rhs = 0;
  for (int i = 0; i < n; ++i) {
    rhs += static_cast<double>(x[i]) * x[i] * oracle_den(i + cfg.hop_length, frames, N, cfg.hop_length);
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
}

TEST_CASE("istft(stft(x)) round trip at every supported resolution") {
  for (int win : {128, 256, 512, 768, 1024}) {
    StftConfig cfg{8000, win, win / 2};
    for (uint64_t seed = 0; seed < 3; ++seed) {
      Tensor<float> x = random_wave(8000, seed * 13 + win);
      Tensor<float> y = istft(stft(x, cfg), cfg, 8000);
      CHECK(rel_l2(y, x) < 1e-6);
    }
  }
}

TEST_CASE("stft and istft are linear") {
  StftConfig cfg{8000, 64, 32};
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const float a = static_cast<float>(rng.uniform(-2, 2));
    const float b = static_cast<float>(rng.uniform(-2, 2));
    Tensor<float> x1 = random_wave(500, seed * 2 + 1);
    Tensor<float> x2 = random_wave(500, seed * 2 + 2);
    Tensor<float> mixw = Tensor<float>::zeros({500});
    for (int i = 0; i < 500; ++i) mixw[i] = a * x1[i] + b * x2[i];
    Tensor<float> lhs = stft(mixw, cfg);
    Tensor<float> s1 = stft(x1, cfg);
    Tensor<float> s2 = stft(x2, cfg);
    for (size_t i = 0; i < lhs.size(); ++i) {
      CHECK(lhs[i] == doctest::Approx(a * s1[i] + b * s2[i]).epsilon(1e-6).scale(1));
    }
    Tensor<float> comb = Tensor<float>::zeros(s1.shape());
    for (size_t i = 0; i < comb.size(); ++i) comb[i] = a * s1[i] + b * s2[i];
    Tensor<float> yl = istft(comb, cfg, 500);
    Tensor<float> y1 = istft(s1, cfg, 500);
    Tensor<float> y2 = istft(s2, cfg, 500);
    for (size_t i = 0; i < yl.size(); ++i) {
      CHECK(yl[i] == doctest::Approx(a * y1[i] + b * y2[i]).epsilon(1e-6).scale(1));
    }
  }
}

TEST_CASE("istft: single nonzero bin synthesizes the closed-form windowed sinusoid") {
  StftConfig cfg{8000, 64, 32};
  const int n = 320;
  const int frames = cfg.frame_count(n), F = cfg.bins(), N = cfg.win_length, hop = cfg.hop_length;
  const int t0 = 4, f0 = 7;
  const double amp = 0.8;
  Tensor<float> s = Tensor<float>::zeros({2, frames, F});
  s[static_cast<size_t>(t0) * F + f0] = static_cast<float>(amp);
  Tensor<float> y = istft(s, cfg, n);
  const auto w = oracle_window(N);
  for (int i = 0; i < n; ++i) {
    const int p = i + hop;
    const int j = p - t0 * hop;
    double expect = 0.0;
    if (j >= 0 && j < N) {
      expect = w[j] * (2.0 * amp / N) * std::cos(2.0 * kPi * f0 * j / N) /
               oracle_den(p, frames, N, hop);
    }
    CHECK(y[i] == doctest::Approx(expect).epsilon(1e-5).scale(0.05));
  }
}

TEST_CASE("istft: inconsistent output length raises a dimension error") {
  StftConfig cfg{8000, 64, 32};
  Tensor<float> s = Tensor<float>::zeros({2, 6, cfg.bins()});
  CHECK_THROWS_AS(istft(s, cfg, 8000), ShapeError);
}

TEST_CASE("stft config validation") {
  StftConfig odd{8000, 127, 63};
  Tensor<float> x = Tensor<float>::zeros({400});
  CHECK_THROWS_AS(stft(x, odd), ConfigError);
  StftConfig badhop{8000, 128, 32};
  CHECK_THROWS_AS(stft(x, badhop), ConfigError);
}

TEST_CASE("gradients flow through stft and istft") {
  const double tol = 1e-4;
  StftConfig cfg{8000, 16, 8};
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 7);
    const int n = 40 + static_cast<int>(seed) * 8;
    Tensor<double> x = Tensor<double>::zeros({n}, true);
    fill_uniform(x, rng);
    Tensor<double> probe = Tensor<double>::zeros({n});
    fill_uniform(probe, rng);
    auto fwd = [&] {
      Tensor<double> y = istft(stft(x, cfg), cfg, n);
      return dot(y, probe);
    };
    CHECK(max_fd_rel_error(fwd, {&x}, {.seed = seed}) < tol);

    Tensor<double> spec = Tensor<double>::zeros({2, cfg.frame_count(n), cfg.bins()}, true);
    fill_uniform(spec, rng);
    auto fwd2 = [&] {
      Tensor<double> y = istft(spec, cfg, n);
      return sum_all(mul(y, y));
    };
    CHECK(max_fd_rel_error(fwd2, {&spec}, {.seed = seed}) < tol);
  }
}

TEST_CASE("complex_magnitude matches hypot and differentiates") {
  Rng rng(3);
  Tensor<double> s = Tensor<double>::zeros({2, 3, 5}, true);
  fill_uniform(s, rng);
  Tensor<double> m = complex_magnitude(s);
  for (int i = 0; i < 15; ++i) {
    CHECK(m[i] == doctest::Approx(std::hypot(s[i], s[15 + i])).epsilon(1e-9));
  }
  auto fwd = [&] { return sum_all(mul(complex_magnitude(s), complex_magnitude(s))); };
  CHECK(max_fd_rel_error(fwd, {&s}, {.seed = 1}) < 1e-4);
}
