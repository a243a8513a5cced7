// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// STFT analysis/synthesis between waveforms and stacked real/imaginary
// spectrograms [2, T, F]. Both directions are differentiable ops.
//
// Conventions, fixed so frame counts are reproducible:
//   - sqrt-Hann window w[j] = sin(pi*j/N) for analysis and synthesis; its
//     square satisfies constant overlap-add at hop N/2.
//   - the signal is zero-padded by win-hop (= hop) samples at both ends and
//     framed every hop samples, giving T = floor(len/hop) + 1 frames.
//   - F = N/2 + 1 one-sided bins; the transform is a direct DFT with cached
//     double-precision tables, so any even window length works (including
//     768, which is not a power of two).
//   - synthesis overlap-adds windowed inverse frames and divides by the
//     summed squared window, then trims the pad.

#pragma once

#include <map>
#include <mutex>

#include "locoformer/ops.hpp"

namespace locoformer {

struct StftConfig {
  int sample_rate = 8000;
  int win_length = 128;
  int hop_length = 64;

  int fft_size() const { return win_length; }
  int bins() const { return win_length / 2 + 1; }

  void validate() const {
    if (sample_rate <= 0) throw ConfigError("stft: sample_rate must be positive");
    if (win_length < 4 || win_length % 2 != 0) {
      throw ConfigError("stft: win_length " + std::to_string(win_length) + " must be even and >= 4");
    }
    if (hop_length * 2 != win_length) {
      throw ConfigError("stft: hop_length " + std::to_string(hop_length) + " must be win_length/2");
    }
  }

  int frame_count(int num_samples) const { return num_samples / hop_length + 1; }

  bool operator==(const StftConfig&) const = default;
};

inline StftConfig stft_config_for_ms(int sample_rate, int win_ms, int hop_ms) {
  StftConfig c;
  c.sample_rate = sample_rate;
  c.win_length = sample_rate * win_ms / 1000;
  c.hop_length = sample_rate * hop_ms / 1000;
  c.validate();
  return c;
}

namespace detail {

struct DftTables {
  int n = 0;
  std::vector<double> window;    // [n]
  std::vector<double> cos_t;     // [F][n]
  std::vector<double> sin_t;     // [F][n]

  explicit DftTables(int N) : n(N) {
    const int F = N / 2 + 1;
    const double pi = 3.14159265358979323846264338327950288;
    window.resize(N);
    for (int j = 0; j < N; ++j) window[j] = std::sin(pi * j / N);
    cos_t.resize(static_cast<std::size_t>(F) * N);
    sin_t.resize(static_cast<std::size_t>(F) * N);
    for (int f = 0; f < F; ++f) {
      for (int j = 0; j < N; ++j) {
        const double a = 2.0 * pi * f * j / N;
        cos_t[static_cast<std::size_t>(f) * N + j] = std::cos(a);
        sin_t[static_cast<std::size_t>(f) * N + j] = std::sin(a);
      }
    }
  }
};

inline const DftTables& dft_tables(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<DftTables>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<DftTables>(n)).first;
  return *it->second;
}

// Summed squared window at each padded position; positions covered by real
// samples always sum to 1 thanks to COLA, edges inside the pad do not.
inline std::vector<double> window_square_sum(int frames, int win, int hop) {
  std::vector<double> den(static_cast<std::size_t>(frames - 1) * hop + win, 0.0);
  const DftTables& tab = dft_tables(win);
  for (int t = 0; t < frames; ++t) {
    for (int j = 0; j < win; ++j) {
      const double w = tab.window[j];
      den[static_cast<std::size_t>(t) * hop + j] += w * w;
    }
  }
  return den;
}

}  // namespace detail

// Waveform [len] -> spectrogram [2, T, F] (real on channel 0, imaginary on 1).
template <class T>
Tensor<T> stft(const Tensor<T>& x, const StftConfig& cfg) {
  cfg.validate();
  if (x.rank() != 1) throw ShapeError("stft: expects a rank-1 waveform");
  const int n = x.dim(0);
  const int win = cfg.win_length, hop = cfg.hop_length;
  const int frames = cfg.frame_count(n);
  const int F = cfg.bins();
  const auto& tab = detail::dft_tables(win);

  Tensor<T> out = Tensor<T>::zeros({2, frames, F}, wants_grad(x));
  const T* px = x.data();
  T* po = out.data();
  const std::size_t plane = static_cast<std::size_t>(frames) * F;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < frames; ++t) {
    std::vector<double> frame(win, 0.0);
    const int start = t * hop - hop;  // position of frame sample 0 in the signal
    for (int j = 0; j < win; ++j) {
      const int m = start + j;
      if (m >= 0 && m < n) frame[j] = tab.window[j] * static_cast<double>(px[m]);
    }
    for (int f = 0; f < F; ++f) {
      const double* cr = tab.cos_t.data() + static_cast<std::size_t>(f) * win;
      const double* sr = tab.sin_t.data() + static_cast<std::size_t>(f) * win;
      double re = 0.0, im = 0.0;
      for (int j = 0; j < win; ++j) {
        re += frame[j] * cr[j];
        im -= frame[j] * sr[j];
      }
      po[static_cast<std::size_t>(t) * F + f] = static_cast<T>(re);
      po[plane + static_cast<std::size_t>(t) * F + f] = static_cast<T>(im);
    }
  }

  if (out.requires_grad()) {
    out.node = make_node<T>("stft", {x});
    out.node->backprop = [n, win, hop, frames, F, plane](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      const auto& tab = detail::dft_tables(win);
      const T* dy = o.grad();
      T* dx = p.grad();
      std::vector<double> dframe(win);
      for (int t = 0; t < frames; ++t) {
        std::fill(dframe.begin(), dframe.end(), 0.0);
        for (int f = 0; f < F; ++f) {
          const double dre = static_cast<double>(dy[static_cast<std::size_t>(t) * F + f]);
          const double dim = static_cast<double>(dy[plane + static_cast<std::size_t>(t) * F + f]);
          const double* cr = tab.cos_t.data() + static_cast<std::size_t>(f) * win;
          const double* sr = tab.sin_t.data() + static_cast<std::size_t>(f) * win;
          for (int j = 0; j < win; ++j) dframe[j] += dre * cr[j] - dim * sr[j];
        }
        const int start = t * hop - hop;
        for (int j = 0; j < win; ++j) {
          const int m = start + j;
          if (m >= 0 && m < n) dx[m] += static_cast<T>(tab.window[j] * dframe[j]);
        }
      }
    };
  }
  return out;
}

// Spectrogram [2, T, F] -> waveform [out_len].
template <class T>
Tensor<T> istft(const Tensor<T>& spec, const StftConfig& cfg, int out_len) {
  cfg.validate();
  if (spec.rank() != 3 || spec.dim(0) != 2) throw ShapeError("istft: expects [2, T, F]");
  const int frames = spec.dim(1);
  const int F = spec.dim(2);
  const int win = cfg.win_length, hop = cfg.hop_length;
  if (F != cfg.bins()) {
    throw ShapeError("istft: bin count " + std::to_string(F) + " does not match window " +
                     std::to_string(win));
  }
  if (out_len <= 0 || cfg.frame_count(out_len) != frames) {
    throw ShapeError("istft: out_len " + std::to_string(out_len) + " inconsistent with " +
                     std::to_string(frames) + " frames");
  }
  const auto& tab = detail::dft_tables(win);
  const std::vector<double> den = detail::window_square_sum(frames, win, hop);
  const std::size_t plane = static_cast<std::size_t>(frames) * F;
  const double inv_n = 1.0 / win;

  Tensor<T> out = Tensor<T>::zeros({out_len}, wants_grad(spec));
  const T* ps = spec.data();
  std::vector<double> acc(den.size(), 0.0);
  std::vector<double> frame(win);
  for (int t = 0; t < frames; ++t) {
    std::fill(frame.begin(), frame.end(), 0.0);
    for (int f = 0; f < F; ++f) {
      const double cf = (f == 0 || f == win / 2) ? 1.0 : 2.0;
      const double re = cf * inv_n * static_cast<double>(ps[static_cast<std::size_t>(t) * F + f]);
      const double im = cf * inv_n * static_cast<double>(ps[plane + static_cast<std::size_t>(t) * F + f]);
      const double* cr = tab.cos_t.data() + static_cast<std::size_t>(f) * win;
      const double* sr = tab.sin_t.data() + static_cast<std::size_t>(f) * win;
      for (int j = 0; j < win; ++j) frame[j] += re * cr[j] - im * sr[j];
    }
    for (int j = 0; j < win; ++j) {
      acc[static_cast<std::size_t>(t) * hop + j] += tab.window[j] * frame[j];
    }
  }
  T* po = out.data();
  for (int i = 0; i < out_len; ++i) {
    const std::size_t p = static_cast<std::size_t>(i) + hop;
    po[i] = static_cast<T>(acc[p] / std::max(den[p], 1e-10));
  }

  if (out.requires_grad()) {
    out.node = make_node<T>("istft", {spec});
    out.node->backprop = [frames, F, win, hop, out_len, plane, inv_n](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      const auto& tab = detail::dft_tables(win);
      const std::vector<double> den = detail::window_square_sum(frames, win, hop);
      const T* dy = o.grad();
      T* ds = p.grad();
      std::vector<double> dacc(den.size(), 0.0);
      for (int i = 0; i < out_len; ++i) {
        const std::size_t q = static_cast<std::size_t>(i) + hop;
        dacc[q] = static_cast<double>(dy[i]) / std::max(den[q], 1e-10);
      }
      std::vector<double> dframe(win);
      for (int t = 0; t < frames; ++t) {
        for (int j = 0; j < win; ++j) {
          dframe[j] = tab.window[j] * dacc[static_cast<std::size_t>(t) * hop + j];
        }
        for (int f = 0; f < F; ++f) {
          const double cf = (f == 0 || f == win / 2) ? 1.0 : 2.0;
          const double* cr = tab.cos_t.data() + static_cast<std::size_t>(f) * win;
          const double* sr = tab.sin_t.data() + static_cast<std::size_t>(f) * win;
          double dre = 0.0, dim = 0.0;
          for (int j = 0; j < win; ++j) {
            dre += dframe[j] * cr[j];
            dim -= dframe[j] * sr[j];
          }
          ds[static_cast<std::size_t>(t) * F + f] += static_cast<T>(cf * inv_n * dre);
          ds[plane + static_cast<std::size_t>(t) * F + f] += static_cast<T>(cf * inv_n * dim);
        }
      }
    };
  }
  return out;
}

// Magnitude sqrt(re^2 + im^2) of a [2, T, F] spectrogram -> [T, F]. A tiny
// floor inside the root keeps the gradient finite at exact zeros.
template <class T>
Tensor<T> complex_magnitude(const Tensor<T>& spec) {
  if (spec.rank() != 3 || spec.dim(0) != 2) throw ShapeError("complex_magnitude: expects [2, T, F]");
  const std::size_t plane = spec.size() / 2;
  Tensor<T> out = Tensor<T>::zeros({spec.dim(1), spec.dim(2)}, wants_grad(spec));
  const T* ps = spec.data();
  T* po = out.data();
  const T floor = T(1e-12);
  for (std::size_t i = 0; i < plane; ++i) {
    po[i] = std::sqrt(ps[i] * ps[i] + ps[plane + i] * ps[plane + i] + floor);
  }
  if (out.requires_grad()) {
    out.node = make_node<T>("complex_magnitude", {spec});
    out.node->backprop = [plane](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      const T* og = o.grad();
      const T* v = p.data();
      const T* y = o.data();
      T* g = p.grad();
      for (std::size_t i = 0; i < plane; ++i) {
        const T inv = og[i] / y[i];
        g[i] += v[i] * inv;
        g[plane + i] += v[plane + i] * inv;
      }
    };
  }
  return out;
}

}  // namespace locoformer
