// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale data supply. Sources are amplitude-modulated harmonic tones
// whose fundamentals come from disjoint per-source bands, which keeps
// mixtures separable without any licensed corpus. Everything is a pure
// function of its seed.

#pragma once

#include <optional>

#include "locoformer/tensor.hpp"

namespace locoformer {

template <class T = float>
struct MixtureItem {
  std::string id;
  int sample_rate = 0;
  Tensor<T> mix;
  std::vector<Tensor<T>> refs;
  Tensor<T> noise;  // defined only when has_noise
  bool has_noise = false;
  std::vector<double> gains_db;  // per-source gains used by dynamic mixing
};

// Sums refs (in index order) and then the noise, so mix - sum(refs) - noise
// is exactly zero at creation.
template <class T>
Tensor<T> sum_sources(const std::vector<Tensor<T>>& refs, const Tensor<T>* noise) {
  Tensor<T> mix = Tensor<T>::zeros(refs.at(0).shape());
  for (const auto& r : refs) {
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += r[i];
  }
  if (noise) {
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += (*noise)[i];
  }
  return mix;
}

// Random amplitude-modulated harmonic tone: fundamental from the source's
// band, 3-5 harmonics with 1/h amplitude falloff and random phases, AM at
// 2-8 Hz, overall level within +/-3 dB of unit RMS.
template <class T>
Tensor<T> synth_source(Rng& rng, int band_index, int band_count, int num_samples, int sr) {
  const double band_lo = 90.0, band_hi = 700.0;
  const double width = (band_hi - band_lo) / band_count;
  const double f0 = band_lo + width * (band_index + rng.uniform(0.05, 0.95));
  const int harmonics = rng.uniform_int(3, 5);
  std::vector<double> amp(harmonics), phase(harmonics);
  for (int h = 0; h < harmonics; ++h) {
    amp[h] = rng.uniform(0.5, 1.0) / (h + 1);
    phase[h] = rng.uniform(0.0, 6.283185307179586);
  }
  const double am_freq = rng.uniform(2.0, 8.0);
  const double am_phase = rng.uniform(0.0, 6.283185307179586);
  const double gain_db = rng.uniform(-3.0, 3.0);

  Tensor<T> s = Tensor<T>::zeros({num_samples});
  double power = 0.0;
  std::vector<double> raw(num_samples);
  for (int i = 0; i < num_samples; ++i) {
    const double t = static_cast<double>(i) / sr;
    double v = 0.0;
    for (int h = 0; h < harmonics; ++h) {
      v += amp[h] * std::sin(6.283185307179586 * f0 * (h + 1) * t + phase[h]);
    }
    v *= 1.0 + 0.5 * std::sin(6.283185307179586 * am_freq * t + am_phase);
    raw[i] = v;
    power += v * v;
  }
  power /= num_samples;
  const double scale = std::pow(10.0, gain_db / 20.0) / std::sqrt(std::max(power, 1e-12));
  for (int i = 0; i < num_samples; ++i) s[i] = static_cast<T>(raw[i] * scale);
  return s;
}

// Mixture of n_srcs band-separated tones, optionally with white noise at an
// SNR drawn uniformly from [snr_min_db, snr_max_db] against the source sum.
template <class T>
MixtureItem<T> synth_mixture(uint64_t seed, int n_srcs, double duration_s, int sr,
                             std::optional<std::pair<double, double>> snr_range_db = {}) {
  if (n_srcs < 1) throw ConfigError("synth_mixture: n_srcs must be >= 1");
  if (duration_s < 0.25) throw ConfigError("synth_mixture: duration must be >= 0.25 s");
  const int n = static_cast<int>(std::lround(duration_s * sr));
  MixtureItem<T> item;
  item.id = "synth" + std::to_string(seed);
  item.sample_rate = sr;
  item.refs.reserve(n_srcs);
  for (int s = 0; s < n_srcs; ++s) {
    Rng rng(Rng::mix(seed, 0x50c0 + s));
    item.refs.push_back(synth_source<T>(rng, s, n_srcs, n, sr));
  }
  if (snr_range_db) {
    Rng rng(Rng::mix(seed, 0xb0153));
    const double snr = rng.uniform(snr_range_db->first, snr_range_db->second);
    Tensor<T> sum = sum_sources<T>(item.refs, nullptr);
    double psig = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) psig += static_cast<double>(sum[i]) * sum[i];
    psig /= static_cast<double>(sum.size());
    const double sigma = std::sqrt(psig * std::pow(10.0, -snr / 10.0));
    item.noise = Tensor<T>::zeros({n});
    for (int i = 0; i < n; ++i) item.noise[i] = static_cast<T>(sigma * rng.normal());
    item.has_noise = true;
  }
  item.mix = sum_sources<T>(item.refs, item.has_noise ? &item.noise : nullptr);
  return item;
}

template <class T = float>
struct TrainExample {
  Tensor<T> mix;
  std::vector<Tensor<T>> refs;
};

// Seeded crop to segment_s seconds (zero-padded when the item is shorter),
// then mix and refs divided by the mixture's standard deviation. Returns
// nothing when the crop is degenerate silence; the caller draws a new seed.
template <class T>
std::optional<TrainExample<T>> segment_normalize(const MixtureItem<T>& item, double segment_s,
                                                 uint64_t seed) {
  if (segment_s <= 0) throw ConfigError("segment_normalize: segment length must be positive");
  const int len = static_cast<int>(item.mix.size());
  const int want = static_cast<int>(std::lround(segment_s * item.sample_rate));
  Rng rng(Rng::mix(seed, 0x5e6));
  int offset = 0;
  if (len > want) offset = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(len - want + 1));

  auto crop = [&](const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::zeros({want});
    const int copy = std::min(want, len - offset);
    for (int i = 0; i < copy; ++i) out[i] = x[offset + i];
    return out;
  };

  TrainExample<T> ex;
  ex.mix = crop(item.mix);
  double mean = 0.0;
  for (int i = 0; i < want; ++i) mean += ex.mix[i];
  mean /= want;
  double var = 0.0;
  for (int i = 0; i < want; ++i) {
    var += (static_cast<double>(ex.mix[i]) - mean) * (static_cast<double>(ex.mix[i]) - mean);
  }
  const double sd = std::sqrt(var / want);
  if (sd < 1e-8) return std::nullopt;

  const T inv = static_cast<T>(1.0 / sd);
  for (int i = 0; i < want; ++i) ex.mix[i] *= inv;
  ex.refs.reserve(item.refs.size());
  for (const auto& r : item.refs) {
    Tensor<T> c = crop(r);
    for (int i = 0; i < want; ++i) c[i] *= inv;
    ex.refs.push_back(std::move(c));
  }
  return ex;
}

// Remix n_srcs pool entries (drawn without replacement) with per-source
// gains uniform in [gain_min_db, gain_max_db].
template <class T>
MixtureItem<T> dynamic_mix(const std::vector<Tensor<T>>& pool, int n_srcs, int sr, uint64_t seed,
                           double gain_min_db = -5.0, double gain_max_db = 5.0) {
  if (static_cast<int>(pool.size()) < n_srcs) {
    throw ConfigError("dynamic_mix: pool of " + std::to_string(pool.size()) +
                      " refs cannot supply " + std::to_string(n_srcs) + " sources");
  }
  Rng rng(Rng::mix(seed, 0xd1a));
  std::vector<int> picks;
  while (static_cast<int>(picks.size()) < n_srcs) {
    const int cand = static_cast<int>(rng.next_u64() % pool.size());
    bool dup = false;
    for (int p : picks) dup |= (p == cand);
    if (!dup) picks.push_back(cand);
  }
  MixtureItem<T> item;
  item.id = "dm" + std::to_string(seed);
  item.sample_rate = sr;
  for (int s = 0; s < n_srcs; ++s) {
    const double g = rng.uniform(gain_min_db, gain_max_db);
    item.gains_db.push_back(g);
    const T scale = static_cast<T>(std::pow(10.0, g / 20.0));
    Tensor<T> r = Tensor<T>::zeros(pool[picks[s]].shape());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = pool[picks[s]][i] * scale;
    item.refs.push_back(std::move(r));
  }
  item.mix = sum_sources<T>(item.refs, nullptr);
  return item;
}

}  // namespace locoformer
