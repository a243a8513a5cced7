// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives and evaluation metrics. Separation trains on
// permutation-invariant SI-SNR over full assignments (N <= 4); enhancement on
// a time-domain L1 plus a four-resolution STFT magnitude L1. SDR here is the
// plain energy-ratio form, not the 512-tap projection variant, and results
// are labeled accordingly.

#pragma once

#include <array>
#include <algorithm>

#include "locoformer/stft.hpp"

namespace locoformer {

inline constexpr double kLossEps = 1e-8;

// Scale-invariant SNR in dB as a graph scalar. Both signals are zero-meaned
// internally; the estimate is projected onto the reference and the ratio of
// projection to residual energy is returned in decibels.
template <class T>
Tensor<T> si_snr(const Tensor<T>& est, const Tensor<T>& ref) {
  if (est.shape() != ref.shape()) {
    throw ShapeError("si_snr: estimate " + Tensor<T>::shape_string(est.shape()) +
                     " vs reference " + Tensor<T>::shape_string(ref.shape()));
  }
  const T eps = static_cast<T>(kLossEps);
  Tensor<T> e0 = sub_mean(est);
  Tensor<T> r0 = sub_mean(ref);
  Tensor<T> scale = divide(dot(e0, r0), add_scalar(dot(r0, r0), eps));
  Tensor<T> target = scale_by(r0, scale);
  Tensor<T> noise = sub(e0, target);
  Tensor<T> ratio = divide(add_scalar(dot(target, target), eps),
                           add_scalar(dot(noise, noise), eps));
  return mul_scalar(log_nat(ratio), static_cast<T>(10.0 / 2.30258509299404568402));
}

// Metric twin computed in double with no graph.
inline double si_snr_value(const float* est, const float* ref, std::size_t n) {
  double me = 0, mr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    me += est[i];
    mr += ref[i];
  }
  me /= static_cast<double>(n);
  mr /= static_cast<double>(n);
  double er = 0, rr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    er += (est[i] - me) * (ref[i] - mr);
    rr += (ref[i] - mr) * (ref[i] - mr);
  }
  const double scale = er / (rr + kLossEps);
  double st = 0, sn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = scale * (ref[i] - mr);
    const double d = (est[i] - me) - t;
    st += t * t;
    sn += d * d;
  }
  return 10.0 * std::log10((st + kLossEps) / (sn + kLossEps));
}

inline double si_snr_value(const Tensor<float>& est, const Tensor<float>& ref) {
  if (est.shape() != ref.shape()) throw ShapeError("si_snr: length mismatch");
  return si_snr_value(est.data(), ref.data(), est.size());
}

inline double si_snri_value(const Tensor<float>& est, const Tensor<float>& ref,
                            const Tensor<float>& mix) {
  return si_snr_value(est, ref) - si_snr_value(mix, ref);
}

// Simplified SDR: 10 log10(||ref||^2 / (||est - ref||^2 + eps)).
inline double sdr_value(const Tensor<float>& est, const Tensor<float>& ref) {
  if (est.shape() != ref.shape()) throw ShapeError("sdr: length mismatch");
  double nr = 0, ne = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    nr += static_cast<double>(ref[i]) * ref[i];
    const double d = static_cast<double>(est[i]) - ref[i];
    ne += d * d;
  }
  return 10.0 * std::log10(nr / (ne + kLossEps));
}

inline double sdri_value(const Tensor<float>& est, const Tensor<float>& ref,
                         const Tensor<float>& mix) {
  return sdr_value(est, ref) - sdr_value(mix, ref);
}

template <class T>
struct PitResult {
  Tensor<T> loss;               // scalar node: -mean SI-SNR under the best assignment
  std::vector<int> permutation;  // permutation[j] = estimate index assigned to reference j
  std::vector<std::vector<double>> pair_db;  // [estimate][reference]
};

// Permutation-invariant SI-SNR over all N! assignments, N <= 4. The chosen
// assignment is treated as a constant, so gradients flow only through its
// pairs.
template <class T>
PitResult<T> pit_loss(const std::vector<Tensor<T>>& est, const std::vector<Tensor<T>>& ref) {
  const int n = static_cast<int>(est.size());
  if (n == 0 || est.size() != ref.size()) {
    throw ShapeError("pit_loss: need matching non-empty estimate/reference sets");
  }
  if (n > 4) {
    throw ConfigError("pit_loss: full assignment enumeration supports at most 4 sources, got " +
                      std::to_string(n));
  }
  std::vector<std::vector<Tensor<T>>> nodes(n, std::vector<Tensor<T>>(n));
  PitResult<T> res;
  res.pair_db.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      nodes[i][j] = si_snr(est[i], ref[j]);
      res.pair_db[i][j] = static_cast<double>(nodes[i][j].item());
    }
  }
  std::vector<int> perm(n), best(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  double best_mean = -std::numeric_limits<double>::infinity();
  do {
    double mean = 0;
    for (int j = 0; j < n; ++j) mean += res.pair_db[perm[j]][j];
    mean /= n;
    if (mean > best_mean) {
      best_mean = mean;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Tensor<T> acc = nodes[best[0]][0];
  for (int j = 1; j < n; ++j) acc = add(acc, nodes[best[j]][j]);
  res.loss = mul_scalar(acc, static_cast<T>(-1.0 / n));
  res.permutation = best;
  return res;
}

inline constexpr std::array<int, 4> kEnhWindows{256, 512, 768, 1024};

// Time-domain mean-L1 plus the sum over four STFT resolutions of the mean-L1
// between magnitude spectrograms, all unit-weighted.
template <class T>
Tensor<T> enh_loss(const Tensor<T>& est, const Tensor<T>& ref) {
  if (est.shape() != ref.shape()) {
    throw ShapeError("enh_loss: estimate " + Tensor<T>::shape_string(est.shape()) +
                     " vs reference " + Tensor<T>::shape_string(ref.shape()));
  }
  Tensor<T> total = mean_all(absolute(sub(est, ref)));
  for (int win : kEnhWindows) {
    const StftConfig cfg{8000, win, win / 2};  // window sizes are sample counts
    Tensor<T> me = complex_magnitude(stft(est, cfg));
    Tensor<T> mr = complex_magnitude(stft(ref, cfg));
    total = add(total, mean_all(absolute(sub(me, mr))));
  }
  return total;
}

}  // namespace locoformer
