// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite differences in double precision, used to verify every
// analytic gradient. The probe path only evaluates forward passes under
// NoGradGuard, so it stays independent of the backward code it checks.

#pragma once

#include <functional>
#include <unordered_set>

#include "locoformer/tensor.hpp"

namespace locoformer {

struct FdOptions {
  double h = 1e-3;
  // Probe at most this many coordinates per tensor (seeded, without
  // replacement); <= 0 probes every coordinate.
  int max_coords_per_tensor = -1;
  uint64_t seed = 0;
  // Relative error uses max(|analytic|, |fd|, floor) as denominator so
  // near-zero gradients compare absolutely: with the 1e-4 budget this means
  // |analytic - fd| <= 1e-6 wherever both are below the floor.
  double denom_floor = 1e-2;
};

// Max relative error between analytic gradients and central differences of a
// scalar-valued forward. `forward` must rebuild its graph from the current
// contents of `leaves` on every call.
inline double max_fd_rel_error(const std::function<Tensor<double>()>& forward,
                               const std::vector<Tensor<double>*>& leaves,
                               const FdOptions& opt = {}) {
  for (Tensor<double>* t : leaves) t->zero_grad();
  Tensor<double> loss = forward();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (Tensor<double>* t : leaves) {
    analytic.emplace_back(t->grad(), t->grad() + t->size());
  }

  double worst = 0.0;
  Rng rng(Rng::mix(opt.seed, 0x9d2c5680));
  NoGradGuard ng;
  for (std::size_t ti = 0; ti < leaves.size(); ++ti) {
    Tensor<double>& t = *leaves[ti];
    const std::size_t n = t.size();
    std::vector<std::size_t> coords;
    if (opt.max_coords_per_tensor > 0 && n > static_cast<std::size_t>(opt.max_coords_per_tensor)) {
      std::unordered_set<std::size_t> seen;
      while (seen.size() < static_cast<std::size_t>(opt.max_coords_per_tensor)) {
        seen.insert(static_cast<std::size_t>(rng.next_u64() % n));
      }
      coords.assign(seen.begin(), seen.end());
    } else {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    }
    for (std::size_t i : coords) {
      const double orig = t[i];
      t[i] = orig + opt.h;
      const double fp = forward().item();
      t[i] = orig - opt.h;
      const double fm = forward().item();
      t[i] = orig;
      const double fd = (fp - fm) / (2.0 * opt.h);
      const double a = analytic[ti][i];
      const double denom = std::max({std::abs(a), std::abs(fd), opt.denom_floor});
      worst = std::max(worst, std::abs(a - fd) / denom);
    }
  }
  return worst;
}

// Fill a tensor with uniform values in [lo, hi) from a seeded stream.
template <class T>
void fill_uniform(Tensor<T>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
}

}  // namespace locoformer
