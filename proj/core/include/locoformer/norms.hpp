// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "locoformer/ops.hpp"

namespace locoformer {

// Per-position grouped RMS normalization over the channel axis of
// [D, ...rest]. Each position's D-vector is split into `groups` contiguous
// chunks that are RMS-normalized independently; a single per-channel affine
// (gain, bias) follows. groups == 1 is plain RMSNorm. Statistics never mix
// positions.
template <class T>
Tensor<T> rms_group_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                         int groups, T eps) {
  if (x.rank() < 2) throw ShapeError("rms_group_norm: expects rank >= 2");
  const int D = x.dim(0);
  if (groups < 1 || D % groups != 0) {
    throw ConfigError("rms_group_norm: channel count " + std::to_string(D) +
                      " not divisible by groups " + std::to_string(groups));
  }
  if (gain.size() != static_cast<std::size_t>(D) || bias.size() != static_cast<std::size_t>(D)) {
    throw ShapeError("rms_group_norm: gain/bias must be [D]");
  }
  const std::size_t bins = x.size() / static_cast<std::size_t>(D);
  const int gs = D / groups;

  Tensor<T> out = Tensor<T>::zeros(x.shape(), wants_grad(x) || wants_grad(gain) || wants_grad(bias));
  // 1/rms per (group, position); saved for backward.
  auto inv = std::make_shared<std::vector<T>>(static_cast<std::size_t>(groups) * bins);
  const T* px = x.data();
  const T* pg = gain.data();
  const T* pbv = bias.data();
  T* po = out.data();
  const T inv_gs = T(1) / static_cast<T>(gs);
#pragma omp parallel for schedule(static)
  for (int g = 0; g < groups; ++g) {
    T* r = inv->data() + static_cast<std::size_t>(g) * bins;
    for (std::size_t i = 0; i < bins; ++i) r[i] = T(0);
    for (int d = g * gs; d < (g + 1) * gs; ++d) {
      const T* xrow = px + static_cast<std::size_t>(d) * bins;
      for (std::size_t i = 0; i < bins; ++i) r[i] += xrow[i] * xrow[i];
    }
    for (std::size_t i = 0; i < bins; ++i) r[i] = T(1) / std::sqrt(r[i] * inv_gs + eps);
    for (int d = g * gs; d < (g + 1) * gs; ++d) {
      const T* xrow = px + static_cast<std::size_t>(d) * bins;
      T* orow = po + static_cast<std::size_t>(d) * bins;
      const T gd = pg[d], bd = pbv[d];
      for (std::size_t i = 0; i < bins; ++i) orow[i] = gd * xrow[i] * r[i] + bd;
    }
  }

  if (out.requires_grad()) {
    out.node = make_node<T>("rms_group_norm", {x, gain, bias});
    out.node->backprop = [D, groups, gs, bins, inv](Tensor<T>& o) {
      Tensor<T>& xt = o.node->parents[0];
      Tensor<T>& gt = o.node->parents[1];
      Tensor<T>& bt = o.node->parents[2];
      const T* dy = o.grad();
      const T* px_ = xt.data();
      const T* pg_ = gt.data();
      const T inv_gs = T(1) / static_cast<T>(gs);
      if (xt.requires_grad()) {
        T* dx = xt.grad();
#pragma omp parallel for schedule(static)
        for (int g = 0; g < groups; ++g) {
          const T* r = inv->data() + static_cast<std::size_t>(g) * bins;
          // t[i] = sum_d dy*gain*x per position within the group
          std::vector<T> t(bins, T(0));
          for (int d = g * gs; d < (g + 1) * gs; ++d) {
            const T* dyr = dy + static_cast<std::size_t>(d) * bins;
            const T* xr = px_ + static_cast<std::size_t>(d) * bins;
            const T gd = pg_[d];
            for (std::size_t i = 0; i < bins; ++i) t[i] += dyr[i] * gd * xr[i];
          }
          for (int d = g * gs; d < (g + 1) * gs; ++d) {
            const T* dyr = dy + static_cast<std::size_t>(d) * bins;
            const T* xr = px_ + static_cast<std::size_t>(d) * bins;
            T* dxr = dx + static_cast<std::size_t>(d) * bins;
            const T gd = pg_[d];
            for (std::size_t i = 0; i < bins; ++i) {
              const T ri = r[i];
              dxr[i] += dyr[i] * gd * ri - xr[i] * ri * ri * ri * inv_gs * t[i];
            }
          }
        }
      }
      if (gt.requires_grad()) {
        T* dg = gt.grad();
        for (int d = 0; d < D; ++d) {
          const T* r = inv->data() + static_cast<std::size_t>(d / gs) * bins;
          const T* dyr = dy + static_cast<std::size_t>(d) * bins;
          const T* xr = px_ + static_cast<std::size_t>(d) * bins;
          T acc = 0;
          for (std::size_t i = 0; i < bins; ++i) acc += dyr[i] * xr[i] * r[i];
          dg[d] += acc;
        }
      }
      if (bt.requires_grad()) {
        T* db = bt.grad();
        for (int d = 0; d < D; ++d) {
          db[d] += detail::sum_span(bins, dy + static_cast<std::size_t>(d) * bins);
        }
      }
    };
  }
  return out;
}

// Global layer normalization: one mean/variance over every element of
// [D, ...rest], then a per-channel affine.
template <class T>
Tensor<T> global_layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                            T eps) {
  if (x.rank() < 2) throw ShapeError("global_layer_norm: expects rank >= 2");
  const int D = x.dim(0);
  if (gain.size() != static_cast<std::size_t>(D) || bias.size() != static_cast<std::size_t>(D)) {
    throw ShapeError("global_layer_norm: gain/bias must be [D]");
  }
  const std::size_t n = x.size();
  const std::size_t bins = n / static_cast<std::size_t>(D);
  const T* px = x.data();

  const T mu = detail::sum_span(n, px) / static_cast<T>(n);
  T var = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T c = px[i] - mu;
    var += c * c;
  }
  var /= static_cast<T>(n);
  const T r = T(1) / std::sqrt(var + eps);

  Tensor<T> out = Tensor<T>::zeros(x.shape(), wants_grad(x) || wants_grad(gain) || wants_grad(bias));
  T* po = out.data();
  const T* pg = gain.data();
  const T* pbv = bias.data();
  for (int d = 0; d < D; ++d) {
    const T* xr = px + static_cast<std::size_t>(d) * bins;
    T* orow = po + static_cast<std::size_t>(d) * bins;
    const T gd = pg[d], bd = pbv[d];
    for (std::size_t i = 0; i < bins; ++i) orow[i] = gd * (xr[i] - mu) * r + bd;
  }

  if (out.requires_grad()) {
    out.node = make_node<T>("global_layer_norm", {x, gain, bias});
    out.node->backprop = [D, bins, n, mu, r](Tensor<T>& o) {
      Tensor<T>& xt = o.node->parents[0];
      Tensor<T>& gt = o.node->parents[1];
      Tensor<T>& bt = o.node->parents[2];
      const T* dy = o.grad();
      const T* px_ = xt.data();
      const T* pg_ = gt.data();
      if (xt.requires_grad()) {
        // dx = r*(w - mean(w) - xhat*mean(w*xhat)), w = dy*gain per channel
        T s1 = 0, s2 = 0;
        for (int d = 0; d < D; ++d) {
          const T* dyr = dy + static_cast<std::size_t>(d) * bins;
          const T* xr = px_ + static_cast<std::size_t>(d) * bins;
          const T gd = pg_[d];
          for (std::size_t i = 0; i < bins; ++i) {
            const T w = dyr[i] * gd;
            s1 += w;
            s2 += w * (xr[i] - mu) * r;
          }
        }
        s1 /= static_cast<T>(n);
        s2 /= static_cast<T>(n);
        T* dx = xt.grad();
        for (int d = 0; d < D; ++d) {
          const T* dyr = dy + static_cast<std::size_t>(d) * bins;
          const T* xr = px_ + static_cast<std::size_t>(d) * bins;
          T* dxr = dx + static_cast<std::size_t>(d) * bins;
          const T gd = pg_[d];
          for (std::size_t i = 0; i < bins; ++i) {
            const T xhat = (xr[i] - mu) * r;
            dxr[i] += r * (dyr[i] * gd - s1 - xhat * s2);
          }
        }
      }
      if (gt.requires_grad()) {
        T* dg = gt.grad();
        for (int d = 0; d < D; ++d) {
          const T* dyr = dy + static_cast<std::size_t>(d) * bins;
          const T* xr = px_ + static_cast<std::size_t>(d) * bins;
          T acc = 0;
          for (std::size_t i = 0; i < bins; ++i) acc += dyr[i] * (xr[i] - mu) * r;
          dg[d] += acc;
        }
      }
      if (bt.requires_grad()) {
        T* db = bt.grad();
        for (int d = 0; d < D; ++d) {
          db[d] += detail::sum_span(bins, dy + static_cast<std::size_t>(d) * bins);
        }
      }
    };
  }
  return out;
}

}  // namespace locoformer
