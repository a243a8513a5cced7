// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Hot loops shared by the op library. Everything here is written so the
// result is bit-identical for any thread count: each output element is
// produced by exactly one fixed-order accumulation. Pointers are restrict-
// qualified; no caller passes overlapping spans.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>

namespace locoformer::detail {

// Branch-free Cody-Waite expf (degree-6 polynomial on [-ln2/2, ln2/2] plus
// exact power-of-two scaling); max relative error a few 1e-8. Written so the
// auto-vectorizer can lift it into SIMD loops. Softmax and swish spend most
// of their time here; the double instantiation keeps libm precision for the
// finite-difference verification path.
inline float fexp(float x) {
  const float clamped = std::min(88.0f, std::max(-87.0f, x));
  // round-to-nearest via the 1.5*2^23 bias trick; keeps the loop vectorizable
  const float biased = clamped * 1.44269504088896341f + 12582912.0f;
  const float kf = biased - 12582912.0f;
  const float r = (clamped - kf * 0.693359375f) - kf * -2.12194440e-4f;
  float p = 1.9875691500e-4f;
  p = p * r + 1.3981999507e-3f;
  p = p * r + 8.3334519073e-3f;
  p = p * r + 4.1665795894e-2f;
  p = p * r + 1.6666665459e-1f;
  p = p * r + 5.0000001201e-1f;
  p = p * r * r + r + 1.0f;
  const int32_t ebits = (static_cast<int32_t>(kf) + 127) << 23;
  float scale;
  std::memcpy(&scale, &ebits, 4);
  return p * scale;
}

inline double fexp(double x) { return std::exp(x); }

// y[i] += a * x[i]
template <class T>
inline void axpy(std::size_t n, T a, const T* __restrict__ x, T* __restrict__ y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// Dot product with a fixed 8-lane accumulator so the compiler can vectorize
// the reduction while keeping a deterministic summation order.
template <class T>
inline T dotp(std::size_t n, const T* __restrict__ x, const T* __restrict__ y) {
  constexpr std::size_t W = 8;
  T lanes[W] = {};
  std::size_t i = 0;
  for (; i + W <= n; i += W) {
    for (std::size_t j = 0; j < W; ++j) lanes[j] += x[i + j] * y[i + j];
  }
  T acc = 0;
  for (std::size_t j = 0; j < W; ++j) acc += lanes[j];
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <class T>
inline T sum_span(std::size_t n, const T* __restrict__ x) {
  constexpr std::size_t W = 8;
  T lanes[W] = {};
  std::size_t i = 0;
  for (; i + W <= n; i += W) {
    for (std::size_t j = 0; j < W; ++j) lanes[j] += x[i + j];
  }
  T acc = 0;
  for (std::size_t j = 0; j < W; ++j) acc += lanes[j];
  for (; i < n; ++i) acc += x[i];
  return acc;
}

template <class T>
inline T sumsq_span(std::size_t n, const T* __restrict__ x) {
  return dotp(n, x, x);
}

// Four destination rows consume one source: y_j[i] += a_j * x[i].
template <class T>
inline void scatter_quad(std::size_t n, const T* __restrict__ x, T a0, T a1, T a2, T a3,
                         T* __restrict__ y0, T* __restrict__ y1, T* __restrict__ y2,
                         T* __restrict__ y3) {
#pragma GCC ivdep
  for (std::size_t i = 0; i < n; ++i) {
    const T v = x[i];
    y0[i] += a0 * v;
    y1[i] += a1 * v;
    y2[i] += a2 * v;
    y3[i] += a3 * v;
  }
}

// One destination row consumes four sources: y[i] += sum_j a_j * x_j[i].
template <class T>
inline void gather_quad(std::size_t n, const T* __restrict__ x0, const T* __restrict__ x1,
                        const T* __restrict__ x2, const T* __restrict__ x3, T a0, T a1, T a2, T a3,
                        T* __restrict__ y) {
#pragma GCC ivdep
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += a0 * x0[i] + a1 * x1[i] + a2 * x2[i] + a3 * x3[i];
  }
}

}  // namespace locoformer::detail
