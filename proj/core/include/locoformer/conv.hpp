// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Stride-1 convolutions. 1-D variants accept [Cin, L] or a stack of
// independent sequences [Cin, S, L] sharing one weight set, which is how the
// dual-path blocks batch all time frames (or frequency bins) through a single
// call. Same-padding splits floor/ceil so sequence lengths never change;
// transposed variants center-crop the raw L+K-1 output with the mirrored
// split.
//
// The 1-D kernels process four channel rows per input pass with the tap loop
// unrolled at compile time for the common kernel widths, which keeps the
// short per-sequence rows arithmetic-bound. Per output element the
// accumulation order is fixed, so results are bit-reproducible and
// independent of the thread count.

#pragma once

#include "locoformer/ops.hpp"

namespace locoformer {

namespace detail {

// dst[l] += a * src[l + shift] over the l range where l + shift stays in [0, L)
template <class T>
inline void axpy_shift(int L, int shift, T a, const T* __restrict__ src, T* __restrict__ dst) {
  const int lo = std::max(0, -shift);
  const int hi = std::min(L, L - shift);
  const T* __restrict__ s = src + shift + lo;
  T* __restrict__ d = dst + lo;
#pragma GCC ivdep
  for (int l = 0; l < hi - lo; ++l) d[l] += a * s[l];
}

// sum over l of src[l + shift] * other[l], same clipping
template <class T>
inline T dot_shift(int L, int shift, const T* src, const T* other) {
  const int lo = std::max(0, -shift);
  const int hi = std::min(L, L - shift);
  if (hi <= lo) return T(0);
  return dotp(static_cast<std::size_t>(hi - lo), src + shift + lo, other + lo);
}

struct SeqDims {
  int cin, s, l;
  bool rank2;
};

template <class T>
inline SeqDims seq_dims(const Tensor<T>& x, const char* op) {
  if (x.rank() == 2) return {x.dim(0), 1, x.dim(1), true};
  if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2), false};
  throw ShapeError(std::string(op) + ": expects [C, L] or [C, S, L], got " +
                   Tensor<T>::shape_string(x.shape()));
}

// Four output rows accumulate x correlated with per-row taps:
//   o_j[l] += sum_k a_j[k] * x[l + k - pad_l]
// Interior positions run with the tap loop unrolled; the clipped edges fall
// back to scalar updates.
template <int KK, class T>
inline void corr_quad(int L, int pad_l, const T* __restrict__ xrow, const T* a0, const T* a1,
                      const T* a2, const T* a3, T* __restrict__ o0, T* __restrict__ o1,
                      T* __restrict__ o2, T* __restrict__ o3) {
  const int lo = std::min(L, std::max(0, pad_l));
  const int hi = std::max(lo, std::min(L, L - (KK - 1 - pad_l)));
  for (int k = 0; k < KK; ++k) {
    const int shift = k - pad_l;
    const int elo = std::max(0, -shift);
    const int ehi = std::min(L, L - shift);
    const T v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
    for (int l = elo; l < std::min(lo, ehi); ++l) {
      const T v = xrow[l + shift];
      o0[l] += v0 * v;
      o1[l] += v1 * v;
      o2[l] += v2 * v;
      o3[l] += v3 * v;
    }
    for (int l = std::max(hi, elo); l < ehi; ++l) {
      const T v = xrow[l + shift];
      o0[l] += v0 * v;
      o1[l] += v1 * v;
      o2[l] += v2 * v;
      o3[l] += v3 * v;
    }
  }
#pragma GCC ivdep
  for (int l = lo; l < hi; ++l) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    for (int k = 0; k < KK; ++k) {
      const T v = xrow[l + k - pad_l];
      s0 += a0[k] * v;
      s1 += a1[k] * v;
      s2 += a2[k] * v;
      s3 += a3[k] * v;
    }
    o0[l] += s0;
    o1[l] += s1;
    o2[l] += s2;
    o3[l] += s3;
  }
}

// Runtime-K fallback with the same clipping contract.
template <class T>
inline void corr_quad_generic(int L, int K, int pad_l, const T* xrow, const T* a0, const T* a1,
                              const T* a2, const T* a3, T* o0, T* o1, T* o2, T* o3) {
  for (int k = 0; k < K; ++k) {
    axpy_shift(L, k - pad_l, a0[k], xrow, o0);
    axpy_shift(L, k - pad_l, a1[k], xrow, o1);
    axpy_shift(L, k - pad_l, a2[k], xrow, o2);
    axpy_shift(L, k - pad_l, a3[k], xrow, o3);
  }
}

template <class T>
inline void corr_quad_dispatch(int L, int K, int pad_l, const T* xrow, const T* a0, const T* a1,
                               const T* a2, const T* a3, T* o0, T* o1, T* o2, T* o3) {
  switch (K) {
    case 1:
      corr_quad<1>(L, pad_l, xrow, a0, a1, a2, a3, o0, o1, o2, o3);
      break;
    case 2:
      corr_quad<2>(L, pad_l, xrow, a0, a1, a2, a3, o0, o1, o2, o3);
      break;
    case 3:
      corr_quad<3>(L, pad_l, xrow, a0, a1, a2, a3, o0, o1, o2, o3);
      break;
    case 4:
      corr_quad<4>(L, pad_l, xrow, a0, a1, a2, a3, o0, o1, o2, o3);
      break;
    case 5:
      corr_quad<5>(L, pad_l, xrow, a0, a1, a2, a3, o0, o1, o2, o3);
      break;
    case 6:
      corr_quad<6>(L, pad_l, xrow, a0, a1, a2, a3, o0, o1, o2, o3);
      break;
    case 7:
      corr_quad<7>(L, pad_l, xrow, a0, a1, a2, a3, o0, o1, o2, o3);
      break;
    case 8:
      corr_quad<8>(L, pad_l, xrow, a0, a1, a2, a3, o0, o1, o2, o3);
      break;
    default:
      corr_quad_generic(L, K, pad_l, xrow, a0, a1, a2, a3, o0, o1, o2, o3);
  }
}

}  // namespace detail

// out[co, s, l] = b[co] + sum_{ci,k} w[co, ci, k] * x[ci, s, l + k - floor((K-1)/2)]
template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const auto d = detail::seq_dims(x, "conv1d");
  if (w.rank() != 3) throw ShapeError("conv1d: weight must be [Cout, Cin, K]");
  const int Cout = w.dim(0), Cin = w.dim(1), K = w.dim(2);
  if (Cin != d.cin) {
    throw ShapeError("conv1d: input channels " + std::to_string(d.cin) + " vs weight Cin " +
                     std::to_string(Cin));
  }
  if (b.size() != static_cast<std::size_t>(Cout)) throw ShapeError("conv1d: bias must be [Cout]");
  const int S = d.s, L = d.l;
  const int pad_l = (K - 1) / 2;

  Tensor<T> out = Tensor<T>::zeros(d.rank2 ? std::vector<int>{Cout, L} : std::vector<int>{Cout, S, L},
                                   wants_grad(x) || wants_grad(w) || wants_grad(b));
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = b.data();
  T* po = out.data();
  // Slice-outer order keeps one slice's rows cache-resident across channels.
#pragma omp parallel for schedule(static)
  for (int s = 0; s < S; ++s) {
    int co = 0;
    for (; co + 4 <= Cout; co += 4) {
      T* o0 = po + (static_cast<std::size_t>(co) * S + s) * L;
      T* o1 = po + (static_cast<std::size_t>(co + 1) * S + s) * L;
      T* o2 = po + (static_cast<std::size_t>(co + 2) * S + s) * L;
      T* o3 = po + (static_cast<std::size_t>(co + 3) * S + s) * L;
      for (int l = 0; l < L; ++l) {
        o0[l] = pb[co];
        o1[l] = pb[co + 1];
        o2[l] = pb[co + 2];
        o3[l] = pb[co + 3];
      }
      for (int ci = 0; ci < Cin; ++ci) {
        const T* xrow = px + (static_cast<std::size_t>(ci) * S + s) * L;
        const T* a0 = pw + (static_cast<std::size_t>(co) * Cin + ci) * K;
        const T* a1 = pw + (static_cast<std::size_t>(co + 1) * Cin + ci) * K;
        const T* a2 = pw + (static_cast<std::size_t>(co + 2) * Cin + ci) * K;
        const T* a3 = pw + (static_cast<std::size_t>(co + 3) * Cin + ci) * K;
        detail::corr_quad_dispatch(L, K, pad_l, xrow, a0, a1, a2, a3, o0, o1, o2, o3);
      }
    }
    for (; co < Cout; ++co) {
      T* orow = po + (static_cast<std::size_t>(co) * S + s) * L;
      for (int l = 0; l < L; ++l) orow[l] = pb[co];
      for (int ci = 0; ci < Cin; ++ci) {
        const T* xrow = px + (static_cast<std::size_t>(ci) * S + s) * L;
        const T* wrow = pw + (static_cast<std::size_t>(co) * Cin + ci) * K;
        for (int k = 0; k < K; ++k) detail::axpy_shift(L, k - pad_l, wrow[k], xrow, orow);
      }
    }
  }

  if (out.requires_grad()) {
    out.node = make_node<T>("conv1d", {x, w, b});
    out.node->backprop = [Cout, Cin, K, S, L, pad_l](Tensor<T>& o) {
      Tensor<T>& xt = o.node->parents[0];
      Tensor<T>& wt = o.node->parents[1];
      Tensor<T>& bt = o.node->parents[2];
      const T* dy = o.grad();
      const T* pw_ = wt.data();
      const T* px_ = xt.data();
      if (xt.requires_grad()) {
        // dx is a correlation of dy with the k-reversed weights at the
        // mirrored pad.
        T* dx = xt.grad();
        const int pad_r = K - 1 - pad_l;
#pragma omp parallel for schedule(static)
        for (int s = 0; s < S; ++s) {
          std::vector<T> rev(static_cast<std::size_t>(4) * K);
          int ci = 0;
          for (; ci + 4 <= Cin; ci += 4) {
            T* d0 = dx + (static_cast<std::size_t>(ci) * S + s) * L;
            T* d1 = dx + (static_cast<std::size_t>(ci + 1) * S + s) * L;
            T* d2 = dx + (static_cast<std::size_t>(ci + 2) * S + s) * L;
            T* d3 = dx + (static_cast<std::size_t>(ci + 3) * S + s) * L;
            for (int co = 0; co < Cout; ++co) {
              const T* dyrow = dy + (static_cast<std::size_t>(co) * S + s) * L;
              const T* base = pw_ + static_cast<std::size_t>(co) * Cin * K;
              for (int j = 0; j < 4; ++j) {
                for (int k = 0; k < K; ++k) rev[j * K + k] = base[(ci + j) * K + (K - 1 - k)];
              }
              detail::corr_quad_dispatch(L, K, pad_r, dyrow, rev.data(), rev.data() + K,
                                         rev.data() + 2 * K, rev.data() + 3 * K, d0, d1, d2, d3);
            }
          }
          for (; ci < Cin; ++ci) {
            T* dxrow = dx + (static_cast<std::size_t>(ci) * S + s) * L;
            for (int co = 0; co < Cout; ++co) {
              const T* dyrow = dy + (static_cast<std::size_t>(co) * S + s) * L;
              const T* wrow = pw_ + (static_cast<std::size_t>(co) * Cin + ci) * K;
              for (int k = 0; k < K; ++k) detail::axpy_shift(L, pad_l - k, wrow[k], dyrow, dxrow);
            }
          }
        }
      }
      if (wt.requires_grad()) {
        // Serial slice-outer accumulation: the whole weight-gradient block
        // stays hot and the result does not depend on the thread count.
        T* dw = wt.grad();
        for (int s = 0; s < S; ++s) {
          for (int ci = 0; ci < Cin; ++ci) {
            const T* xrow = px_ + (static_cast<std::size_t>(ci) * S + s) * L;
            int co = 0;
            for (; co + 4 <= Cout; co += 4) {
              const T* y0 = dy + (static_cast<std::size_t>(co) * S + s) * L;
              const T* y1 = dy + (static_cast<std::size_t>(co + 1) * S + s) * L;
              const T* y2 = dy + (static_cast<std::size_t>(co + 2) * S + s) * L;
              const T* y3 = dy + (static_cast<std::size_t>(co + 3) * S + s) * L;
              for (int k = 0; k < K; ++k) {
                const int shift = k - pad_l;
                dw[(static_cast<std::size_t>(co) * Cin + ci) * K + k] += detail::dot_shift(L, shift, xrow, y0);
                dw[(static_cast<std::size_t>(co + 1) * Cin + ci) * K + k] += detail::dot_shift(L, shift, xrow, y1);
                dw[(static_cast<std::size_t>(co + 2) * Cin + ci) * K + k] += detail::dot_shift(L, shift, xrow, y2);
                dw[(static_cast<std::size_t>(co + 3) * Cin + ci) * K + k] += detail::dot_shift(L, shift, xrow, y3);
              }
            }
            for (; co < Cout; ++co) {
              const T* dyrow = dy + (static_cast<std::size_t>(co) * S + s) * L;
              T* dwrow = dw + (static_cast<std::size_t>(co) * Cin + ci) * K;
              for (int k = 0; k < K; ++k) dwrow[k] += detail::dot_shift(L, k - pad_l, xrow, dyrow);
            }
          }
        }
      }
      if (bt.requires_grad()) {
        T* db = bt.grad();
        for (int co = 0; co < Cout; ++co) {
          db[co] += detail::sum_span(static_cast<std::size_t>(S) * L,
                                     dy + static_cast<std::size_t>(co) * S * L);
        }
      }
    };
  }
  return out;
}

// Transposed counterpart; weight layout [Cin, Cout, K]. Raw output of length
// L+K-1 is cropped by floor((K-1)/2) on the left, so
// out[co, s, l] = b[co] + sum_{ci,k} x[ci, s, l + floor((K-1)/2) - k] * w[ci, co, k].
template <class T>
Tensor<T> transposed_conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const auto d = detail::seq_dims(x, "transposed_conv1d");
  if (w.rank() != 3) throw ShapeError("transposed_conv1d: weight must be [Cin, Cout, K]");
  const int Cin = w.dim(0), Cout = w.dim(1), K = w.dim(2);
  if (Cin != d.cin) {
    throw ShapeError("transposed_conv1d: input channels " + std::to_string(d.cin) +
                     " vs weight Cin " + std::to_string(Cin));
  }
  if (b.size() != static_cast<std::size_t>(Cout)) {
    throw ShapeError("transposed_conv1d: bias must be [Cout]");
  }
  const int S = d.s, L = d.l;
  const int drop_l = (K - 1) / 2;
  // x[l + drop_l - k] * w[k] is a correlation with k-reversed taps at the
  // mirrored pad.
  const int pad_r = K - 1 - drop_l;

  Tensor<T> out = Tensor<T>::zeros(d.rank2 ? std::vector<int>{Cout, L} : std::vector<int>{Cout, S, L},
                                   wants_grad(x) || wants_grad(w) || wants_grad(b));
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = b.data();
  T* po = out.data();
#pragma omp parallel for schedule(static)
  for (int s = 0; s < S; ++s) {
    std::vector<T> rev(static_cast<std::size_t>(4) * K);
    int co = 0;
    for (; co + 4 <= Cout; co += 4) {
      T* o0 = po + (static_cast<std::size_t>(co) * S + s) * L;
      T* o1 = po + (static_cast<std::size_t>(co + 1) * S + s) * L;
      T* o2 = po + (static_cast<std::size_t>(co + 2) * S + s) * L;
      T* o3 = po + (static_cast<std::size_t>(co + 3) * S + s) * L;
      for (int l = 0; l < L; ++l) {
        o0[l] = pb[co];
        o1[l] = pb[co + 1];
        o2[l] = pb[co + 2];
        o3[l] = pb[co + 3];
      }
      for (int ci = 0; ci < Cin; ++ci) {
        const T* xrow = px + (static_cast<std::size_t>(ci) * S + s) * L;
        const T* base = pw + static_cast<std::size_t>(ci) * Cout * K;
        for (int j = 0; j < 4; ++j) {
          for (int k = 0; k < K; ++k) rev[j * K + k] = base[(co + j) * K + (K - 1 - k)];
        }
        detail::corr_quad_dispatch(L, K, pad_r, xrow, rev.data(), rev.data() + K,
                                   rev.data() + 2 * K, rev.data() + 3 * K, o0, o1, o2, o3);
      }
    }
    for (; co < Cout; ++co) {
      T* orow = po + (static_cast<std::size_t>(co) * S + s) * L;
      for (int l = 0; l < L; ++l) orow[l] = pb[co];
      for (int ci = 0; ci < Cin; ++ci) {
        const T* xrow = px + (static_cast<std::size_t>(ci) * S + s) * L;
        const T* wrow = pw + (static_cast<std::size_t>(ci) * Cout + co) * K;
        for (int k = 0; k < K; ++k) detail::axpy_shift(L, drop_l - k, wrow[k], xrow, orow);
      }
    }
  }

  if (out.requires_grad()) {
    out.node = make_node<T>("transposed_conv1d", {x, w, b});
    out.node->backprop = [Cout, Cin, K, S, L, drop_l](Tensor<T>& o) {
      Tensor<T>& xt = o.node->parents[0];
      Tensor<T>& wt = o.node->parents[1];
      Tensor<T>& bt = o.node->parents[2];
      const T* dy = o.grad();
      const T* pw_ = wt.data();
      const T* px_ = xt.data();
      if (xt.requires_grad()) {
        // dx[m] += sum_k dy[m + k - drop_l] * w[k]: direct taps at drop_l.
        T* dx = xt.grad();
#pragma omp parallel for schedule(static)
        for (int s = 0; s < S; ++s) {
          int ci = 0;
          for (; ci + 4 <= Cin; ci += 4) {
            T* d0 = dx + (static_cast<std::size_t>(ci) * S + s) * L;
            T* d1 = dx + (static_cast<std::size_t>(ci + 1) * S + s) * L;
            T* d2 = dx + (static_cast<std::size_t>(ci + 2) * S + s) * L;
            T* d3 = dx + (static_cast<std::size_t>(ci + 3) * S + s) * L;
            for (int co = 0; co < Cout; ++co) {
              const T* dyrow = dy + (static_cast<std::size_t>(co) * S + s) * L;
              const T* a0 = pw_ + (static_cast<std::size_t>(ci) * Cout + co) * K;
              const T* a1 = pw_ + (static_cast<std::size_t>(ci + 1) * Cout + co) * K;
              const T* a2 = pw_ + (static_cast<std::size_t>(ci + 2) * Cout + co) * K;
              const T* a3 = pw_ + (static_cast<std::size_t>(ci + 3) * Cout + co) * K;
              detail::corr_quad_dispatch(L, K, drop_l, dyrow, a0, a1, a2, a3, d0, d1, d2, d3);
            }
          }
          for (; ci < Cin; ++ci) {
            T* dxrow = dx + (static_cast<std::size_t>(ci) * S + s) * L;
            for (int co = 0; co < Cout; ++co) {
              const T* dyrow = dy + (static_cast<std::size_t>(co) * S + s) * L;
              const T* wrow = pw_ + (static_cast<std::size_t>(ci) * Cout + co) * K;
              for (int k = 0; k < K; ++k) detail::axpy_shift(L, k - drop_l, wrow[k], dyrow, dxrow);
            }
          }
        }
      }
      if (wt.requires_grad()) {
        T* dw = wt.grad();
        for (int s = 0; s < S; ++s) {
          for (int ci = 0; ci < Cin; ++ci) {
            const T* xrow = px_ + (static_cast<std::size_t>(ci) * S + s) * L;
            int co = 0;
            for (; co + 4 <= Cout; co += 4) {
              const T* y0 = dy + (static_cast<std::size_t>(co) * S + s) * L;
              const T* y1 = dy + (static_cast<std::size_t>(co + 1) * S + s) * L;
              const T* y2 = dy + (static_cast<std::size_t>(co + 2) * S + s) * L;
              const T* y3 = dy + (static_cast<std::size_t>(co + 3) * S + s) * L;
              for (int k = 0; k < K; ++k) {
                const int shift = drop_l - k;
                dw[(static_cast<std::size_t>(ci) * Cout + co) * K + k] += detail::dot_shift(L, shift, xrow, y0);
                dw[(static_cast<std::size_t>(ci) * Cout + co + 1) * K + k] += detail::dot_shift(L, shift, xrow, y1);
                dw[(static_cast<std::size_t>(ci) * Cout + co + 2) * K + k] += detail::dot_shift(L, shift, xrow, y2);
                dw[(static_cast<std::size_t>(ci) * Cout + co + 3) * K + k] += detail::dot_shift(L, shift, xrow, y3);
              }
            }
            for (; co < Cout; ++co) {
              const T* dyrow = dy + (static_cast<std::size_t>(co) * S + s) * L;
              T* dwrow = dw + (static_cast<std::size_t>(ci) * Cout + co) * K;
              for (int k = 0; k < K; ++k) dwrow[k] += detail::dot_shift(L, drop_l - k, xrow, dyrow);
            }
          }
        }
      }
      if (bt.requires_grad()) {
        T* db = bt.grad();
        for (int co = 0; co < Cout; ++co) {
          db[co] += detail::sum_span(static_cast<std::size_t>(S) * L,
                                     dy + static_cast<std::size_t>(co) * S * L);
        }
      }
    };
  }
  return out;
}

// 2-D same-padded stride-1 convolution over [Cin, T, F] with weight
// [Cout, Cin, KT, KF]. Only the encoder and decoder use these, so the plain
// shifted-row loops are fast enough.
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() != 3) throw ShapeError("conv2d: expects [Cin, T, F]");
  if (w.rank() != 4) throw ShapeError("conv2d: weight must be [Cout, Cin, KT, KF]");
  const int Cin = x.dim(0), Tn = x.dim(1), Fn = x.dim(2);
  const int Cout = w.dim(0), KT = w.dim(2), KF = w.dim(3);
  if (w.dim(1) != Cin) {
    throw ShapeError("conv2d: input channels " + std::to_string(Cin) + " vs weight Cin " +
                     std::to_string(w.dim(1)));
  }
  if (b.size() != static_cast<std::size_t>(Cout)) throw ShapeError("conv2d: bias must be [Cout]");
  const int pad_t = (KT - 1) / 2, pad_f = (KF - 1) / 2;

  Tensor<T> out = Tensor<T>::zeros({Cout, Tn, Fn}, wants_grad(x) || wants_grad(w) || wants_grad(b));
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = b.data();
  T* po = out.data();
#pragma omp parallel for schedule(static)
  for (int co = 0; co < Cout; ++co) {
    T* oc = po + static_cast<std::size_t>(co) * Tn * Fn;
    for (std::size_t i = 0; i < static_cast<std::size_t>(Tn) * Fn; ++i) oc[i] = pb[co];
    for (int ci = 0; ci < Cin; ++ci) {
      const T* xc = px + static_cast<std::size_t>(ci) * Tn * Fn;
      const T* wc = pw + (static_cast<std::size_t>(co) * Cin + ci) * KT * KF;
      for (int kt = 0; kt < KT; ++kt) {
        const int st = kt - pad_t;
        const int t_lo = std::max(0, -st), t_hi = std::min(Tn, Tn - st);
        for (int kf = 0; kf < KF; ++kf) {
          const T coeff = wc[kt * KF + kf];
          for (int t = t_lo; t < t_hi; ++t) {
            detail::axpy_shift(Fn, kf - pad_f, coeff, xc + static_cast<std::size_t>(t + st) * Fn,
                               oc + static_cast<std::size_t>(t) * Fn);
          }
        }
      }
    }
  }

  if (out.requires_grad()) {
    out.node = make_node<T>("conv2d", {x, w, b});
    out.node->backprop = [Cout, Cin, Tn, Fn, KT, KF, pad_t, pad_f](Tensor<T>& o) {
      Tensor<T>& xt = o.node->parents[0];
      Tensor<T>& wt = o.node->parents[1];
      Tensor<T>& bt = o.node->parents[2];
      const T* dy = o.grad();
      if (xt.requires_grad()) {
        T* dx = xt.grad();
        const T* pw_ = wt.data();
#pragma omp parallel for schedule(static)
        for (int ci = 0; ci < Cin; ++ci) {
          T* dxc = dx + static_cast<std::size_t>(ci) * Tn * Fn;
          for (int co = 0; co < Cout; ++co) {
            const T* dyc = dy + static_cast<std::size_t>(co) * Tn * Fn;
            const T* wc = pw_ + (static_cast<std::size_t>(co) * Cin + ci) * KT * KF;
            for (int kt = 0; kt < KT; ++kt) {
              const int st = pad_t - kt;
              const int t_lo = std::max(0, -st), t_hi = std::min(Tn, Tn - st);
              for (int kf = 0; kf < KF; ++kf) {
                const T coeff = wc[kt * KF + kf];
                for (int t = t_lo; t < t_hi; ++t) {
                  detail::axpy_shift(Fn, pad_f - kf, coeff, dyc + static_cast<std::size_t>(t + st) * Fn,
                                     dxc + static_cast<std::size_t>(t) * Fn);
                }
              }
            }
          }
        }
      }
      if (wt.requires_grad()) {
        T* dw = wt.grad();
        const T* px_ = xt.data();
#pragma omp parallel for schedule(static)
        for (int co = 0; co < Cout; ++co) {
          const T* dyc = dy + static_cast<std::size_t>(co) * Tn * Fn;
          for (int ci = 0; ci < Cin; ++ci) {
            const T* xc = px_ + static_cast<std::size_t>(ci) * Tn * Fn;
            T* wc = dw + (static_cast<std::size_t>(co) * Cin + ci) * KT * KF;
            for (int kt = 0; kt < KT; ++kt) {
              const int st = kt - pad_t;
              const int t_lo = std::max(0, -st), t_hi = std::min(Tn, Tn - st);
              for (int kf = 0; kf < KF; ++kf) {
                T acc = 0;
                for (int t = t_lo; t < t_hi; ++t) {
                  acc += detail::dot_shift(Fn, kf - pad_f, xc + static_cast<std::size_t>(t + st) * Fn,
                                           dyc + static_cast<std::size_t>(t) * Fn);
                }
                wc[kt * KF + kf] += acc;
              }
            }
          }
        }
      }
      if (bt.requires_grad()) {
        T* db = bt.grad();
        for (int co = 0; co < Cout; ++co) {
          db[co] += detail::sum_span(static_cast<std::size_t>(Tn) * Fn,
                                     dy + static_cast<std::size_t>(co) * Tn * Fn);
        }
      }
    };
  }
  return out;
}

// Transposed 2-D counterpart; weight [Cin, Cout, KT, KF], center-cropped to
// the input footprint.
template <class T>
Tensor<T> transposed_conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() != 3) throw ShapeError("transposed_conv2d: expects [Cin, T, F]");
  if (w.rank() != 4) throw ShapeError("transposed_conv2d: weight must be [Cin, Cout, KT, KF]");
  const int Cin = x.dim(0), Tn = x.dim(1), Fn = x.dim(2);
  const int Cout = w.dim(1), KT = w.dim(2), KF = w.dim(3);
  if (w.dim(0) != Cin) {
    throw ShapeError("transposed_conv2d: input channels " + std::to_string(Cin) +
                     " vs weight Cin " + std::to_string(w.dim(0)));
  }
  if (b.size() != static_cast<std::size_t>(Cout)) {
    throw ShapeError("transposed_conv2d: bias must be [Cout]");
  }
  const int drop_t = (KT - 1) / 2, drop_f = (KF - 1) / 2;

  Tensor<T> out = Tensor<T>::zeros({Cout, Tn, Fn}, wants_grad(x) || wants_grad(w) || wants_grad(b));
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = b.data();
  T* po = out.data();
#pragma omp parallel for schedule(static)
  for (int co = 0; co < Cout; ++co) {
    T* oc = po + static_cast<std::size_t>(co) * Tn * Fn;
    for (std::size_t i = 0; i < static_cast<std::size_t>(Tn) * Fn; ++i) oc[i] = pb[co];
    for (int ci = 0; ci < Cin; ++ci) {
      const T* xc = px + static_cast<std::size_t>(ci) * Tn * Fn;
      const T* wc = pw + (static_cast<std::size_t>(ci) * Cout + co) * KT * KF;
      for (int kt = 0; kt < KT; ++kt) {
        const int st = drop_t - kt;
        const int t_lo = std::max(0, -st), t_hi = std::min(Tn, Tn - st);
        for (int kf = 0; kf < KF; ++kf) {
          const T coeff = wc[kt * KF + kf];
          for (int t = t_lo; t < t_hi; ++t) {
            detail::axpy_shift(Fn, drop_f - kf, coeff, xc + static_cast<std::size_t>(t + st) * Fn,
                               oc + static_cast<std::size_t>(t) * Fn);
          }
        }
      }
    }
  }

  if (out.requires_grad()) {
    out.node = make_node<T>("transposed_conv2d", {x, w, b});
    out.node->backprop = [Cout, Cin, Tn, Fn, KT, KF, drop_t, drop_f](Tensor<T>& o) {
      Tensor<T>& xt = o.node->parents[0];
      Tensor<T>& wt = o.node->parents[1];
      Tensor<T>& bt = o.node->parents[2];
      const T* dy = o.grad();
      if (xt.requires_grad()) {
        T* dx = xt.grad();
        const T* pw_ = wt.data();
#pragma omp parallel for schedule(static)
        for (int ci = 0; ci < Cin; ++ci) {
          T* dxc = dx + static_cast<std::size_t>(ci) * Tn * Fn;
          for (int co = 0; co < Cout; ++co) {
            const T* dyc = dy + static_cast<std::size_t>(co) * Tn * Fn;
            const T* wc = pw_ + (static_cast<std::size_t>(ci) * Cout + co) * KT * KF;
            for (int kt = 0; kt < KT; ++kt) {
              const int st = kt - drop_t;
              const int t_lo = std::max(0, -st), t_hi = std::min(Tn, Tn - st);
              for (int kf = 0; kf < KF; ++kf) {
                const T coeff = wc[kt * KF + kf];
                for (int t = t_lo; t < t_hi; ++t) {
                  detail::axpy_shift(Fn, kf - drop_f, coeff, dyc + static_cast<std::size_t>(t + st) * Fn,
                                     dxc + static_cast<std::size_t>(t) * Fn);
                }
              }
            }
          }
        }
      }
      if (wt.requires_grad()) {
        T* dw = wt.grad();
        const T* px_ = xt.data();
#pragma omp parallel for schedule(static)
        for (int ci = 0; ci < Cin; ++ci) {
          const T* xc = px_ + static_cast<std::size_t>(ci) * Tn * Fn;
          for (int co = 0; co < Cout; ++co) {
            const T* dyc = dy + static_cast<std::size_t>(co) * Tn * Fn;
            T* wc = dw + (static_cast<std::size_t>(ci) * Cout + co) * KT * KF;
            for (int kt = 0; kt < KT; ++kt) {
              const int st = drop_t - kt;
              const int t_lo = std::max(0, -st), t_hi = std::min(Tn, Tn - st);
              for (int kf = 0; kf < KF; ++kf) {
                T acc = 0;
                for (int t = t_lo; t < t_hi; ++t) {
                  acc += detail::dot_shift(Fn, drop_f - kf, xc + static_cast<std::size_t>(t + st) * Fn,
                                           dyc + static_cast<std::size_t>(t) * Fn);
                }
                wc[kt * KF + kf] += acc;
              }
            }
          }
        }
      }
      if (bt.requires_grad()) {
        T* db = bt.grad();
        for (int co = 0; co < Cout; ++co) {
          db[co] += detail::sum_span(static_cast<std::size_t>(Tn) * Fn,
                                     dy + static_cast<std::size_t>(co) * Tn * Fn);
        }
      }
    };
  }
  return out;
}

}  // namespace locoformer
