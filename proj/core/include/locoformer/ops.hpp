// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable op set: elementwise arithmetic, reductions, softmax and
// matmul. Convolutions and normalizations live in conv.hpp / norms.hpp.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>

#include "locoformer/kernels.hpp"
#include "locoformer/tensor.hpp"

namespace locoformer {

namespace detail {

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + Tensor<T>::shape_string(a.shape()) +
                     " vs " + Tensor<T>::shape_string(b.shape()));
  }
}

template <class T>
void accumulate_grad(Tensor<T>& parent, const T* g, std::size_t n) {
  if (!parent.requires_grad()) return;
  T* pg = parent.grad();
  for (std::size_t i = 0; i < n; ++i) pg[i] += g[i];
}

}  // namespace detail

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros(a.shape(), wants_grad(a) || wants_grad(b));
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  if (out.requires_grad()) {
    out.node = make_node<T>("add", {a, b});
    out.node->backprop = [n](Tensor<T>& o) {
      detail::accumulate_grad(o.node->parents[0], o.grad(), n);
      detail::accumulate_grad(o.node->parents[1], o.grad(), n);
    };
  }
  return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros(a.shape(), wants_grad(a) || wants_grad(b));
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
  if (out.requires_grad()) {
    out.node = make_node<T>("sub", {a, b});
    out.node->backprop = [n](Tensor<T>& o) {
      detail::accumulate_grad(o.node->parents[0], o.grad(), n);
      Tensor<T>& pbt = o.node->parents[1];
      if (pbt.requires_grad()) {
        T* g = pbt.grad();
        const T* og = o.grad();
        for (std::size_t i = 0; i < n; ++i) g[i] -= og[i];
      }
    };
  }
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros(a.shape(), wants_grad(a) || wants_grad(b));
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  if (out.requires_grad()) {
    out.node = make_node<T>("mul", {a, b});
    out.node->backprop = [n](Tensor<T>& o) {
      Tensor<T>& pat = o.node->parents[0];
      Tensor<T>& pbt = o.node->parents[1];
      const T* og = o.grad();
      if (pat.requires_grad()) {
        T* g = pat.grad();
        const T* vb = pbt.data();
        for (std::size_t i = 0; i < n; ++i) g[i] += og[i] * vb[i];
      }
      if (pbt.requires_grad()) {
        T* g = pbt.grad();
        const T* va = pat.data();
        for (std::size_t i = 0; i < n; ++i) g[i] += og[i] * va[i];
      }
    };
  }
  return out;
}

template <class T>
Tensor<T> divide(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "divide");
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros(a.shape(), wants_grad(a) || wants_grad(b));
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] / pb[i];
  if (out.requires_grad()) {
    out.node = make_node<T>("divide", {a, b});
    out.node->backprop = [n](Tensor<T>& o) {
      Tensor<T>& pat = o.node->parents[0];
      Tensor<T>& pbt = o.node->parents[1];
      const T* og = o.grad();
      const T* va = pat.data();
      const T* vb = pbt.data();
      if (pat.requires_grad()) {
        T* g = pat.grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += og[i] / vb[i];
      }
      if (pbt.requires_grad()) {
        T* g = pbt.grad();
        for (std::size_t i = 0; i < n; ++i) g[i] -= og[i] * va[i] / (vb[i] * vb[i]);
      }
    };
  }
  return out;
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros(a.shape(), wants_grad(a));
  const T* pa = a.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + c;
  if (out.requires_grad()) {
    out.node = make_node<T>("add_scalar", {a});
    out.node->backprop = [n](Tensor<T>& o) {
      detail::accumulate_grad(o.node->parents[0], o.grad(), n);
    };
  }
  return out;
}

template <class T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros(a.shape(), wants_grad(a));
  const T* pa = a.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * c;
  if (out.requires_grad()) {
    out.node = make_node<T>("mul_scalar", {a});
    out.node->backprop = [n, c](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      T* g = p.grad();
      const T* og = o.grad();
      for (std::size_t i = 0; i < n; ++i) g[i] += og[i] * c;
    };
  }
  return out;
}

template <class T>
Tensor<T> neg(const Tensor<T>& a) {
  return mul_scalar(a, T(-1));
}

template <class T>
Tensor<T> absolute(const Tensor<T>& a) {
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros(a.shape(), wants_grad(a));
  const T* pa = a.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = std::abs(pa[i]);
  if (out.requires_grad()) {
    out.node = make_node<T>("absolute", {a});
    out.node->backprop = [n](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      T* g = p.grad();
      const T* og = o.grad();
      const T* v = p.data();
      for (std::size_t i = 0; i < n; ++i) {
        // subgradient 0 at the kink
        g[i] += og[i] * (v[i] > T(0) ? T(1) : (v[i] < T(0) ? T(-1) : T(0)));
      }
    };
  }
  return out;
}

template <class T>
Tensor<T> log_nat(const Tensor<T>& a) {
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros(a.shape(), wants_grad(a));
  const T* pa = a.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pa[i] > T(0))) throw NumericError("log: non-positive input");
    po[i] = std::log(pa[i]);
  }
  if (out.requires_grad()) {
    out.node = make_node<T>("log", {a});
    out.node->backprop = [n](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      T* g = p.grad();
      const T* og = o.grad();
      const T* v = p.data();
      for (std::size_t i = 0; i < n; ++i) g[i] += og[i] / v[i];
    };
  }
  return out;
}

namespace detail {

// Branch-free so the surrounding elementwise loops vectorize; fexp clamps
// its argument, which keeps the divisor finite across the whole range.
template <class T>
inline T stable_sigmoid(T x) {
  return T(1) / (T(1) + fexp(-x));
}

}  // namespace detail

// swish(x) = x * sigmoid(x)
template <class T>
Tensor<T> swish(const Tensor<T>& a) {
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros(a.shape(), wants_grad(a));
  const T* pa = a.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * detail::stable_sigmoid(pa[i]);
  if (out.requires_grad()) {
    out.node = make_node<T>("swish", {a});
    out.node->backprop = [n](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      T* g = p.grad();
      const T* og = o.grad();
      const T* v = p.data();
      for (std::size_t i = 0; i < n; ++i) {
        const T s = detail::stable_sigmoid(v[i]);
        g[i] += og[i] * (s + v[i] * s * (T(1) - s));
      }
    };
  }
  return out;
}

template <class T>
Tensor<T> sum_all(const Tensor<T>& a) {
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros({1}, wants_grad(a));
  out[0] = detail::sum_span(n, a.data());
  if (out.requires_grad()) {
    out.node = make_node<T>("sum", {a});
    out.node->backprop = [n](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      T* g = p.grad();
      const T s = o.grad()[0];
      for (std::size_t i = 0; i < n; ++i) g[i] += s;
    };
  }
  return out;
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& a) {
  return mul_scalar(sum_all(a), T(1) / static_cast<T>(a.size()));
}

template <class T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "dot");
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros({1}, wants_grad(a) || wants_grad(b));
  out[0] = detail::dotp(n, a.data(), b.data());
  if (out.requires_grad()) {
    out.node = make_node<T>("dot", {a, b});
    out.node->backprop = [n](Tensor<T>& o) {
      Tensor<T>& pa = o.node->parents[0];
      Tensor<T>& pb = o.node->parents[1];
      const T s = o.grad()[0];
      if (pa.requires_grad()) detail::axpy(n, s, pb.data(), pa.grad());
      if (pb.requires_grad()) detail::axpy(n, s, pa.data(), pb.grad());
    };
  }
  return out;
}

// y = x - mean(x)
template <class T>
Tensor<T> sub_mean(const Tensor<T>& a) {
  const std::size_t n = a.size();
  Tensor<T> out = Tensor<T>::zeros(a.shape(), wants_grad(a));
  const T m = detail::sum_span(n, a.data()) / static_cast<T>(n);
  const T* pa = a.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] - m;
  if (out.requires_grad()) {
    out.node = make_node<T>("sub_mean", {a});
    out.node->backprop = [n](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      const T* og = o.grad();
      const T gm = detail::sum_span(n, og) / static_cast<T>(n);
      T* g = p.grad();
      for (std::size_t i = 0; i < n; ++i) g[i] += og[i] - gm;
    };
  }
  return out;
}

// y = x * s where s is a one-element tensor in the graph.
template <class T>
Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& s) {
  if (s.size() != 1) throw ShapeError("scale_by: scale must be a one-element tensor");
  const std::size_t n = x.size();
  Tensor<T> out = Tensor<T>::zeros(x.shape(), wants_grad(x) || wants_grad(s));
  const T sv = s[0];
  const T* px = x.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = px[i] * sv;
  if (out.requires_grad()) {
    out.node = make_node<T>("scale_by", {x, s});
    out.node->backprop = [n](Tensor<T>& o) {
      Tensor<T>& px_ = o.node->parents[0];
      Tensor<T>& ps_ = o.node->parents[1];
      const T* og = o.grad();
      if (px_.requires_grad()) detail::axpy(n, ps_[0], og, px_.grad());
      if (ps_.requires_grad()) ps_.grad()[0] += detail::dotp(n, og, px_.data());
    };
  }
  return out;
}

// Softmax over the last axis, computed with max subtraction.
template <class T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  const int L = x.dim(x.rank() - 1);
  const std::size_t n = x.size();
  const std::size_t rows = n / static_cast<std::size_t>(L);
  const T* px = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(px[i])) throw NumericError("softmax: non-finite input");
  }
  Tensor<T> out = Tensor<T>::zeros(x.shape(), wants_grad(x));
  T* po = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = px + r * L;
    T* yr = po + r * L;
    T mx = xr[0];
    for (int i = 1; i < L; ++i) mx = std::max(mx, xr[i]);
    T z = 0;
    for (int i = 0; i < L; ++i) {
      yr[i] = detail::fexp(xr[i] - mx);
      z += yr[i];
    }
    const T inv = T(1) / z;
    for (int i = 0; i < L; ++i) yr[i] *= inv;
  }
  if (out.requires_grad()) {
    out.node = make_node<T>("softmax", {x});
    out.node->backprop = [rows, L](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      const T* y = o.data();
      const T* og = o.grad();
      T* g = p.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* yr = y + r * L;
        const T* dr = og + r * L;
        T* gr = g + r * L;
        const T s = detail::dotp(static_cast<std::size_t>(L), dr, yr);
        for (int i = 0; i < L; ++i) gr[i] += yr[i] * (dr[i] - s);
      }
    };
  }
  return out;
}

// C[m,n] = A[m,k] * B[k,n]
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul: expects rank-2 operands");
  const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2) {
    throw ShapeError("matmul: inner extents differ, " + Tensor<T>::shape_string(a.shape()) +
                     " vs " + Tensor<T>::shape_string(b.shape()));
  }
  Tensor<T> out = Tensor<T>::zeros({m, n}, wants_grad(a) || wants_grad(b));
  const T* pa = a.data();
  const T* pb = b.data();
  T* pc = out.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T* crow = pc + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      detail::axpy(static_cast<std::size_t>(n), pa[static_cast<std::size_t>(i) * k + kk],
                   pb + static_cast<std::size_t>(kk) * n, crow);
    }
  }
  if (out.requires_grad()) {
    out.node = make_node<T>("matmul", {a, b});
    out.node->backprop = [m, k, n](Tensor<T>& o) {
      Tensor<T>& pa_ = o.node->parents[0];
      Tensor<T>& pb_ = o.node->parents[1];
      const T* dc = o.grad();
      if (pa_.requires_grad()) {
        T* da = pa_.grad();
        const T* vb = pb_.data();
#pragma omp parallel for schedule(static)
        for (int i = 0; i < m; ++i) {
          const T* dcrow = dc + static_cast<std::size_t>(i) * n;
          for (int kk = 0; kk < k; ++kk) {
            da[static_cast<std::size_t>(i) * k + kk] +=
                detail::dotp(static_cast<std::size_t>(n), dcrow, vb + static_cast<std::size_t>(kk) * n);
          }
        }
      }
      if (pb_.requires_grad()) {
        T* db = pb_.grad();
        const T* va = pa_.data();
#pragma omp parallel for schedule(static)
        for (int kk = 0; kk < k; ++kk) {
          T* dbrow = db + static_cast<std::size_t>(kk) * n;
          for (int i = 0; i < m; ++i) {
            detail::axpy(static_cast<std::size_t>(n), va[static_cast<std::size_t>(i) * k + kk],
                         dc + static_cast<std::size_t>(i) * n, dbrow);
          }
        }
      }
    };
  }
  return out;
}

// [A,B,C] -> [A,C,B]
template <class T>
Tensor<T> transpose_12(const Tensor<T>& x) {
  if (x.rank() != 3) throw ShapeError("transpose_12: expects rank-3 input");
  const int A = x.dim(0), B = x.dim(1), C = x.dim(2);
  Tensor<T> out = Tensor<T>::zeros({A, C, B}, wants_grad(x));
  const T* px = x.data();
  T* po = out.data();
  for (int a = 0; a < A; ++a) {
    const T* xa = px + static_cast<std::size_t>(a) * B * C;
    T* oa = po + static_cast<std::size_t>(a) * B * C;
    for (int b = 0; b < B; ++b) {
      for (int c = 0; c < C; ++c) oa[static_cast<std::size_t>(c) * B + b] = xa[static_cast<std::size_t>(b) * C + c];
    }
  }
  if (out.requires_grad()) {
    out.node = make_node<T>("transpose_12", {x});
    out.node->backprop = [A, B, C](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      const T* og = o.grad();
      T* g = p.grad();
      for (int a = 0; a < A; ++a) {
        const T* oa = og + static_cast<std::size_t>(a) * B * C;
        T* ga = g + static_cast<std::size_t>(a) * B * C;
        for (int b = 0; b < B; ++b) {
          for (int c = 0; c < C; ++c) ga[static_cast<std::size_t>(b) * C + c] += oa[static_cast<std::size_t>(c) * B + b];
        }
      }
    };
  }
  return out;
}

// Gather channels (rows of the leading axis) in the given order.
template <class T>
Tensor<T> select_channels(const Tensor<T>& x, const std::vector<int>& idx) {
  if (x.rank() < 2) throw ShapeError("select_channels: expects rank >= 2");
  const int C = x.dim(0);
  const std::size_t row = x.size() / static_cast<std::size_t>(C);
  for (int i : idx) {
    if (i < 0 || i >= C) throw ShapeError("select_channels: index " + std::to_string(i) + " out of range");
  }
  std::vector<int> oshape = x.shape();
  oshape[0] = static_cast<int>(idx.size());
  Tensor<T> out = Tensor<T>::zeros(oshape, wants_grad(x));
  const T* px = x.data();
  T* po = out.data();
  for (std::size_t j = 0; j < idx.size(); ++j) {
    std::memcpy(po + j * row, px + static_cast<std::size_t>(idx[j]) * row, row * sizeof(T));
  }
  if (out.requires_grad()) {
    out.node = make_node<T>("select_channels", {x});
    out.node->backprop = [idx, row](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      const T* og = o.grad();
      T* g = p.grad();
      for (std::size_t j = 0; j < idx.size(); ++j) {
        detail::axpy(row, T(1), og + j * row, g + static_cast<std::size_t>(idx[j]) * row);
      }
    };
  }
  return out;
}

}  // namespace locoformer
