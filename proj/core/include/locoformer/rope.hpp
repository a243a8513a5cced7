// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Rotary position encoding and the scaled dot-product attention core. Both
// accept [D, L] or a stack of independent sequences [D, S, L].

#pragma once

#include "locoformer/conv.hpp"

namespace locoformer {

namespace detail {

// cos/sin of l * base^(-2i/dh) for pair index i and position l.
template <class T>
struct RopeTable {
  std::vector<T> cs, sn;  // [dh/2][L]
  RopeTable(int dh, int L, T base) : cs(static_cast<std::size_t>(dh / 2) * L), sn(cs.size()) {
    for (int i = 0; i < dh / 2; ++i) {
      const double theta = std::pow(static_cast<double>(base), -2.0 * i / dh);
      for (int l = 0; l < L; ++l) {
        const double a = l * theta;
        cs[static_cast<std::size_t>(i) * L + l] = static_cast<T>(std::cos(a));
        sn[static_cast<std::size_t>(i) * L + l] = static_cast<T>(std::sin(a));
      }
    }
  }
};

}  // namespace detail

// Rotates consecutive feature pairs (2i, 2i+1) of each head by l * base^(-2i/(D/H)).
// Positions are sequence indices along the last axis.
template <class T>
Tensor<T> rope_apply(const Tensor<T>& x, int heads, T base) {
  const auto d = detail::seq_dims(x, "rope_apply");
  const int D = d.cin, S = d.s, L = d.l;
  if (heads < 1 || D % heads != 0) {
    throw ConfigError("rope_apply: feature dim " + std::to_string(D) +
                      " not divisible by heads " + std::to_string(heads));
  }
  const int dh = D / heads;
  if (dh % 2 != 0) throw ConfigError("rope_apply: head dim " + std::to_string(dh) + " must be even");

  detail::RopeTable<T> tab(dh, L, base);
  Tensor<T> out = Tensor<T>::zeros(x.shape(), wants_grad(x));
  const T* px = x.data();
  T* po = out.data();
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < dh / 2; ++i) {
      const T* cs = tab.cs.data() + static_cast<std::size_t>(i) * L;
      const T* sn = tab.sn.data() + static_cast<std::size_t>(i) * L;
      const int da = h * dh + 2 * i, db = da + 1;
      for (int s = 0; s < S; ++s) {
        const T* xa = px + (static_cast<std::size_t>(da) * S + s) * L;
        const T* xb = px + (static_cast<std::size_t>(db) * S + s) * L;
        T* oa = po + (static_cast<std::size_t>(da) * S + s) * L;
        T* ob = po + (static_cast<std::size_t>(db) * S + s) * L;
        for (int l = 0; l < L; ++l) {
          oa[l] = xa[l] * cs[l] - xb[l] * sn[l];
          ob[l] = xa[l] * sn[l] + xb[l] * cs[l];
        }
      }
    }
  }

  if (out.requires_grad()) {
    out.node = make_node<T>("rope_apply", {x});
    out.node->backprop = [heads, dh, S, L, base](Tensor<T>& o) {
      Tensor<T>& p = o.node->parents[0];
      if (!p.requires_grad()) return;
      detail::RopeTable<T> tab(dh, L, base);
      const T* og = o.grad();
      T* g = p.grad();
      for (int h = 0; h < heads; ++h) {
        for (int i = 0; i < dh / 2; ++i) {
          const T* cs = tab.cs.data() + static_cast<std::size_t>(i) * L;
          const T* sn = tab.sn.data() + static_cast<std::size_t>(i) * L;
          const int da = h * dh + 2 * i, db = da + 1;
          for (int s = 0; s < S; ++s) {
            const T* ga = og + (static_cast<std::size_t>(da) * S + s) * L;
            const T* gb = og + (static_cast<std::size_t>(db) * S + s) * L;
            T* pa = g + (static_cast<std::size_t>(da) * S + s) * L;
            T* pb = g + (static_cast<std::size_t>(db) * S + s) * L;
            // adjoint rotation: by -angle
            for (int l = 0; l < L; ++l) {
              pa[l] += ga[l] * cs[l] + gb[l] * sn[l];
              pb[l] += -ga[l] * sn[l] + gb[l] * cs[l];
            }
          }
        }
      }
    };
  }
  return out;
}

// Softmax attention over each sequence: per slice s and head h,
// A = softmax(Q^T K / sqrt(dh)) over keys, out = V A^T. Slices and heads are
// independent; the softmax weights are kept for backward.
template <class T>
Tensor<T> attention_core(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, int heads) {
  detail::check_same_shape(q, k, "attention_core");
  detail::check_same_shape(q, v, "attention_core");
  const auto dims = detail::seq_dims(q, "attention_core");
  const int D = dims.cin, S = dims.s, L = dims.l;
  if (heads < 1 || D % heads != 0) {
    throw ConfigError("attention_core: feature dim " + std::to_string(D) +
                      " not divisible by heads " + std::to_string(heads));
  }
  const int dh = D / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const std::size_t LL = static_cast<std::size_t>(L) * L;

  Tensor<T> out = Tensor<T>::zeros(q.shape(), wants_grad(q) || wants_grad(k) || wants_grad(v));
  const bool track = out.requires_grad();
  auto weights = track ? std::make_shared<std::vector<T>>(static_cast<std::size_t>(S) * heads * LL)
                       : nullptr;
  const T* pq = q.data();
  const T* pk = k.data();
  const T* pv = v.data();
  T* po = out.data();

#pragma omp parallel for schedule(static) collapse(2)
  for (int s = 0; s < S; ++s) {
    for (int h = 0; h < heads; ++h) {
      std::vector<T> a(LL, T(0));
      const std::size_t slab = (static_cast<std::size_t>(h) * dh * S + s) * L;
      // logits[i, j] = scale * sum_d q[d, i] * k[d, j]
      for (int d = 0; d < dh; ++d) {
        const std::size_t off = slab + static_cast<std::size_t>(d) * S * L;
        const T* qr = pq + off;
        const T* kr = pk + off;
        int i = 0;
        for (; i + 4 <= L; i += 4) {
          detail::scatter_quad(static_cast<std::size_t>(L), kr, scale * qr[i], scale * qr[i + 1],
                               scale * qr[i + 2], scale * qr[i + 3],
                               a.data() + static_cast<std::size_t>(i) * L,
                               a.data() + static_cast<std::size_t>(i + 1) * L,
                               a.data() + static_cast<std::size_t>(i + 2) * L,
                               a.data() + static_cast<std::size_t>(i + 3) * L);
        }
        for (; i < L; ++i) {
          detail::axpy(static_cast<std::size_t>(L), scale * qr[i], kr, a.data() + static_cast<std::size_t>(i) * L);
        }
      }
      for (int i = 0; i < L; ++i) {
        T* row = a.data() + static_cast<std::size_t>(i) * L;
        T mx = row[0];
        for (int j = 1; j < L; ++j) mx = std::max(mx, row[j]);
        T z = 0;
        for (int j = 0; j < L; ++j) {
          row[j] = detail::fexp(row[j] - mx);
          z += row[j];
        }
        const T invz = T(1) / z;
        for (int j = 0; j < L; ++j) row[j] *= invz;
      }
      // out[d, i] = sum_j v[d, j] * A[i, j]
      for (int d = 0; d < dh; ++d) {
        const std::size_t off = slab + static_cast<std::size_t>(d) * S * L;
        const T* vr = pv + off;
        T* orow = po + off;
        for (int i = 0; i < L; ++i) {
          orow[i] = detail::dotp(static_cast<std::size_t>(L), a.data() + static_cast<std::size_t>(i) * L, vr);
        }
      }
      if (track) {
        std::copy(a.begin(), a.end(),
                  weights->begin() + (static_cast<std::size_t>(s) * heads + h) * LL);
      }
    }
  }

  if (track) {
    out.node = make_node<T>("attention_core", {q, k, v});
    out.node->backprop = [heads, dh, S, L, LL, scale, weights](Tensor<T>& o) {
      Tensor<T>& qt = o.node->parents[0];
      Tensor<T>& kt = o.node->parents[1];
      Tensor<T>& vt = o.node->parents[2];
      const T* dy = o.grad();
      const T* pq_ = qt.data();
      const T* pk_ = kt.data();
      const T* pv_ = vt.data();
      T* dq = qt.requires_grad() ? qt.grad() : nullptr;
      T* dk = kt.requires_grad() ? kt.grad() : nullptr;
      T* dv = vt.requires_grad() ? vt.grad() : nullptr;
#pragma omp parallel for schedule(static) collapse(2)
      for (int s = 0; s < S; ++s) {
        for (int h = 0; h < heads; ++h) {
          const T* a = weights->data() + (static_cast<std::size_t>(s) * heads + h) * LL;
          const std::size_t slab = (static_cast<std::size_t>(h) * dh * S + s) * L;
          std::vector<T> da(LL, T(0));
          for (int d = 0; d < dh; ++d) {
            const std::size_t off = slab + static_cast<std::size_t>(d) * S * L;
            const T* dyr = dy + off;
            const T* vr = pv_ + off;
            if (dv) {
              T* dvr = dv + off;
              int i = 0;
              for (; i + 4 <= L; i += 4) {
                detail::gather_quad(static_cast<std::size_t>(L), a + static_cast<std::size_t>(i) * L,
                                    a + static_cast<std::size_t>(i + 1) * L,
                                    a + static_cast<std::size_t>(i + 2) * L,
                                    a + static_cast<std::size_t>(i + 3) * L, dyr[i], dyr[i + 1],
                                    dyr[i + 2], dyr[i + 3], dvr);
              }
              for (; i < L; ++i) {
                detail::axpy(static_cast<std::size_t>(L), dyr[i], a + static_cast<std::size_t>(i) * L, dvr);
              }
            }
            int i = 0;
            for (; i + 4 <= L; i += 4) {
              detail::scatter_quad(static_cast<std::size_t>(L), vr, dyr[i], dyr[i + 1], dyr[i + 2],
                                   dyr[i + 3], da.data() + static_cast<std::size_t>(i) * L,
                                   da.data() + static_cast<std::size_t>(i + 1) * L,
                                   da.data() + static_cast<std::size_t>(i + 2) * L,
                                   da.data() + static_cast<std::size_t>(i + 3) * L);
            }
            for (; i < L; ++i) {
              detail::axpy(static_cast<std::size_t>(L), dyr[i], vr, da.data() + static_cast<std::size_t>(i) * L);
            }
          }
          // softmax backward row-wise, then fold in the logit scale
          for (int i = 0; i < L; ++i) {
            const T* ar = a + static_cast<std::size_t>(i) * L;
            T* dar = da.data() + static_cast<std::size_t>(i) * L;
            const T sdot = detail::dotp(static_cast<std::size_t>(L), dar, ar);
            for (int j = 0; j < L; ++j) dar[j] = scale * ar[j] * (dar[j] - sdot);
          }
          for (int d = 0; d < dh; ++d) {
            const std::size_t off = slab + static_cast<std::size_t>(d) * S * L;
            const T* qr = pq_ + off;
            const T* kr = pk_ + off;
            if (dq) {
              T* dqr = dq + off;
              for (int i = 0; i < L; ++i) {
                dqr[i] += detail::dotp(static_cast<std::size_t>(L), da.data() + static_cast<std::size_t>(i) * L, kr);
              }
            }
            if (dk) {
              T* dkr = dk + off;
              int i = 0;
              for (; i + 4 <= L; i += 4) {
                detail::gather_quad(static_cast<std::size_t>(L),
                                    da.data() + static_cast<std::size_t>(i) * L,
                                    da.data() + static_cast<std::size_t>(i + 1) * L,
                                    da.data() + static_cast<std::size_t>(i + 2) * L,
                                    da.data() + static_cast<std::size_t>(i + 3) * L, qr[i],
                                    qr[i + 1], qr[i + 2], qr[i + 3], dkr);
              }
              for (; i < L; ++i) {
                detail::axpy(static_cast<std::size_t>(L), qr[i], da.data() + static_cast<std::size_t>(i) * L, dkr);
              }
            }
          }
        }
      }
    };
  }
  return out;
}

}  // namespace locoformer
