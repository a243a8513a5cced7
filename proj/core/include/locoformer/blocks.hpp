// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Dual-path building blocks: grouped RMS norm parameters, the ConvSwiGLU
// feed-forward, rotary multi-head self-attention and the macaron block that
// chains them with half-scaled FFN residuals. A block runs on [D, L] or on a
// stack [D, S, L] of independent sequences sharing its weights; the dual-path
// pass feeds it the frequency axis (S = frames) or the transposed time axis
// (S = bins).

#pragma once

#include <string>

#include "locoformer/conv.hpp"
#include "locoformer/norms.hpp"
#include "locoformer/rope.hpp"

namespace locoformer {

template <class T>
struct NormParams {
  Tensor<T> gain;  // [D]
  Tensor<T> bias;  // [D]
  int groups = 1;
  T eps = T(1e-5);
};

template <class T>
NormParams<T> make_norm(int d, int groups, T eps = T(1e-5)) {
  if (groups < 1 || d % groups != 0) {
    throw ConfigError("norm: dim " + std::to_string(d) + " not divisible by groups " +
                      std::to_string(groups));
  }
  NormParams<T> p;
  p.gain = Tensor<T>::zeros({d}, true);
  for (int i = 0; i < d; ++i) p.gain[i] = T(1);
  p.bias = Tensor<T>::zeros({d}, true);
  p.groups = groups;
  p.eps = eps;
  return p;
}

template <class T>
Tensor<T> apply_norm(const Tensor<T>& z, const NormParams<T>& p) {
  return rms_group_norm(z, p.gain, p.bias, p.groups, p.eps);
}

// Uniform fan-in initialization in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
template <class T>
Tensor<T> init_weight(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor<T> w = Tensor<T>::zeros(std::move(shape), true);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(rng.uniform(-bound, bound));
  return w;
}

template <class T>
struct ConvSwiGLUParams {
  NormParams<T> norm;
  Tensor<T> gate_w, gate_b;      // conv D -> C, kernel K
  Tensor<T> value_w, value_b;    // second branch; absent when swish_only
  Tensor<T> deconv_w, deconv_b;  // transposed conv C -> D, kernel K
  bool swish_only = false;
  int hidden() const { return gate_w.dim(0); }
  int kernel() const { return gate_w.dim(2); }
};

template <class T>
ConvSwiGLUParams<T> make_conv_swiglu(int d, int c, int k, int groups, bool swish_only, Rng& rng,
                                     T norm_eps = T(1e-5)) {
  ConvSwiGLUParams<T> p;
  p.norm = make_norm<T>(d, groups, norm_eps);
  p.swish_only = swish_only;
  p.gate_w = init_weight<T>({c, d, k}, d * k, rng);
  p.gate_b = Tensor<T>::zeros({c}, true);
  if (!swish_only) {
    p.value_w = init_weight<T>({c, d, k}, d * k, rng);
    p.value_b = Tensor<T>::zeros({c}, true);
  }
  p.deconv_w = init_weight<T>({c, d, k}, c * k, rng);
  p.deconv_b = Tensor<T>::zeros({d}, true);
  return p;
}

// Norm -> Swish(Conv1D) (x) Conv1D -> Deconv1D, all along the last axis. The
// caller owns the residual and the 1/2 scaling.
template <class T>
Tensor<T> conv_swiglu(const Tensor<T>& z, const ConvSwiGLUParams<T>& p) {
  Tensor<T> n = apply_norm(z, p.norm);
  Tensor<T> g = swish(conv1d(n, p.gate_w, p.gate_b));
  Tensor<T> h = p.swish_only ? g : mul(g, conv1d(n, p.value_w, p.value_b));
  return transposed_conv1d(h, p.deconv_w, p.deconv_b);
}

template <class T>
struct AttentionParams {
  NormParams<T> norm;
  Tensor<T> wq, wk, wv, wo;  // [D, D], no biases
  int heads = 4;
  T rope_base = T(10000);
};

template <class T>
AttentionParams<T> make_attention(int d, int heads, int groups, Rng& rng, T rope_base = T(10000),
                                  T norm_eps = T(1e-5)) {
  if (heads < 1 || d % heads != 0) {
    throw ConfigError("attention: dim " + std::to_string(d) + " not divisible by heads " +
                      std::to_string(heads));
  }
  if ((d / heads) % 2 != 0) {
    throw ConfigError("attention: head dim " + std::to_string(d / heads) +
                      " must be even for rotary pairing");
  }
  AttentionParams<T> p;
  p.norm = make_norm<T>(d, groups, norm_eps);
  p.wq = init_weight<T>({d, d}, d, rng);
  p.wk = init_weight<T>({d, d}, d, rng);
  p.wv = init_weight<T>({d, d}, d, rng);
  p.wo = init_weight<T>({d, d}, d, rng);
  p.heads = heads;
  p.rope_base = rope_base;
  return p;
}

// Norm -> Q/K/V projections -> rotary on Q,K -> softmax attention -> output
// projection. Module output only; the residual add stays with the caller.
template <class T>
Tensor<T> mhsa(const Tensor<T>& z, const AttentionParams<T>& p) {
  const auto d = detail::seq_dims(z, "mhsa");
  Tensor<T> n = apply_norm(z, p.norm);
  Tensor<T> flat = n.reshaped({d.cin, d.s * d.l});
  const std::vector<int> stacked{d.cin, d.s, d.l};
  Tensor<T> q = rope_apply(matmul(p.wq, flat).reshaped(stacked), p.heads, p.rope_base);
  Tensor<T> k = rope_apply(matmul(p.wk, flat).reshaped(stacked), p.heads, p.rope_base);
  Tensor<T> v = matmul(p.wv, flat).reshaped(stacked);
  Tensor<T> att = attention_core(q, k, v, p.heads);
  return matmul(p.wo, att.reshaped({d.cin, d.s * d.l})).reshaped(z.shape());
}

template <class T>
struct LocoformerBlockParams {
  ConvSwiGLUParams<T> ffn_pre;  // absent in single-FFN ablation
  AttentionParams<T> attn;
  ConvSwiGLUParams<T> ffn_post;
  bool single_ffn = false;
};

// single_ffn drops the pre-FFN, widens the remaining hidden (2C, or 3C when
// the gate is also reduced to plain Swish) and removes the 1/2 residual
// scaling, following the usual single-FFN Transformer layout.
template <class T>
LocoformerBlockParams<T> make_block(int d, int c, int k, int heads, int groups, bool single_ffn,
                                    bool swish_only, Rng& rng, T norm_eps = T(1e-5)) {
  LocoformerBlockParams<T> p;
  p.single_ffn = single_ffn;
  const int c_post = single_ffn ? (swish_only ? 3 * c : 2 * c) : c;
  if (!single_ffn) p.ffn_pre = make_conv_swiglu<T>(d, c, k, groups, swish_only, rng, norm_eps);
  p.attn = make_attention<T>(d, heads, groups, rng, T(10000), norm_eps);
  p.ffn_post = make_conv_swiglu<T>(d, c_post, k, groups, swish_only, rng, norm_eps);
  return p;
}

template <class T>
Tensor<T> locoformer_block(const Tensor<T>& z, const LocoformerBlockParams<T>& p) {
  Tensor<T> h = z;
  if (!p.single_ffn) h = add(h, mul_scalar(conv_swiglu(h, p.ffn_pre), T(0.5)));
  h = add(h, mhsa(h, p.attn));
  Tensor<T> post = conv_swiglu(h, p.ffn_post);
  return add(h, p.single_ffn ? post : mul_scalar(post, T(0.5)));
}

enum class Axis { Frequency, Time };

// Frequency: each of the T frames is a sequence over bins. Time: transpose,
// run the same block over each bin's frame sequence, transpose back.
template <class T>
Tensor<T> dual_path_pass(const Tensor<T>& z, const LocoformerBlockParams<T>& p, Axis axis) {
  if (z.rank() != 3) throw ShapeError("dual_path_pass: expects [D, T, F]");
  if (axis == Axis::Frequency) return locoformer_block(z, p);
  return transpose_12(locoformer_block(transpose_12(z), p));
}

// Named-parameter traversal in a fixed order; initialization, the optimizer,
// checkpoints and parameter counting all walk this.
template <class T, class Fn>
void visit_params(NormParams<T>& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".gain", p.gain);
  fn(prefix + ".bias", p.bias);
}

template <class T, class Fn>
void visit_params(ConvSwiGLUParams<T>& p, const std::string& prefix, Fn&& fn) {
  visit_params(p.norm, prefix + ".norm", fn);
  fn(prefix + ".gate.w", p.gate_w);
  fn(prefix + ".gate.b", p.gate_b);
  if (!p.swish_only) {
    fn(prefix + ".value.w", p.value_w);
    fn(prefix + ".value.b", p.value_b);
  }
  fn(prefix + ".deconv.w", p.deconv_w);
  fn(prefix + ".deconv.b", p.deconv_b);
}

template <class T, class Fn>
void visit_params(AttentionParams<T>& p, const std::string& prefix, Fn&& fn) {
  visit_params(p.norm, prefix + ".norm", fn);
  fn(prefix + ".wq", p.wq);
  fn(prefix + ".wk", p.wk);
  fn(prefix + ".wv", p.wv);
  fn(prefix + ".wo", p.wo);
}

template <class T, class Fn>
void visit_params(LocoformerBlockParams<T>& p, const std::string& prefix, Fn&& fn) {
  if (!p.single_ffn) visit_params(p.ffn_pre, prefix + ".ffn_pre", fn);
  visit_params(p.attn, prefix + ".attn", fn);
  visit_params(p.ffn_post, prefix + ".ffn_post", fn);
}

}  // namespace locoformer
