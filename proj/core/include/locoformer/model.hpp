// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end separator: STFT -> Conv2D+gLN encoder -> B pairs of
// frequency/time dual-path blocks -> DeConv2D to 2N channels -> per-source
// inverse STFT. Presets follow the published Small/Medium/Large table.

#pragma once

#include "locoformer/blocks.hpp"
#include "locoformer/stft.hpp"

namespace locoformer {

struct ModelConfig {
  int embed_dim = 128;   // D
  int num_blocks = 6;    // B dual-path pairs
  int hidden_dim = 384;  // C
  int kernel_size = 4;   // K
  int stride = 1;        // fixed at 1
  int num_heads = 4;     // H
  int norm_groups = 4;   // G
  int num_sources = 2;   // N
  StftConfig stft{8000, 128, 64};
  bool single_ffn = false;     // drop pre-FFN, widen post-FFN
  bool swish_only = false;     // plain Swish instead of the gated pair
  bool plain_rmsnorm = false;  // ungrouped RMSNorm everywhere
  double norm_eps = 1e-5;

  int effective_groups() const { return plain_rmsnorm ? 1 : norm_groups; }

  void validate() const {
    if (embed_dim < 2) throw ConfigError("model: embed_dim must be >= 2");
    if (num_blocks < 1) throw ConfigError("model: num_blocks must be >= 1");
    if (hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
    if (kernel_size < 1) throw ConfigError("model: kernel_size must be >= 1");
    if (stride != 1) throw ConfigError("model: stride is fixed at 1");
    if (num_sources < 1) throw ConfigError("model: num_sources must be >= 1");
    if (num_heads < 1 || embed_dim % num_heads != 0) {
      throw ConfigError("model: embed_dim " + std::to_string(embed_dim) +
                        " not divisible by num_heads " + std::to_string(num_heads));
    }
    if ((embed_dim / num_heads) % 2 != 0) {
      throw ConfigError("model: head dim " + std::to_string(embed_dim / num_heads) +
                        " must be even for rotary pairing");
    }
    if (effective_groups() < 1 || embed_dim % effective_groups() != 0) {
      throw ConfigError("model: embed_dim " + std::to_string(embed_dim) +
                        " not divisible by norm_groups " + std::to_string(norm_groups));
    }
    stft.validate();
  }
};

// Small / Medium / Large presets; everything else stays at the shared
// defaults (K=4, S=1, H=4, G=4).
inline ModelConfig build_config(char size, int num_sources = 2) {
  ModelConfig cfg;
  switch (size) {
    case 'S':
      cfg.embed_dim = 96;
      cfg.num_blocks = 4;
      cfg.hidden_dim = 256;
      break;
    case 'M':
      cfg.embed_dim = 128;
      cfg.num_blocks = 6;
      cfg.hidden_dim = 384;
      break;
    case 'L':
      cfg.embed_dim = 128;
      cfg.num_blocks = 9;
      cfg.hidden_dim = 384;
      break;
    default:
      throw ConfigError(std::string("build_config: unknown size '") + size + "', expected S, M or L");
  }
  cfg.num_sources = num_sources;
  cfg.validate();
  return cfg;
}

template <class T>
struct ModelParams {
  Tensor<T> enc_w, enc_b;        // Conv2D 2 -> D, 3x3
  Tensor<T> enc_gain, enc_bias;  // gLN affine
  std::vector<LocoformerBlockParams<T>> freq_blocks, time_blocks;
  Tensor<T> dec_w, dec_b;  // DeConv2D D -> 2N, 3x3
  T gln_eps = T(1e-5);
};

template <class T, class Fn>
void visit_params(ModelParams<T>& p, Fn&& fn) {
  fn("enc.w", p.enc_w);
  fn("enc.b", p.enc_b);
  fn("enc.gln.gain", p.enc_gain);
  fn("enc.gln.bias", p.enc_bias);
  for (std::size_t i = 0; i < p.freq_blocks.size(); ++i) {
    const std::string base = "block" + std::to_string(i);
    visit_params(p.freq_blocks[i], base + ".freq", fn);
    visit_params(p.time_blocks[i], base + ".time", fn);
  }
  fn("dec.w", p.dec_w);
  fn("dec.b", p.dec_b);
}

template <class T>
ModelParams<T> init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(Rng::mix(seed, 0x10c0f02e));
  const int d = cfg.embed_dim;
  const int n2 = 2 * cfg.num_sources;
  const int g = cfg.effective_groups();
  ModelParams<T> p;
  p.enc_w = init_weight<T>({d, 2, 3, 3}, 2 * 9, rng);
  p.enc_b = Tensor<T>::zeros({d}, true);
  p.enc_gain = Tensor<T>::zeros({d}, true);
  for (int i = 0; i < d; ++i) p.enc_gain[i] = T(1);
  p.enc_bias = Tensor<T>::zeros({d}, true);
  p.freq_blocks.reserve(cfg.num_blocks);
  p.time_blocks.reserve(cfg.num_blocks);
  for (int b = 0; b < cfg.num_blocks; ++b) {
    p.freq_blocks.push_back(make_block<T>(d, cfg.hidden_dim, cfg.kernel_size, cfg.num_heads, g,
                                          cfg.single_ffn, cfg.swish_only, rng, T(cfg.norm_eps)));
    p.time_blocks.push_back(make_block<T>(d, cfg.hidden_dim, cfg.kernel_size, cfg.num_heads, g,
                                          cfg.single_ffn, cfg.swish_only, rng, T(cfg.norm_eps)));
  }
  p.dec_w = init_weight<T>({d, n2, 3, 3}, d * 9, rng);
  p.dec_b = Tensor<T>::zeros({n2}, true);
  return p;
}

template <class T>
std::size_t count_params(ModelParams<T>& p) {
  std::size_t n = 0;
  visit_params(p, [&](const std::string&, Tensor<T>& t) { n += t.size(); });
  return n;
}

// Conv2D over the stacked RI input followed by global layer normalization.
template <class T>
Tensor<T> encode(const Tensor<T>& spec, ModelParams<T>& p) {
  return global_layer_norm(conv2d(spec, p.enc_w, p.enc_b), p.enc_gain, p.enc_bias, p.gln_eps);
}

template <class T>
struct ForwardResult {
  std::vector<Tensor<T>> sources;  // N waveforms, each input length
  Tensor<T> spectra;               // [2, N, T, F] estimated RI components
};

template <class T>
ForwardResult<T> forward(const Tensor<T>& wave, const ModelConfig& cfg, ModelParams<T>& p) {
  cfg.validate();
  if (wave.rank() != 1) throw ShapeError("forward: expects a rank-1 waveform");
  const int len = wave.dim(0);
  if (len < cfg.stft.win_length) {
    throw ShapeError("forward: input of " + std::to_string(len) +
                     " samples is shorter than one window of " +
                     std::to_string(cfg.stft.win_length));
  }
  Tensor<T> spec = stft(wave, cfg.stft);
  Tensor<T> z = encode(spec, p);
  for (int b = 0; b < cfg.num_blocks; ++b) {
    z = dual_path_pass(z, p.freq_blocks[b], Axis::Frequency);
    z = dual_path_pass(z, p.time_blocks[b], Axis::Time);
  }
  Tensor<T> shat = transposed_conv2d(z, p.dec_w, p.dec_b);  // [2N, T, F]
  const int n = cfg.num_sources;
  const int frames = shat.dim(1), bins = shat.dim(2);
  ForwardResult<T> res;
  res.sources.reserve(n);
  for (int s = 0; s < n; ++s) {
    // channel order is [re_1..re_N, im_1..im_N]
    Tensor<T> ri = select_channels(shat, {s, n + s});
    res.sources.push_back(istft(ri, cfg.stft, len));
  }
  res.spectra = shat.reshaped({2, n, frames, bins});
  return res;
}

}  // namespace locoformer
