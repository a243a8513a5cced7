// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Optimization recipe: linear warmup to the peak rate, plateau-halving on
// stalled validation, decoupled-weight-decay Adam, global-norm gradient
// clipping, early stopping, top-5 checkpoint retention and averaging.
// Schedule state is a pure function of (step, validation history).

#pragma once

#include <filesystem>
#include <functional>
#include <limits>

#include "locoformer/checkpoint.hpp"
#include "locoformer/data.hpp"
#include "locoformer/losses.hpp"
#include "locoformer/model.hpp"

namespace locoformer {

struct TrainConfig {
  double peak_lr = 1e-3;
  int warmup_steps = 4000;
  double weight_decay = 1e-2;
  int plateau_patience = 3;     // epochs without improvement before halving
  double plateau_factor = 0.5;
  int early_stop_epochs = 10;
  int max_epochs = 150;         // 200 when dynamic mixing is on
  double clip_norm = 5.0;
  int batch_size = 4;
  double segment_seconds = 4.0;
  bool dynamic_mixing = false;
  int dm_gate_epoch = 75;  // with DM, no decay/stop before this epoch (65 for Large)
  uint64_t seed = 0;
  // strictly-lower-by-delta counts as improvement
  double improve_delta = 1e-6;

  void validate() const {
    if (peak_lr <= 0) throw ConfigError("train: peak_lr must be positive");
    if (warmup_steps < 1) throw ConfigError("train: warmup_steps must be >= 1");
    if (weight_decay < 0) throw ConfigError("train: weight_decay must be >= 0");
    if (plateau_patience < 1) throw ConfigError("train: plateau_patience must be >= 1");
    if (plateau_factor <= 0 || plateau_factor >= 1) {
      throw ConfigError("train: plateau_factor must be in (0, 1)");
    }
    if (early_stop_epochs < 1) throw ConfigError("train: early_stop_epochs must be >= 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (clip_norm <= 0) throw ConfigError("train: clip_norm must be positive");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (segment_seconds <= 0) throw ConfigError("train: segment_seconds must be positive");
  }
};

// Replay the plateau rule over the epoch-loss history: a run of `patience`
// consecutive non-improving epochs triggers one decay and resets the run.
// With dynamic mixing, epochs up to dm_gate_epoch only track the best loss.
inline int count_plateau_decays(const std::vector<double>& val_history, const TrainConfig& cfg) {
  double best = std::numeric_limits<double>::infinity();
  int bad = 0, decays = 0;
  for (std::size_t e = 0; e < val_history.size(); ++e) {
    const double v = val_history[e];
    const bool gated = cfg.dynamic_mixing && static_cast<int>(e) + 1 <= cfg.dm_gate_epoch;
    if (v < best - cfg.improve_delta) {
      best = v;
      bad = 0;
    } else if (!gated) {
      ++bad;
      if (bad >= cfg.plateau_patience) {
        ++decays;
        bad = 0;
      }
    }
  }
  return decays;
}

inline bool should_early_stop(const std::vector<double>& val_history, const TrainConfig& cfg) {
  double best = std::numeric_limits<double>::infinity();
  int bad = 0;
  for (std::size_t e = 0; e < val_history.size(); ++e) {
    const double v = val_history[e];
    const bool gated = cfg.dynamic_mixing && static_cast<int>(e) + 1 <= cfg.dm_gate_epoch;
    if (v < best - cfg.improve_delta) {
      best = v;
      bad = 0;
    } else if (!gated) {
      ++bad;
      if (bad >= cfg.early_stop_epochs) return true;
    }
  }
  return false;
}

// Linear ramp from 0 to peak over warmup_steps, then the warmup output held
// as the base rate, multiplied by plateau_factor per triggered decay.
inline double lr_schedule(long step, const std::vector<double>& val_history,
                          const TrainConfig& cfg) {
  const double ramp = step <= cfg.warmup_steps
                          ? static_cast<double>(step) / cfg.warmup_steps
                          : 1.0;
  return cfg.peak_lr * ramp * std::pow(cfg.plateau_factor, count_plateau_decays(val_history, cfg));
}

template <class T>
struct AdamWState {
  std::vector<std::vector<T>> m, v;  // aligned with the parameter visit order
  long t = 0;
};

template <class T>
AdamWState<T> make_adamw_state(std::vector<Tensor<T>*>& params) {
  AdamWState<T> st;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (Tensor<T>* p : params) {
    st.m.emplace_back(p->size(), T(0));
    st.v.emplace_back(p->size(), T(0));
  }
  return st;
}

// Decoupled weight decay applied alongside the bias-corrected adaptive step.
template <class T>
void adamw_step(std::vector<Tensor<T>*>& params, AdamWState<T>& st, double lr,
                double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8) {
  if (st.m.size() != params.size()) throw UsageError("adamw: state/parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T* g = params[i]->grad();
    if (!g) throw UsageError("adamw: parameter without gradient buffer");
    for (std::size_t j = 0; j < params[i]->size(); ++j) {
      if (!std::isfinite(g[j])) {
        throw NumericError("adamw: non-finite gradient in parameter " + std::to_string(i) +
                           " at element " + std::to_string(j));
      }
    }
  }
  st.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i];
    const T* g = p.grad();
    T* m = st.m[i].data();
    T* v = st.v[i].data();
    T* w = p.data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      w[j] -= static_cast<T>(lr * weight_decay) * w[j];
      m[j] = static_cast<T>(beta1) * m[j] + static_cast<T>(1.0 - beta1) * g[j];
      v[j] = static_cast<T>(beta2) * v[j] + static_cast<T>(1.0 - beta2) * g[j] * g[j];
      const double mhat = static_cast<double>(m[j]) / bc1;
      const double vhat = static_cast<double>(v[j]) / bc2;
      w[j] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm; returns the pre-clip norm.
template <class T>
double clip_grad_norm(std::vector<Tensor<T>*>& params, double max_norm) {
  double sq = 0;
  for (Tensor<T>* p : params) {
    const T* g = p->grad();
    for (std::size_t j = 0; j < p->size(); ++j) sq += static_cast<double>(g[j]) * g[j];
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (Tensor<T>* p : params) {
      T* g = p->grad();
      for (std::size_t j = 0; j < p->size(); ++j) g[j] *= scale;
    }
  }
  return norm;
}

enum class Task { Separation, Enhancement };

// Checkpoint record naming:
//   param/<name>   model parameters (f32)
//   adam/m/<name>, adam/v/<name>   optimizer moments (f32)
//   meta/step, meta/epoch, meta/val_history (f64), meta/config (bytes)
void save_checkpoint(const std::string& path, ModelParams<float>& params,
                     const AdamWState<float>* opt, long step, int epoch,
                     const std::vector<double>& val_history, const std::string& config_text);

struct LoadedCheckpoint {
  std::vector<TensorRecord> records;
  const TensorRecord* find(const std::string& name) const;
  const TensorRecord& require(const std::string& name) const;
  std::string config_text() const { return require("meta/config").as_string(); }
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Copies param/<name> records into an allocated parameter set; shapes must
// match. When opt is non-null the Adam moments and step counter are restored
// too.
void restore_params(const LoadedCheckpoint& ck, ModelParams<float>& params,
                    AdamWState<float>* opt = nullptr, long* step = nullptr, int* epoch = nullptr,
                    std::vector<double>* val_history = nullptr);

// Per-tensor arithmetic mean of the stored parameters. Inputs must share one
// config fingerprint; accumulation order is canonicalized so the result is
// bit-identical under any input ordering.
void average_checkpoints(const std::vector<std::string>& paths, ModelParams<float>& out);

struct FitHooks {
  std::function<void(long step, double lr, double loss)> on_step;
  std::function<void(int epoch, double train_loss, double val_loss)> on_epoch;
  // Called after each epoch's bookkeeping; return false to stop training.
  std::function<bool(int epoch, ModelParams<float>&)> keep_going;
};

struct FitResult {
  ModelParams<float> averaged;  // mean of the best (up to 5) checkpoints
  std::vector<double> val_history;
  long steps = 0;
  int epochs = 0;
  bool early_stopped = false;
  double best_val = std::numeric_limits<double>::infinity();
};

FitResult fit(const ModelConfig& mcfg, const TrainConfig& tcfg, Task task,
              const std::vector<MixtureItem<float>>& train_items,
              const std::vector<MixtureItem<float>>& val_items, const std::string& ckpt_dir = "",
              const std::string& config_text = "", const FitHooks& hooks = {});

}  // namespace locoformer
