// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0

#include "locoformer/training.hpp"

#include "locoformer/runtime.hpp"

#include <algorithm>
#include <map>

namespace locoformer {

namespace {

std::vector<Tensor<float>*> gather(ModelParams<float>& p) {
  std::vector<Tensor<float>*> out;
  visit_params(p, [&](const std::string&, Tensor<float>& t) { out.push_back(&t); });
  return out;
}

std::vector<std::string> gather_names(ModelParams<float>& p) {
  std::vector<std::string> out;
  visit_params(p, [&](const std::string& n, Tensor<float>&) { out.push_back(n); });
  return out;
}

std::vector<uint64_t> dims_of(const Tensor<float>& t) {
  std::vector<uint64_t> d;
  for (int x : t.shape()) d.push_back(static_cast<uint64_t>(x));
  return d;
}

}  // namespace

void save_checkpoint(const std::string& path, ModelParams<float>& params,
                     const AdamWState<float>* opt, long step, int epoch,
                     const std::vector<double>& val_history, const std::string& config_text) {
  std::vector<TensorRecord> records;
  visit_params(params, [&](const std::string& name, Tensor<float>& t) {
    records.push_back(TensorRecord::f32("param/" + name, t.data(), dims_of(t)));
  });
  if (opt) {
    std::size_t i = 0;
    visit_params(params, [&](const std::string& name, Tensor<float>& t) {
      records.push_back(TensorRecord::f32("adam/m/" + name, opt->m[i].data(), dims_of(t)));
      records.push_back(TensorRecord::f32("adam/v/" + name, opt->v[i].data(), dims_of(t)));
      ++i;
    });
    const double t_val = static_cast<double>(opt->t);
    records.push_back(TensorRecord::f64("adam/t", &t_val, 1));
  }
  const double step_val = static_cast<double>(step);
  const double epoch_val = static_cast<double>(epoch);
  records.push_back(TensorRecord::f64("meta/step", &step_val, 1));
  records.push_back(TensorRecord::f64("meta/epoch", &epoch_val, 1));
  records.push_back(TensorRecord::f64("meta/val_history", val_history.data(), val_history.size()));
  records.push_back(TensorRecord::bytes("meta/config", config_text));
  write_checkpoint_file(path, records);
}

const TensorRecord* LoadedCheckpoint::find(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const TensorRecord& LoadedCheckpoint::require(const std::string& name) const {
  const TensorRecord* r = find(name);
  if (!r) throw FormatError("checkpoint: missing record " + name);
  return *r;
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  return LoadedCheckpoint{read_checkpoint_file(path)};
}

void restore_params(const LoadedCheckpoint& ck, ModelParams<float>& params, AdamWState<float>* opt,
                    long* step, int* epoch, std::vector<double>* val_history) {
  std::size_t i = 0;
  visit_params(params, [&](const std::string& name, Tensor<float>& t) {
    const TensorRecord& r = ck.require("param/" + name);
    if (r.numel() != t.size()) {
      throw FormatError("checkpoint: record param/" + name + " has " + std::to_string(r.numel()) +
                        " values, expected " + std::to_string(t.size()));
    }
    const auto vals = r.as_f32();
    std::copy(vals.begin(), vals.end(), t.data());
    if (opt) {
      const auto m = ck.require("adam/m/" + name).as_f32();
      const auto v = ck.require("adam/v/" + name).as_f32();
      if (m.size() != t.size() || v.size() != t.size()) {
        throw FormatError("checkpoint: moment size mismatch for " + name);
      }
      opt->m[i] = m;
      opt->v[i] = v;
    }
    ++i;
  });
  if (opt) opt->t = static_cast<long>(ck.require("adam/t").as_f64().at(0));
  if (step) *step = static_cast<long>(ck.require("meta/step").as_f64().at(0));
  if (epoch) *epoch = static_cast<int>(ck.require("meta/epoch").as_f64().at(0));
  if (val_history) *val_history = ck.require("meta/val_history").as_f64();
}

void average_checkpoints(const std::vector<std::string>& paths, ModelParams<float>& out) {
  if (paths.empty()) throw ConfigError("average_checkpoints: no inputs");
  std::vector<LoadedCheckpoint> loaded;
  loaded.reserve(paths.size());
  for (const auto& p : paths) loaded.push_back(load_checkpoint(p));

  const std::string fingerprint = loaded[0].config_text();
  for (std::size_t i = 1; i < loaded.size(); ++i) {
    if (loaded[i].config_text() != fingerprint) {
      throw ConfigError("average_checkpoints: config fingerprint of " + paths[i] +
                        " differs from " + paths[0]);
    }
  }

  // Canonical accumulation order: sort by (epoch, step, parameter byte hash)
  // so the mean is bit-identical for any input ordering.
  std::vector<std::size_t> order(loaded.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto key = [&](std::size_t i) {
    const auto& ck = loaded[i];
    const double epoch = ck.require("meta/epoch").as_f64().at(0);
    const double step = ck.require("meta/step").as_f64().at(0);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& r : ck.records) {
      if (r.name.rfind("param/", 0) != 0) continue;
      for (uint8_t b : r.raw) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
    return std::tuple<double, double, uint64_t>(epoch, step, h);
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  std::vector<Tensor<float>*> targets = gather(out);
  std::vector<std::string> names = gather_names(out);
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    std::vector<double> acc(targets[ti]->size(), 0.0);
    for (std::size_t oi : order) {
      const auto vals = loaded[oi].require("param/" + names[ti]).as_f32();
      if (vals.size() != acc.size()) {
        throw FormatError("average_checkpoints: size mismatch for " + names[ti]);
      }
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += vals[j];
    }
    const double inv = 1.0 / static_cast<double>(loaded.size());
    for (std::size_t j = 0; j < acc.size(); ++j) (*targets[ti])[j] = static_cast<float>(acc[j] * inv);
  }
}

namespace {

struct Snapshot {
  double val = 0;
  int epoch = 0;
  std::vector<std::vector<float>> values;
};

std::vector<std::vector<float>> snapshot_values(std::vector<Tensor<float>*>& params) {
  std::vector<std::vector<float>> out;
  out.reserve(params.size());
  for (Tensor<float>* p : params) out.emplace_back(p->data(), p->data() + p->size());
  return out;
}

double item_loss(const ModelConfig& mcfg, ModelParams<float>& params, Task task,
                 const TrainExample<float>& ex, bool with_grad, double grad_seed) {
  Tensor<float> loss;
  if (task == Task::Separation) {
    ForwardResult<float> r = forward(ex.mix, mcfg, params);
    loss = pit_loss(r.sources, ex.refs).loss;
  } else {
    ForwardResult<float> r = forward(ex.mix, mcfg, params);
    loss = enh_loss(r.sources[0], ex.refs[0]);
  }
  const double v = loss.item();
  if (with_grad) backward(loss, static_cast<float>(grad_seed));
  return v;
}

}  // namespace

FitResult fit(const ModelConfig& mcfg, const TrainConfig& tcfg, Task task,
              const std::vector<MixtureItem<float>>& train_items,
              const std::vector<MixtureItem<float>>& val_items, const std::string& ckpt_dir,
              const std::string& config_text, const FitHooks& hooks) {
  tune_allocator();
  mcfg.validate();
  tcfg.validate();
  if (train_items.empty() || val_items.empty()) {
    throw ConfigError("fit: need non-empty training and validation sets");
  }
  if (task == Task::Enhancement && tcfg.dynamic_mixing) {
    throw ConfigError("fit: dynamic mixing applies to separation training only");
  }
  if (task == Task::Enhancement && mcfg.num_sources != 1) {
    throw ConfigError("fit: enhancement expects a single-source model");
  }
  for (const auto& item : train_items) {
    if (static_cast<int>(item.refs.size()) != mcfg.num_sources) {
      throw ConfigError("fit: item " + item.id + " has " + std::to_string(item.refs.size()) +
                        " refs, model expects " + std::to_string(mcfg.num_sources));
    }
  }

  ModelParams<float> params = init_params<float>(mcfg, tcfg.seed);
  std::vector<Tensor<float>*> prefs = gather(params);
  AdamWState<float> opt = make_adamw_state(prefs);

  if (!ckpt_dir.empty()) std::filesystem::create_directories(ckpt_dir);

  FitResult res;
  std::vector<Snapshot> best5;
  long step = 0;
  bool stop_requested = false;

  // Pool for dynamic mixing: every reference of the base training set.
  std::vector<Tensor<float>> dm_pool;
  if (tcfg.dynamic_mixing) {
    for (const auto& item : train_items) {
      for (const auto& r : item.refs) dm_pool.push_back(r);
    }
  }

  for (int epoch = 1; epoch <= tcfg.max_epochs && !stop_requested; ++epoch) {
    // Materialize this epoch's items (remixed under DM, verbatim otherwise).
    std::vector<const MixtureItem<float>*> epoch_items;
    std::vector<MixtureItem<float>> dm_items;
    if (tcfg.dynamic_mixing) {
      dm_items.reserve(train_items.size());
      for (std::size_t i = 0; i < train_items.size(); ++i) {
        dm_items.push_back(dynamic_mix<float>(dm_pool, mcfg.num_sources,
                                              train_items[i].sample_rate,
                                              Rng::mix(tcfg.seed, epoch * 131071 + i)));
      }
      for (const auto& it : dm_items) epoch_items.push_back(&it);
    } else {
      for (const auto& it : train_items) epoch_items.push_back(&it);
    }

    // Seeded shuffle; iteration order is a pure function of (seed, epoch).
    std::vector<std::size_t> order(epoch_items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(Rng::mix(tcfg.seed, 0x0d0e0 + epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);
    }

    double train_loss_sum = 0;
    long train_loss_count = 0;
    for (std::size_t batch_start = 0; batch_start < order.size();
         batch_start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t batch_end =
          std::min(order.size(), batch_start + static_cast<std::size_t>(tcfg.batch_size));

      std::vector<TrainExample<float>> batch;
      for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
        const MixtureItem<float>& item = *epoch_items[order[bi]];
        // Rejected (silent) crops retry with follow-up seeds.
        for (int attempt = 0; attempt < 20; ++attempt) {
          auto ex = segment_normalize(item, tcfg.segment_seconds,
                                      Rng::mix(tcfg.seed, Rng::mix(epoch, order[bi] * 31 + attempt)));
          if (ex) {
            batch.push_back(std::move(*ex));
            break;
          }
        }
      }
      if (batch.empty()) continue;

      for (Tensor<float>* p : prefs) p->zero_grad();
      double batch_loss = 0;
      for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        const double v =
            item_loss(mcfg, params, task, batch[bi], true, 1.0 / static_cast<double>(batch.size()));
        if (!std::isfinite(v)) {
          throw NumericError("fit: non-finite loss at step " + std::to_string(step + 1) +
                             ", item " + epoch_items[order[batch_start + bi]]->id);
        }
        batch_loss += v / static_cast<double>(batch.size());
      }
      clip_grad_norm(prefs, tcfg.clip_norm);
      ++step;
      const double lr = lr_schedule(step, res.val_history, tcfg);
      adamw_step(prefs, opt, lr, tcfg.weight_decay);
      train_loss_sum += batch_loss;
      ++train_loss_count;
      if (hooks.on_step) hooks.on_step(step, lr, batch_loss);
    }

    // Validation: full-length items, deterministic normalization.
    double val_loss = 0;
    {
      NoGradGuard ng;
      for (const auto& item : val_items) {
        const double full_seconds =
            static_cast<double>(item.mix.size()) / item.sample_rate;
        auto ex = segment_normalize(item, full_seconds, 0);
        if (!ex) continue;
        val_loss += item_loss(mcfg, params, task, *ex, false, 0.0);
      }
      val_loss /= static_cast<double>(val_items.size());
    }
    res.val_history.push_back(val_loss);
    res.best_val = std::min(res.best_val, val_loss);
    res.epochs = epoch;

    Snapshot snap;
    snap.val = val_loss;
    snap.epoch = epoch;
    snap.values = snapshot_values(prefs);
    best5.push_back(std::move(snap));
    std::sort(best5.begin(), best5.end(), [](const Snapshot& a, const Snapshot& b) {
      return a.val < b.val || (a.val == b.val && a.epoch < b.epoch);
    });
    if (best5.size() > 5) best5.resize(5);

    if (!ckpt_dir.empty()) {
      save_checkpoint(ckpt_dir + "/epoch_" + std::to_string(epoch) + ".ckpt", params, &opt, step,
                      epoch, res.val_history, config_text);
    }

    const double train_loss =
        train_loss_count > 0 ? train_loss_sum / static_cast<double>(train_loss_count) : 0.0;
    if (hooks.on_epoch) hooks.on_epoch(epoch, train_loss, val_loss);
    if (hooks.keep_going && !hooks.keep_going(epoch, params)) stop_requested = true;
    if (should_early_stop(res.val_history, tcfg)) {
      res.early_stopped = true;
      break;
    }
  }
  res.steps = step;

  // Average the retained best checkpoints (canonical order: ascending val,
  // then epoch, fixed above by the sort).
  res.averaged = init_params<float>(mcfg, tcfg.seed);
  std::vector<Tensor<float>*> arefs = gather(res.averaged);
  for (std::size_t ti = 0; ti < arefs.size(); ++ti) {
    std::vector<double> acc(arefs[ti]->size(), 0.0);
    for (const Snapshot& s : best5) {
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += s.values[ti][j];
    }
    const double inv = 1.0 / static_cast<double>(best5.size());
    for (std::size_t j = 0; j < acc.size(); ++j) (*arefs[ti])[j] = static_cast<float>(acc[j] * inv);
  }
  return res;
}

}  // namespace locoformer
