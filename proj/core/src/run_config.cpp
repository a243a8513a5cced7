// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0

#include "locoformer/run_config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace locoformer {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const ConfigKv& kv, const std::string& what) {
  throw ConfigError("config (" + kv.origin + "): key '" + kv.key + "': " + what);
}

int parse_int(const ConfigKv& kv) {
  try {
    size_t used = 0;
    const int v = std::stoi(kv.value, &used);
    if (used != kv.value.size()) bad(kv, "trailing characters in integer '" + kv.value + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad(kv, "cannot parse integer from '" + kv.value + "'");
  }
}

double parse_double(const ConfigKv& kv) {
  try {
    size_t used = 0;
    const double v = std::stod(kv.value, &used);
    if (used != kv.value.size()) bad(kv, "trailing characters in number '" + kv.value + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad(kv, "cannot parse number from '" + kv.value + "'");
  }
}

uint64_t parse_u64(const ConfigKv& kv) {
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(kv.value, &used);
    if (used != kv.value.size()) bad(kv, "trailing characters in integer '" + kv.value + "'");
    return static_cast<uint64_t>(v);
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad(kv, "cannot parse unsigned integer from '" + kv.value + "'");
  }
}

bool parse_bool(const ConfigKv& kv) {
  std::string v = kv.value;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(kv, "cannot parse boolean from '" + kv.value + "'");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<ConfigKv> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file " + path);
  std::vector<ConfigKv> kvs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config " + path + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    }
    ConfigKv kv;
    kv.key = trim(line.substr(0, eq));
    kv.value = trim(line.substr(eq + 1));
    kv.origin = path + ":" + std::to_string(lineno);
    if (kv.key.empty()) {
      throw ConfigError("config " + path + ":" + std::to_string(lineno) + ": empty key");
    }
    kvs.push_back(std::move(kv));
  }
  return kvs;
}

RunConfig resolve_run_config(const std::vector<ConfigKv>& file_kvs,
                             const std::vector<ConfigKv>& override_kvs) {
  // Later occurrences win; overrides come after file keys.
  std::vector<ConfigKv> all = file_kvs;
  all.insert(all.end(), override_kvs.begin(), override_kvs.end());
  std::map<std::string, ConfigKv> merged;
  for (const auto& kv : all) merged[kv.key] = kv;

  RunConfig cfg;

  // Pass 1: size preset and task, which set dependent defaults.
  if (auto it = merged.find("model.size"); it != merged.end()) {
    const std::string& v = it->second.value;
    if (v.size() != 1 || (v[0] != 'S' && v[0] != 'M' && v[0] != 'L')) {
      bad(it->second, "expected S, M or L, got '" + v + "'");
    }
    cfg.size = v[0];
  }
  {
    const int srcs = cfg.model.num_sources;
    cfg.model = build_config(cfg.size, srcs);
  }
  if (auto it = merged.find("task"); it != merged.end()) {
    const std::string& v = it->second.value;
    if (v == "separation") {
      cfg.task = Task::Separation;
    } else if (v == "enhancement") {
      cfg.task = Task::Enhancement;
      cfg.model.num_sources = 1;
      cfg.with_noise = true;
    } else {
      bad(it->second, "expected separation or enhancement, got '" + v + "'");
    }
  }

  bool stft_win_set = false, stft_hop_set = false, max_epochs_set = false;
  bool dm_gate_set = false;

  for (const auto& [key, kv] : merged) {
    if (key == "model.size" || key == "task") {
      continue;
    } else if (key == "model.embed_dim") {
      cfg.model.embed_dim = parse_int(kv);
    } else if (key == "model.num_blocks") {
      cfg.model.num_blocks = parse_int(kv);
    } else if (key == "model.hidden_dim") {
      cfg.model.hidden_dim = parse_int(kv);
    } else if (key == "model.kernel_size") {
      cfg.model.kernel_size = parse_int(kv);
    } else if (key == "model.stride") {
      cfg.model.stride = parse_int(kv);
    } else if (key == "model.num_heads") {
      cfg.model.num_heads = parse_int(kv);
    } else if (key == "model.norm_groups") {
      cfg.model.norm_groups = parse_int(kv);
    } else if (key == "model.num_sources") {
      cfg.model.num_sources = parse_int(kv);
    } else if (key == "model.norm_eps") {
      cfg.model.norm_eps = parse_double(kv);
    } else if (key == "model.single_ffn") {
      cfg.model.single_ffn = parse_bool(kv);
    } else if (key == "model.swish_only") {
      cfg.model.swish_only = parse_bool(kv);
    } else if (key == "model.plain_rmsnorm") {
      cfg.model.plain_rmsnorm = parse_bool(kv);
    } else if (key == "stft.sample_rate") {
      cfg.model.stft.sample_rate = parse_int(kv);
    } else if (key == "stft.win_length") {
      cfg.model.stft.win_length = parse_int(kv);
      stft_win_set = true;
    } else if (key == "stft.hop_length") {
      cfg.model.stft.hop_length = parse_int(kv);
      stft_hop_set = true;
    } else if (key == "train.peak_lr") {
      cfg.train.peak_lr = parse_double(kv);
    } else if (key == "train.warmup_steps") {
      cfg.train.warmup_steps = parse_int(kv);
    } else if (key == "train.weight_decay") {
      cfg.train.weight_decay = parse_double(kv);
    } else if (key == "train.plateau_patience") {
      cfg.train.plateau_patience = parse_int(kv);
    } else if (key == "train.plateau_factor") {
      cfg.train.plateau_factor = parse_double(kv);
    } else if (key == "train.early_stop_epochs") {
      cfg.train.early_stop_epochs = parse_int(kv);
    } else if (key == "train.max_epochs") {
      cfg.train.max_epochs = parse_int(kv);
      max_epochs_set = true;
    } else if (key == "train.clip_norm") {
      cfg.train.clip_norm = parse_double(kv);
    } else if (key == "train.batch_size") {
      cfg.train.batch_size = parse_int(kv);
    } else if (key == "train.segment_seconds") {
      cfg.train.segment_seconds = parse_double(kv);
    } else if (key == "train.dynamic_mixing") {
      cfg.train.dynamic_mixing = parse_bool(kv);
    } else if (key == "train.dm_gate_epoch") {
      cfg.train.dm_gate_epoch = parse_int(kv);
      dm_gate_set = true;
    } else if (key == "train.seed") {
      cfg.train.seed = parse_u64(kv);
    } else if (key == "data.source") {
      if (kv.value == "synthetic") {
        cfg.source = DataSource::Synthetic;
      } else if (kv.value == "manifest") {
        cfg.source = DataSource::Manifest;
      } else {
        bad(kv, "expected synthetic or manifest, got '" + kv.value + "'");
      }
    } else if (key == "data.train_manifest") {
      cfg.train_manifest = kv.value;
    } else if (key == "data.val_manifest") {
      cfg.val_manifest = kv.value;
    } else if (key == "data.train_items") {
      cfg.train_items = parse_int(kv);
    } else if (key == "data.val_items") {
      cfg.val_items = parse_int(kv);
    } else if (key == "data.item_seconds") {
      cfg.item_seconds = parse_double(kv);
    } else if (key == "data.with_noise") {
      cfg.with_noise = parse_bool(kv);
    } else if (key == "data.noise_snr_min_db") {
      cfg.noise_snr_min_db = parse_double(kv);
    } else if (key == "data.noise_snr_max_db") {
      cfg.noise_snr_max_db = parse_double(kv);
    } else {
      bad(kv, "unknown key");
    }
  }

  // Dependent defaults.
  if (!stft_win_set) cfg.model.stft.win_length = cfg.model.stft.sample_rate * 16 / 1000;
  if (!stft_hop_set) cfg.model.stft.hop_length = cfg.model.stft.win_length / 2;
  if (!max_epochs_set && cfg.train.dynamic_mixing) cfg.train.max_epochs = 200;
  (void)dm_gate_set;

  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (task == Task::Enhancement && model.num_sources != 1) {
    throw ConfigError("config: enhancement requires model.num_sources = 1");
  }
  if (task == Task::Enhancement && source == DataSource::Synthetic && !with_noise) {
    throw ConfigError("config: synthetic enhancement data requires data.with_noise = true");
  }
  if (source == DataSource::Manifest && (train_manifest.empty() || val_manifest.empty())) {
    throw ConfigError("config: manifest data source requires data.train_manifest and data.val_manifest");
  }
  if (train_items < 1 || val_items < 1) {
    throw ConfigError("config: data.train_items and data.val_items must be >= 1");
  }
  if (item_seconds < 0.25) throw ConfigError("config: data.item_seconds must be >= 0.25");
  if (noise_snr_min_db > noise_snr_max_db) {
    throw ConfigError("config: data.noise_snr_min_db must be <= data.noise_snr_max_db");
  }
}

std::string canonical_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  os << "data.item_seconds = " << fmt_double(cfg.item_seconds) << "\n";
  os << "data.noise_snr_max_db = " << fmt_double(cfg.noise_snr_max_db) << "\n";
  os << "data.noise_snr_min_db = " << fmt_double(cfg.noise_snr_min_db) << "\n";
  os << "data.source = " << (cfg.source == DataSource::Synthetic ? "synthetic" : "manifest") << "\n";
  if (!cfg.train_manifest.empty()) os << "data.train_manifest = " << cfg.train_manifest << "\n";
  os << "data.train_items = " << cfg.train_items << "\n";
  if (!cfg.val_manifest.empty()) os << "data.val_manifest = " << cfg.val_manifest << "\n";
  os << "data.val_items = " << cfg.val_items << "\n";
  os << "data.with_noise = " << (cfg.with_noise ? "true" : "false") << "\n";
  os << "model.embed_dim = " << cfg.model.embed_dim << "\n";
  os << "model.hidden_dim = " << cfg.model.hidden_dim << "\n";
  os << "model.kernel_size = " << cfg.model.kernel_size << "\n";
  os << "model.norm_eps = " << fmt_double(cfg.model.norm_eps) << "\n";
  os << "model.norm_groups = " << cfg.model.norm_groups << "\n";
  os << "model.num_blocks = " << cfg.model.num_blocks << "\n";
  os << "model.num_heads = " << cfg.model.num_heads << "\n";
  os << "model.num_sources = " << cfg.model.num_sources << "\n";
  os << "model.plain_rmsnorm = " << (cfg.model.plain_rmsnorm ? "true" : "false") << "\n";
  os << "model.single_ffn = " << (cfg.model.single_ffn ? "true" : "false") << "\n";
  os << "model.stride = " << cfg.model.stride << "\n";
  os << "model.swish_only = " << (cfg.model.swish_only ? "true" : "false") << "\n";
  os << "stft.hop_length = " << cfg.model.stft.hop_length << "\n";
  os << "stft.sample_rate = " << cfg.model.stft.sample_rate << "\n";
  os << "stft.win_length = " << cfg.model.stft.win_length << "\n";
  os << "task = " << (cfg.task == Task::Separation ? "separation" : "enhancement") << "\n";
  os << "train.batch_size = " << cfg.train.batch_size << "\n";
  os << "train.clip_norm = " << fmt_double(cfg.train.clip_norm) << "\n";
  os << "train.dm_gate_epoch = " << cfg.train.dm_gate_epoch << "\n";
  os << "train.dynamic_mixing = " << (cfg.train.dynamic_mixing ? "true" : "false") << "\n";
  os << "train.early_stop_epochs = " << cfg.train.early_stop_epochs << "\n";
  os << "train.max_epochs = " << cfg.train.max_epochs << "\n";
  os << "train.peak_lr = " << fmt_double(cfg.train.peak_lr) << "\n";
  os << "train.plateau_factor = " << fmt_double(cfg.train.plateau_factor) << "\n";
  os << "train.plateau_patience = " << cfg.train.plateau_patience << "\n";
  os << "train.seed = " << cfg.train.seed << "\n";
  os << "train.segment_seconds = " << fmt_double(cfg.train.segment_seconds) << "\n";
  os << "train.warmup_steps = " << cfg.train.warmup_steps << "\n";
  os << "train.weight_decay = " << fmt_double(cfg.train.weight_decay) << "\n";
  return os.str();
}

RunConfig parse_config_text(const std::string& text) {
  std::vector<ConfigKv> kvs;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config text:" + std::to_string(lineno) + ": expected 'key = value'");
    }
    kvs.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)),
                   "text:" + std::to_string(lineno)});
  }
  return resolve_run_config(kvs, {});
}

uint64_t config_fingerprint(const RunConfig& cfg) {
  return fnv1a64(canonical_config_text(cfg));
}

}  // namespace locoformer
