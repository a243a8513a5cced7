// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Merged run configuration: model + training recipe + data supply + task.
// Parsed from line-oriented `key = value` text with `#` comments; unknown
// keys are errors. Command-line overrides use the same key names and always
// win over file values; `model.size` presets apply before any explicit
// model.* key regardless of order.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "locoformer/model.hpp"
#include "locoformer/training.hpp"

namespace locoformer {

enum class DataSource { Synthetic, Manifest };

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  Task task = Task::Separation;
  char size = 'M';

  DataSource source = DataSource::Synthetic;
  std::string train_manifest;
  std::string val_manifest;
  int train_items = 100;
  int val_items = 20;
  double item_seconds = 6.0;
  bool with_noise = false;  // forced on for synthetic enhancement data
  double noise_snr_min_db = 0.0;
  double noise_snr_max_db = 10.0;

  void validate() const;
};

// Key-value pair with provenance for error messages.
struct ConfigKv {
  std::string key;
  std::string value;
  std::string origin;  // "file:line" or "--flag"
};

std::vector<ConfigKv> read_config_file(const std::string& path);

RunConfig resolve_run_config(const std::vector<ConfigKv>& file_kvs,
                             const std::vector<ConfigKv>& override_kvs);

// Fully resolved, sorted `key = value` dump; reparsing it reproduces the
// config bit-for-bit. Stored inside checkpoints as the fingerprint text.
std::string canonical_config_text(const RunConfig& cfg);

RunConfig parse_config_text(const std::string& text);

uint64_t config_fingerprint(const RunConfig& cfg);

}  // namespace locoformer
