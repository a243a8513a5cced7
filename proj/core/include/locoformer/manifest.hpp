// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset manifest: one item per line, tab-separated,
//   id <tab> mix_path <tab> ref1_path [<tab> ref2_path ...]

#pragma once

#include <string>
#include <vector>

#include "locoformer/common.hpp"

namespace locoformer {

struct ManifestEntry {
  std::string id;
  std::string mix_path;
  std::vector<std::string> ref_paths;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

}  // namespace locoformer
