// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0

#include "locoformer/manifest.hpp"

#include <fstream>
#include <sstream>

namespace locoformer {

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("manifest " + path + ": cannot open file");
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() < 3) {
      throw FormatError("manifest " + path + ":" + std::to_string(lineno) +
                        ": expected at least 'id<TAB>mix<TAB>ref1', got " +
                        std::to_string(fields.size()) + " fields");
    }
    ManifestEntry e;
    e.id = fields[0];
    e.mix_path = fields[1];
    e.ref_paths.assign(fields.begin() + 2, fields.end());
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("manifest " + path + ": cannot open for writing");
  for (const auto& e : entries) {
    out << e.id << '\t' << e.mix_path;
    for (const auto& r : e.ref_paths) out << '\t' << r;
    out << '\n';
  }
  if (!out) throw FormatError("manifest " + path + ": write failed");
}

}  // namespace locoformer
