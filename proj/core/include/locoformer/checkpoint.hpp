// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Portable bit-exact tensor container: magic "TFLC", version u32, then a
// sequence of records (name_len u32, name bytes, dtype u8, rank u32,
// dims u64[], raw little-endian payload) until end of file.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "locoformer/common.hpp"

namespace locoformer {

enum class RecordType : uint8_t { F32 = 0, F64 = 1, Bytes = 2 };

struct TensorRecord {
  std::string name;
  RecordType dtype = RecordType::F32;
  std::vector<uint64_t> dims;
  std::vector<uint8_t> raw;

  std::size_t numel() const {
    std::size_t n = 1;
    for (uint64_t d : dims) n *= static_cast<std::size_t>(d);
    return dims.empty() ? 0 : n;
  }

  static TensorRecord f32(std::string name, const float* data, std::vector<uint64_t> dims);
  static TensorRecord f64(std::string name, const double* data, std::size_t n);
  static TensorRecord bytes(std::string name, const std::string& text);

  std::vector<float> as_f32() const;
  std::vector<double> as_f64() const;
  std::string as_string() const;
};

void write_checkpoint_file(const std::string& path, const std::vector<TensorRecord>& records);
std::vector<TensorRecord> read_checkpoint_file(const std::string& path);

}  // namespace locoformer
