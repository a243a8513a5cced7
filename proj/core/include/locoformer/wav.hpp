// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal RIFF/WAVE I/O: mono, PCM 16-bit or IEEE float 32-bit. 16-bit
// samples map to [-1, 1) through division by 32768; writing clamps.

#pragma once

#include <string>

#include "locoformer/tensor.hpp"

namespace locoformer {

struct WavData {
  Tensor<float> samples;
  int sample_rate = 0;
};

enum class WavFormat { Pcm16, Float32 };

WavData load_wav(const std::string& path);
void save_wav(const std::string& path, const Tensor<float>& samples, int sample_rate,
              WavFormat format = WavFormat::Pcm16);

}  // namespace locoformer
