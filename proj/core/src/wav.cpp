// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0

#include "locoformer/wav.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace locoformer {

namespace {

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

WavData load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("wav " + path + ": cannot open file");
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 12) throw FormatError("wav " + path + ": file shorter than the RIFF header");
  if (std::memcmp(buf.data(), "RIFF", 4) != 0) {
    throw FormatError("wav " + path + ": missing RIFF magic");
  }
  if (std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("wav " + path + ": missing WAVE magic");
  }

  bool have_fmt = false;
  uint16_t format_tag = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const uint8_t* data = nullptr;
  uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const uint8_t* id = buf.data() + pos;
    const uint32_t size = read_u32(buf.data() + pos + 4);
    pos += 8;
    if (pos + size > buf.size()) {
      throw FormatError("wav " + path + ": chunk '" + std::string(id, id + 4) +
                        "' extends past end of file");
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("wav " + path + ": fmt chunk shorter than 16 bytes");
      format_tag = read_u16(buf.data() + pos);
      channels = read_u16(buf.data() + pos + 2);
      sample_rate = read_u32(buf.data() + pos + 4);
      bits = read_u16(buf.data() + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = buf.data() + pos;
      data_size = size;
    }
    pos += size + (size & 1);  // chunks are word aligned
  }

  if (!have_fmt) throw FormatError("wav " + path + ": missing fmt chunk");
  if (!data) throw FormatError("wav " + path + ": missing data chunk");
  if (channels != 1) {
    throw FormatError("wav " + path + ": channels=" + std::to_string(channels) +
                      ", only mono is supported");
  }
  if (sample_rate == 0) throw FormatError("wav " + path + ": sample_rate=0");

  Tensor<float> samples;
  if (format_tag == 1) {  // PCM
    if (bits != 16) {
      throw FormatError("wav " + path + ": bits=" + std::to_string(bits) +
                        " with PCM, only 16 is supported");
    }
    const std::size_t n = data_size / 2;
    if (n == 0) throw FormatError("wav " + path + ": empty data chunk");
    samples = Tensor<float>::zeros({static_cast<int>(n)});
    for (std::size_t i = 0; i < n; ++i) {
      const int16_t v = static_cast<int16_t>(read_u16(data + 2 * i));
      samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else if (format_tag == 3) {  // IEEE float
    if (bits != 32) {
      throw FormatError("wav " + path + ": bits=" + std::to_string(bits) +
                        " with IEEE float, only 32 is supported");
    }
    const std::size_t n = data_size / 4;
    if (n == 0) throw FormatError("wav " + path + ": empty data chunk");
    samples = Tensor<float>::zeros({static_cast<int>(n)});
    for (std::size_t i = 0; i < n; ++i) {
      uint32_t raw = read_u32(data + 4 * i);
      float v;
      std::memcpy(&v, &raw, 4);
      samples[i] = v;
    }
  } else {
    throw FormatError("wav " + path + ": unsupported format tag " + std::to_string(format_tag) +
                      " (PCM 16-bit and IEEE float 32-bit only)");
  }
  return {std::move(samples), static_cast<int>(sample_rate)};
}

namespace {

void append_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void append_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

void append_tag(std::vector<uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

void save_wav(const std::string& path, const Tensor<float>& samples, int sample_rate,
              WavFormat format) {
  if (samples.rank() != 1) throw FormatError("wav " + path + ": expects a rank-1 waveform");
  if (sample_rate <= 0) throw FormatError("wav " + path + ": sample_rate must be positive");
  const std::size_t n = samples.size();
  const bool pcm = format == WavFormat::Pcm16;
  const uint32_t bytes_per = pcm ? 2 : 4;
  const uint32_t data_size = static_cast<uint32_t>(n * bytes_per);

  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  append_tag(out, "RIFF");
  append_u32(out, 36 + data_size);
  append_tag(out, "WAVE");
  append_tag(out, "fmt ");
  append_u32(out, 16);
  append_u16(out, pcm ? 1 : 3);
  append_u16(out, 1);  // mono
  append_u32(out, static_cast<uint32_t>(sample_rate));
  append_u32(out, static_cast<uint32_t>(sample_rate) * bytes_per);
  append_u16(out, static_cast<uint16_t>(bytes_per));
  append_u16(out, pcm ? 16 : 32);
  append_tag(out, "data");
  append_u32(out, data_size);
  if (pcm) {
    for (std::size_t i = 0; i < n; ++i) {
      long v = std::lrint(static_cast<double>(samples[i]) * 32768.0);
      v = std::min(32767L, std::max(-32768L, v));
      append_u16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      uint32_t raw;
      const float v = samples[i];
      std::memcpy(&raw, &v, 4);
      append_u32(out, raw);
    }
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("wav " + path + ": cannot open for writing");
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw FormatError("wav " + path + ": write failed");
}

}  // namespace locoformer
