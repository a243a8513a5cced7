// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0

#include "locoformer/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace locoformer {

namespace {

constexpr char kMagic[4] = {'T', 'F', 'L', 'C'};
constexpr uint32_t kVersion = 1;

template <class T>
void append_raw(std::vector<uint8_t>& out, T v) {
  uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <class T>
T read_raw(const std::vector<uint8_t>& buf, std::size_t& pos, const std::string& path) {
  if (pos + sizeof(T) > buf.size()) {
    throw FormatError("checkpoint " + path + ": truncated at byte " + std::to_string(pos));
  }
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::size_t dtype_size(RecordType t) {
  switch (t) {
    case RecordType::F32:
      return 4;
    case RecordType::F64:
      return 8;
    case RecordType::Bytes:
      return 1;
  }
  return 0;
}

}  // namespace

TensorRecord TensorRecord::f32(std::string name, const float* data, std::vector<uint64_t> dims) {
  TensorRecord r;
  r.name = std::move(name);
  r.dtype = RecordType::F32;
  r.dims = std::move(dims);
  r.raw.resize(r.numel() * 4);
  std::memcpy(r.raw.data(), data, r.raw.size());
  return r;
}

TensorRecord TensorRecord::f64(std::string name, const double* data, std::size_t n) {
  TensorRecord r;
  r.name = std::move(name);
  r.dtype = RecordType::F64;
  r.dims = {static_cast<uint64_t>(n)};
  r.raw.resize(n * 8);
  if (n > 0) std::memcpy(r.raw.data(), data, r.raw.size());
  return r;
}

TensorRecord TensorRecord::bytes(std::string name, const std::string& text) {
  TensorRecord r;
  r.name = std::move(name);
  r.dtype = RecordType::Bytes;
  r.dims = {static_cast<uint64_t>(text.size())};
  r.raw.assign(text.begin(), text.end());
  return r;
}

std::vector<float> TensorRecord::as_f32() const {
  if (dtype != RecordType::F32) throw FormatError("record " + name + ": not f32");
  std::vector<float> out(numel());
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

std::vector<double> TensorRecord::as_f64() const {
  if (dtype != RecordType::F64) throw FormatError("record " + name + ": not f64");
  std::vector<double> out(numel());
  if (!out.empty()) std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

std::string TensorRecord::as_string() const {
  if (dtype != RecordType::Bytes) throw FormatError("record " + name + ": not bytes");
  return std::string(raw.begin(), raw.end());
}

void write_checkpoint_file(const std::string& path, const std::vector<TensorRecord>& records) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  append_raw(out, kVersion);
  for (const auto& r : records) {
    append_raw(out, static_cast<uint32_t>(r.name.size()));
    out.insert(out.end(), r.name.begin(), r.name.end());
    append_raw(out, static_cast<uint8_t>(r.dtype));
    append_raw(out, static_cast<uint32_t>(r.dims.size()));
    for (uint64_t d : r.dims) append_raw(out, d);
    if (r.raw.size() != r.numel() * dtype_size(r.dtype)) {
      throw FormatError("checkpoint " + path + ": record " + r.name + " payload size mismatch");
    }
    out.insert(out.end(), r.raw.begin(), r.raw.end());
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("checkpoint " + path + ": cannot open for writing");
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw FormatError("checkpoint " + path + ": write failed");
}

std::vector<TensorRecord> read_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint " + path + ": cannot open file");
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint " + path + ": missing TFLC magic");
  }
  std::size_t pos = 4;
  const uint32_t version = read_raw<uint32_t>(buf, pos, path);
  if (version != kVersion) {
    throw FormatError("checkpoint " + path + ": unsupported version " + std::to_string(version));
  }
  std::vector<TensorRecord> records;
  while (pos < buf.size()) {
    TensorRecord r;
    const uint32_t name_len = read_raw<uint32_t>(buf, pos, path);
    if (pos + name_len > buf.size()) {
      throw FormatError("checkpoint " + path + ": truncated record name");
    }
    r.name.assign(buf.begin() + static_cast<long>(pos), buf.begin() + static_cast<long>(pos + name_len));
    pos += name_len;
    const uint8_t tag = read_raw<uint8_t>(buf, pos, path);
    if (tag > 2) {
      throw FormatError("checkpoint " + path + ": record " + r.name + " has unknown dtype tag " +
                        std::to_string(tag));
    }
    r.dtype = static_cast<RecordType>(tag);
    const uint32_t rank = read_raw<uint32_t>(buf, pos, path);
    r.dims.resize(rank);
    for (uint32_t i = 0; i < rank; ++i) r.dims[i] = read_raw<uint64_t>(buf, pos, path);
    const std::size_t bytes = r.numel() * dtype_size(r.dtype);
    if (pos + bytes > buf.size()) {
      throw FormatError("checkpoint " + path + ": record " + r.name + " payload truncated");
    }
    r.raw.assign(buf.begin() + static_cast<long>(pos), buf.begin() + static_cast<long>(pos + bytes));
    pos += bytes;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace locoformer
