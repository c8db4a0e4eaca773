// Copyright (c) 2026 The dpnet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpnet/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "dpnet/errors.hpp"

namespace dpnet {

static_assert(std::endian::native == std::endian::little,
              "tensor serialization assumes a little-endian host");

namespace io {

namespace {

void read_exact(std::istream& is, void* dst, size_t n) {
  is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n) throw FormatError("unexpected end of file");
}

template <typename T>
void write_body(std::ostream& os, const BasicTensor<T>& t, DType dtype) {
  if (t.empty()) throw FormatError("cannot serialize an empty tensor");
  write_u8(os, static_cast<uint8_t>(dtype));
  write_u8(os, static_cast<uint8_t>(t.rank()));
  for (int64_t d : t.shape()) write_u32(os, static_cast<uint32_t>(d));
  os.write(reinterpret_cast<const char*>(t.data().data()),
           static_cast<std::streamsize>(t.size() * sizeof(T)));
}

template <typename T>
BasicTensor<T> read_payload(std::istream& is, Shape shape) {
  std::vector<T> values(static_cast<size_t>(numel(shape)));
  read_exact(is, values.data(), values.size() * sizeof(T));
  return BasicTensor<T>(std::move(shape), std::move(values));
}

}  // namespace

void write_u8(std::ostream& os, uint8_t v) { os.put(static_cast<char>(v)); }

void write_u16(std::ostream& os, uint16_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint8_t read_u8(std::istream& is) {
  uint8_t v = 0;
  read_exact(is, &v, 1);
  return v;
}

uint16_t read_u16(std::istream& is) {
  uint16_t v = 0;
  read_exact(is, &v, sizeof v);
  return v;
}

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  read_exact(is, &v, sizeof v);
  return v;
}

void write_tensor_body(std::ostream& os, const Tensor& t) { write_body(os, t, DType::kFloat32); }
void write_tensor_body(std::ostream& os, const TensorD& t) { write_body(os, t, DType::kFloat64); }

AnyTensor read_tensor_body(std::istream& is) {
  const uint8_t dtype = read_u8(is);
  const uint8_t ndim = read_u8(is);
  if (ndim < 1 || ndim > 4) throw FormatError("tensor rank " + std::to_string(ndim) + " not in 1-4");
  Shape shape(ndim);
  for (auto& d : shape) {
    d = read_u32(is);
    if (d == 0) throw FormatError("zero tensor extent");
  }
  switch (static_cast<DType>(dtype)) {
    case DType::kFloat32:
      return read_payload<float>(is, std::move(shape));
    case DType::kFloat64:
      return read_payload<double>(is, std::move(shape));
  }
  throw FormatError("unknown dtype code " + std::to_string(dtype));
}

}  // namespace io

namespace {

constexpr char kMagic[4] = {'D', 'P', 'N', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_any(std::ostream& os, const BasicTensor<T>& t) {
  os.write(kMagic, 4);
  io::write_u32(os, kVersion);
  io::write_tensor_body(os, t);
  if (!os) throw FormatError("failed writing tensor");
}

template <typename T>
void save_any(const std::filesystem::path& path, const BasicTensor<T>& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_any(os, t);
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) { write_any(os, t); }
void write_tensor(std::ostream& os, const TensorD& t) { write_any(os, t); }

AnyTensor read_tensor(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a DPNT file");
  const uint32_t version = io::read_u32(is);
  if (version != kVersion) throw FormatError("unsupported DPNT version " + std::to_string(version));
  return io::read_tensor_body(is);
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) { save_any(path, t); }
void save_tensor(const std::filesystem::path& path, const TensorD& t) { save_any(path, t); }

AnyTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_tensor(is);
}

}  // namespace dpnet
