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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <variant>

#include "dpnet/tensor.hpp"

namespace dpnet {

enum class DType : uint8_t { kFloat32 = 0, kFloat64 = 1 };

// A decoded DPNT payload keeps its on-disk precision.
using AnyTensor = std::variant<Tensor, TensorD>;

// DPNT layout, little-endian:
//   "DPNT" | u32 version (=1) | u8 dtype | u8 ndim | u32 dims[ndim] | raw data
void write_tensor(std::ostream& os, const Tensor& t);
void write_tensor(std::ostream& os, const TensorD& t);
AnyTensor read_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
void save_tensor(const std::filesystem::path& path, const TensorD& t);
AnyTensor load_tensor(const std::filesystem::path& path);

namespace io {

// Little-endian primitive encoding shared by the DPNT and DPNW formats.
void write_u8(std::ostream& os, uint8_t v);
void write_u16(std::ostream& os, uint16_t v);
void write_u32(std::ostream& os, uint32_t v);
uint8_t read_u8(std::istream& is);
uint16_t read_u16(std::istream& is);
uint32_t read_u32(std::istream& is);

// dtype | ndim | dims | data, without magic or version.
void write_tensor_body(std::ostream& os, const Tensor& t);
void write_tensor_body(std::ostream& os, const TensorD& t);
AnyTensor read_tensor_body(std::istream& is);

}  // namespace io

}  // namespace dpnet
