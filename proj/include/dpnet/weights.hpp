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
#include <string>
#include <unordered_map>
#include <vector>

#include "dpnet/network.hpp"
#include "dpnet/tensor.hpp"

namespace dpnet {

// Named tensors in insertion order; names are unique.
class WeightStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    ParamKind kind = ParamKind::kWeight;
  };

  // Throws ConfigError on a duplicate name.
  void add(std::string name, Tensor tensor, ParamKind kind = ParamKind::kWeight);
  const Tensor* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }

  const std::vector<Entry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  int64_t scalar_count(bool include_buffers = true) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

WeightStore collect_weights(const Model& model);

// Replaces every model tensor with the store's entry of the same name.
// Missing, extra and shape-mismatched entries throw FormatError naming the
// parameter; the model is left untouched on error.
void assign_weights(Model& model, const WeightStore& store);

// DPNW layout, little-endian:
//   "DPNW" | u32 version (=1) | u32 count |
//   count x (u16 name length | name | u8 dtype | u8 ndim | u32 dims | data)
void write_weights(std::ostream& os, const WeightStore& store);
// f64 entries are narrowed to single precision.
WeightStore read_weights(std::istream& is);

// Written to a temporary sibling and renamed into place.
void save_weights(const Model& model, const std::filesystem::path& path);
void load_weights(Model& model, const std::filesystem::path& path);

}  // namespace dpnet
