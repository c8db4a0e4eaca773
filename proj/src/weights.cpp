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

#include "dpnet/weights.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>

#include "dpnet/errors.hpp"
#include "dpnet/tensor_io.hpp"

namespace dpnet {

namespace {

constexpr std::array<char, 4> kMagic{'D', 'P', 'N', 'W'};
constexpr uint32_t kVersion = 1;

}  // namespace

void WeightStore::add(std::string name, Tensor tensor, ParamKind kind) {
  if (index_.contains(name)) throw ConfigError("duplicate weight name \"" + name + "\"");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(tensor), kind});
}

const Tensor* WeightStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second].tensor;
}

int64_t WeightStore::scalar_count(bool include_buffers) const {
  int64_t n = 0;
  for (const auto& e : entries_) {
    if (include_buffers || !is_buffer(e.kind)) n += e.tensor.size();
  }
  return n;
}

WeightStore collect_weights(const Model& model) {
  WeightStore store;
  model.visit("", [&](const std::string& name, const Tensor& t, ParamKind kind) {
    store.add(name, t, kind);
  });
  return store;
}

void assign_weights(Model& model, const WeightStore& store) {
  size_t matched = 0;
  model.visit("", [&](const std::string& name, const Tensor& t, ParamKind) {
    const Tensor* src = store.find(name);
    if (!src) throw FormatError("weights: missing parameter \"" + name + "\"");
    if (src->shape() != t.shape()) {
      throw FormatError("weights: parameter \"" + name + "\" has shape " + to_string(src->shape()) +
                        ", model expects " + to_string(t.shape()));
    }
    ++matched;
  });
  if (matched != store.size()) {
    const WeightStore expected = collect_weights(model);
    for (const auto& e : store.entries()) {
      if (!expected.contains(e.name)) throw FormatError("weights: unexpected parameter \"" + e.name + "\"");
    }
  }
  model.visit("", [&](const std::string& name, Tensor& t, ParamKind) { t = *store.find(name); });
}

void write_weights(std::ostream& os, const WeightStore& store) {
  os.write(kMagic.data(), kMagic.size());
  io::write_u32(os, kVersion);
  io::write_u32(os, static_cast<uint32_t>(store.size()));
  for (const auto& e : store.entries()) {
    if (e.name.size() > 0xFFFF) throw FormatError("weights: name too long: " + e.name);
    io::write_u16(os, static_cast<uint16_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    io::write_tensor_body(os, e.tensor);
  }
  if (!os) throw FormatError("weights: write failed");
}

WeightStore read_weights(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("weights: missing DPNW magic");
  }
  const uint32_t version = io::read_u32(is);
  if (version != kVersion) throw FormatError("weights: unsupported version " + std::to_string(version));
  const uint32_t count = io::read_u32(is);
  WeightStore store;
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t len = io::read_u16(is);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw FormatError("weights: truncated name of entry " + std::to_string(i));
    AnyTensor body;
    try {
      body = io::read_tensor_body(is);
    } catch (const FormatError& e) {
      throw FormatError("weights: parameter \"" + name + "\": " + e.what());
    }
    Tensor t = std::holds_alternative<Tensor>(body) ? std::get<Tensor>(std::move(body))
                                                    : std::get<TensorD>(body).cast<float>();
    try {
      store.add(name, std::move(t));
    } catch (const ConfigError& e) {
      throw FormatError(std::string("weights: ") + e.what());
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("weights: trailing bytes after last entry");
  return store;
}

void save_weights(const Model& model, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("weights: cannot open " + tmp.string() + " for writing");
    write_weights(os, collect_weights(model));
    os.close();
    if (!os) throw FormatError("weights: failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void load_weights(Model& model, const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("weights: cannot open " + path.string());
  assign_weights(model, read_weights(is));
}

}  // namespace dpnet
