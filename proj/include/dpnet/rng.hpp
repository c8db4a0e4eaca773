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

#include "dpnet/tensor.hpp"

namespace dpnet {

// 64-bit linear congruential generator (Knuth MMIX constants):
//   state <- state * 6364136223846793005 + 1442695040888963407  (mod 2^64)
// Each draw advances the state once and uses its top 53 bits, so
// uniform() = (state >> 11) * 2^-53 lies in [0, 1). The state is seeded
// with the seed value itself.
class Lcg64 {
 public:
  static constexpr uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg64(uint64_t seed) noexcept : state_(seed) {}

  uint64_t next() noexcept {
    state_ = state_ * kMultiplier + kIncrement;
    return state_;
  }

  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  uint64_t state() const noexcept { return state_; }

 private:
  uint64_t state_;
};

// Tensor with elements drawn i.i.d. from U[lo, hi) in row-major order.
template <typename T>
BasicTensor<T> random_uniform(Shape shape, Lcg64& rng, double lo = -1.0, double hi = 1.0) {
  BasicTensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

}  // namespace dpnet
