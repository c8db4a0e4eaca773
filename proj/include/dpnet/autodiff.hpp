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
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "dpnet/ops.hpp"
#include "dpnet/tensor.hpp"

// Reverse-mode differentiation over double-precision tensors. Only used to
// verify forward code paths: the same templated module forwards that run on
// Tensor also run on ad::Var, recording every primitive on a Tape.
namespace dpnet::ad {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while its Tape lives.
class Var {
 public:
  Var() = default;

  const TensorD& value() const;
  // Accumulated gradient after Tape::backward (zeros if none reached it).
  TensorD grad() const;
  const Shape& shape() const { return value().shape(); }
  int64_t dim(int axis) const { return value().dim(axis); }

  Tape* tape() const noexcept { return tape_; }
  size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  size_t id_ = 0;
};

class Tape {
 public:
  // Receives the gradient of the node's output and accumulates into inputs.
  using Backward = std::function<void(Tape&, const TensorD&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(TensorD value);
  Var constant(TensorD value);
  // Appends an op node. The backward closure is dropped when no input
  // requires a gradient.
  Var record(TensorD value, std::initializer_list<Var> inputs, Backward backward);
  Var record(TensorD value, std::span<const Var> inputs, Backward backward);

  // Reverse sweep from `output`, seeded with d(loss)/d(output). Nodes are
  // visited in exact reverse recording order.
  void backward(const Var& output, const TensorD& seed);

  void accumulate(const Var& v, const TensorD& g);
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  const TensorD& value(size_t id) const { return nodes_[id].value; }
  TensorD grad(size_t id) const;
  size_t size() const noexcept { return nodes_.size(); }

  // Non-smooth ops append the branch each element took. Two evaluations with
  // equal signatures lie on the same smooth piece.
  void record_kinks(std::span<const double> pre_activation);
  const std::vector<uint8_t>& kink_signature() const noexcept { return kinks_; }

  // Test hook: ids in the order the last backward() visited them.
  const std::vector<size_t>& last_sweep() const noexcept { return sweep_; }

 private:
  struct Node {
    TensorD value;
    TensorD grad;
    bool requires_grad = false;
    Backward backward;
  };

  void check_owned(const Var& v) const;

  std::deque<Node> nodes_;
  std::vector<uint8_t> kinks_;
  std::vector<size_t> sweep_;
};

Var matmul(const Var& a, const Var& b);
Var conv2d(const Var& x, const Var& w, const Var* bias, const Conv2dArgs& args);
Var softmax(const Var& x, int axis);
Var sigmoid(const Var& x);
Var relu(const Var& x);
Var layernorm(const Var& x, const Var& gamma, const Var& beta, double eps = kLayerNormEps);
Var global_avg_pool(const Var& x);
Var bilinear_resize(const Var& x, int64_t out_h, int64_t out_w);
Var channel_shuffle(const Var& x, int64_t groups);
std::pair<Var, Var> channel_split(const Var& x);
Var concat(std::span<const Var> parts, int axis);
Var concat(const Var& a, const Var& b, int axis);
Var slice(const Var& x, int axis, int64_t begin, int64_t length);
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var batchnorm_inference(const Var& x, const Var& mean, const Var& var, const Var& gamma,
                        const Var& beta, double eps = kBatchNormEps);
Var reshape(const Var& x, Shape shape);
Var transpose(const Var& x);

}  // namespace dpnet::ad
