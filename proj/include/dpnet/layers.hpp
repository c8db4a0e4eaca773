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

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpnet/errors.hpp"
#include "dpnet/ops.hpp"
#include "dpnet/rng.hpp"
#include "dpnet/tensor.hpp"

// Parameter bundles shared by every block, templated on the value type V
// (Tensor for inference, TensorD for oracles, ad::Var for gradient checks).
//
// Each bundle exposes visit(prefix, f), calling f(name, tensor, kind) for
// every tensor in a fixed order, and a free rebind<U>(bundle, fn) that maps
// every tensor through fn while keeping the configuration.
namespace dpnet {

enum class ParamKind { kWeight, kBias, kGamma, kBeta, kRunningMean, kRunningVar };

// Buffers are serialized but are not learnable parameters.
inline bool is_buffer(ParamKind k) {
  return k == ParamKind::kRunningMean || k == ParamKind::kRunningVar;
}

inline std::string join_name(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

template <class V>
struct ConvT {
  V weight;  // Cout x Cin/g x kh x kw
  std::optional<V> bias;
  Conv2dArgs args;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    visit_impl(*this, prefix, f);
  }
  template <class F>
  void visit(const std::string& prefix, F&& f) const {
    visit_impl(*this, prefix, f);
  }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, const std::string& prefix, F& f) {
    f(join_name(prefix, "weight"), s.weight, ParamKind::kWeight);
    if (s.bias) f(join_name(prefix, "bias"), *s.bias, ParamKind::kBias);
  }
};

template <class V>
struct BatchNormT {
  V gamma, beta, mean, var;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    visit_impl(*this, prefix, f);
  }
  template <class F>
  void visit(const std::string& prefix, F&& f) const {
    visit_impl(*this, prefix, f);
  }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, const std::string& prefix, F& f) {
    f(join_name(prefix, "gamma"), s.gamma, ParamKind::kGamma);
    f(join_name(prefix, "beta"), s.beta, ParamKind::kBeta);
    f(join_name(prefix, "running_mean"), s.mean, ParamKind::kRunningMean);
    f(join_name(prefix, "running_var"), s.var, ParamKind::kRunningVar);
  }
};

// conv -> BN [-> relu]
template <class V>
struct ConvBnT {
  ConvT<V> conv;
  BatchNormT<V> bn;
  bool relu = true;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    conv.visit(join_name(prefix, "conv"), f);
    bn.visit(join_name(prefix, "bn"), f);
  }
  template <class F>
  void visit(const std::string& prefix, F&& f) const {
    conv.visit(join_name(prefix, "conv"), f);
    bn.visit(join_name(prefix, "bn"), f);
  }
};

template <class U, class V, class Fn>
ConvT<U> rebind(const ConvT<V>& p, Fn&& fn) {
  ConvT<U> out{fn(p.weight), std::nullopt, p.args};
  if (p.bias) out.bias = fn(*p.bias);
  return out;
}

template <class U, class V, class Fn>
BatchNormT<U> rebind(const BatchNormT<V>& p, Fn&& fn) {
  return {fn(p.gamma), fn(p.beta), fn(p.mean), fn(p.var)};
}

template <class U, class V, class Fn>
ConvBnT<U> rebind(const ConvBnT<V>& p, Fn&& fn) {
  return {rebind<U>(p.conv, fn), rebind<U>(p.bn, fn), p.relu};
}

// Zero weights, zero bias; padding defaults to kernel/2.
template <class T>
ConvT<BasicTensor<T>> make_conv(int64_t cin, int64_t cout, int kernel, int stride = 1,
                                int groups = 1, bool bias = false) {
  ConvT<BasicTensor<T>> c;
  c.weight = BasicTensor<T>({cout, cin / groups, kernel, kernel}, T(0));
  if (bias) c.bias = BasicTensor<T>({cout}, T(0));
  c.args = Conv2dArgs{stride, kernel / 2, groups};
  return c;
}

// Identity statistics: gamma = 1, beta = 0, mean = 0, var = 1.
template <class T>
BatchNormT<BasicTensor<T>> make_bn(int64_t channels) {
  return {BasicTensor<T>({channels}, T(1)), BasicTensor<T>({channels}, T(0)),
          BasicTensor<T>({channels}, T(0)), BasicTensor<T>({channels}, T(1))};
}

template <class T>
ConvBnT<BasicTensor<T>> make_conv_bn(int64_t cin, int64_t cout, int kernel, int stride = 1,
                                     int groups = 1, bool relu = true) {
  return {make_conv<T>(cin, cout, kernel, stride, groups), make_bn<T>(cout), relu};
}

template <class V>
V conv_forward(const V& x, const ConvT<V>& c) {
  return conv2d(x, c.weight, c.bias ? &*c.bias : nullptr, c.args);
}

template <class V>
V bn_forward(const V& x, const BatchNormT<V>& b) {
  return batchnorm_inference(x, b.mean, b.var, b.gamma, b.beta);
}

template <class V>
V conv_bn_forward(const V& x, const ConvBnT<V>& p) {
  V y = bn_forward(conv_forward(x, p.conv), p.bn);
  return p.relu ? relu(y) : y;
}

// Fan-in of a weight tensor: Cin/g*kh*kw for conv kernels, rows for
// projection matrices.
inline int64_t fan_in(const Shape& s) {
  if (s.size() == 4) return s[1] * s[2] * s[3];
  return s[0];
}

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases and BN/LN shifts 0;
// scales and running variances 1. Tensors are filled in visit order.
template <class P>
void init_params(P& params, Lcg64& rng) {
  params.visit("", [&](const std::string&, auto& t, ParamKind kind) {
    using T = typename std::decay_t<decltype(t)>::value_type;
    switch (kind) {
      case ParamKind::kWeight: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(t.shape())));
        for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
        break;
      }
      case ParamKind::kGamma:
      case ParamKind::kRunningVar:
        for (auto& v : t.data()) v = T(1);
        break;
      default:
        for (auto& v : t.data()) v = T(0);
    }
  });
}

// Fills every tensor (including shifts) with U(lo, hi); running variances
// with U(0.5, 1.5). Used to exercise all code paths in tests.
template <class P>
void randomize_params(P& params, Lcg64& rng, double lo = -1.0, double hi = 1.0) {
  params.visit("", [&](const std::string&, auto& t, ParamKind kind) {
    using T = typename std::decay_t<decltype(t)>::value_type;
    for (auto& v : t.data()) {
      v = static_cast<T>(kind == ParamKind::kRunningVar ? rng.uniform(0.5, 1.5) : rng.uniform(lo, hi));
    }
  });
}

template <class P>
int64_t count_param_scalars(const P& params, bool include_buffers = false) {
  int64_t n = 0;
  params.visit("", [&](const std::string&, const auto& t, ParamKind kind) {
    if (include_buffers || !is_buffer(kind)) n += numel(t.shape());
  });
  return n;
}

// Tensors of a bundle in visit order.
template <class V, class P>
std::vector<V> flatten_params(const P& params) {
  std::vector<V> out;
  params.visit("", [&](const std::string&, const V& t, ParamKind) { out.push_back(t); });
  return out;
}

// Rebinds a bundle to the values in `values`, consumed in visit order.
template <class U, class P>
auto bind_params(const P& proto, std::span<const U> values) {
  size_t next = 0;
  auto out = rebind<U>(proto, [&](const auto&) -> U {
    if (next >= values.size()) throw DimensionError("bind_params: too few values");
    return values[next++];
  });
  if (next != values.size()) throw DimensionError("bind_params: too many values");
  return out;
}

}  // namespace dpnet
