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
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "dpnet/tensor.hpp"

namespace dpnet {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kBatchNormEps = 1e-5;

struct Conv2dArgs {
  int stride = 1;
  int padding = 0;
  int groups = 1;
};

// floor((in + 2p - k) / stride) + 1
int64_t conv_output_extent(int64_t in, int64_t kernel, int stride, int padding);

// Shape of a + b under singleton-axis broadcasting. Ranks must match.
Shape broadcast_shape(const Shape& a, const Shape& b);

// c[i,j] = sum_k a[i,k] * b[k,j], k ascending.
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

// Grouped cross-correlation with zero padding. w is Cout x Cin/g x kh x kw.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w,
                      const std::type_identity_t<BasicTensor<T>>* bias, const Conv2dArgs& args);

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x, int axis);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

// Normalizes over the last axis (biased variance).
template <typename T>
BasicTensor<T> layernorm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                         const BasicTensor<T>& beta, double eps = kLayerNormEps);

// N x C x H x W -> N x C x 1 x 1
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);

// Half-pixel (align_corners = false) bilinear resampling of the last two axes.
template <typename T>
BasicTensor<T> bilinear_resize(const BasicTensor<T>& x, int64_t out_h, int64_t out_w);

// Output channel j*g + i reads input channel i*(C/g) + j.
template <typename T>
BasicTensor<T> channel_shuffle(const BasicTensor<T>& x, int64_t groups);

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> channel_split(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> concat(std::span<const BasicTensor<T>> parts, int axis);

template <typename T>
BasicTensor<T> concat(const BasicTensor<T>& a, const BasicTensor<T>& b, int axis);

template <typename T>
BasicTensor<T> slice(const BasicTensor<T>& x, int axis, int64_t begin, int64_t length);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);

// (x - mean) / sqrt(var + eps) * gamma + beta, per channel (axis 1).
template <typename T>
BasicTensor<T> batchnorm_inference(const BasicTensor<T>& x, const BasicTensor<T>& mean,
                                   const BasicTensor<T>& var, const BasicTensor<T>& gamma,
                                   const BasicTensor<T>& beta, double eps = kBatchNormEps);

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape);

// 2-D only.
template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& x);

// Reduces a broadcast gradient back onto `shape` by summation.
template <typename T>
BasicTensor<T> sum_to_shape(const BasicTensor<T>& g, const Shape& shape);

namespace detail {

// Source taps of one output coordinate along a resampled axis.
struct LinearTap {
  int64_t lo = 0;
  int64_t hi = 0;
  double frac = 0.0;
};

std::vector<LinearTap> bilinear_taps(int64_t in, int64_t out);

}  // namespace detail

}  // namespace dpnet
