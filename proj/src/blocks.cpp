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

#include "dpnet/blocks.hpp"

#include "dpnet/autodiff.hpp"
#include "dpnet/errors.hpp"

namespace dpnet {

namespace {

template <class V>
void expect_channels(const V& x, int64_t channels, const char* who) {
  if (x.shape().size() != 4) {
    throw ShapeError(std::string(who) + " expects N x C x H x W, got " + to_string(x.shape()));
  }
  if (x.dim(1) != channels) {
    throw ConfigError(std::string(who) + " built for " + std::to_string(channels) +
                      " input channels, got " + to_string(x.shape()));
  }
}

template <class T>
ConvBnT<BasicTensor<T>> depthwise(int64_t channels, int stride) {
  return make_conv_bn<T>(channels, channels, 3, stride, static_cast<int>(channels), true);
}

template <class T>
ConvBnT<BasicTensor<T>> pointwise(int64_t cin, int64_t cout, bool relu) {
  return make_conv_bn<T>(cin, cout, 1, 1, 1, relu);
}

}  // namespace

template <class T>
AsbParamsT<BasicTensor<T>> make_asb(int64_t in_channels, int64_t out_channels, int stride,
                                    int reduction) {
  const std::string tag = "ASB " + std::to_string(in_channels) + "->" +
                          std::to_string(out_channels) + " stride " + std::to_string(stride);
  if (stride != 1 && stride != 2) throw ConfigError(tag + ": stride must be 1 or 2");
  if (out_channels % 2 != 0 || in_channels <= 0) {
    throw ConfigError(tag + ": output channels must be even");
  }
  if (stride == 1 && in_channels != out_channels) {
    throw ConfigError(tag + ": stride-1 block must preserve channels");
  }
  const int64_t half = out_channels / 2;
  const int64_t branch_in = stride == 1 ? half : in_channels;
  AsbParamsT<BasicTensor<T>> p;
  p.in_channels = in_channels;
  p.out_channels = out_channels;
  p.stride = stride;
  p.pw1 = pointwise<T>(branch_in, half, true);
  p.dw1 = depthwise<T>(half, 1);
  p.dw2 = depthwise<T>(half, stride);
  p.pw2 = pointwise<T>(half, half, false);
  p.lsam = make_lsam<T>(half, reduction);
  if (stride == 2) {
    p.id_dw = depthwise<T>(in_channels, 2);
    p.id_pw = pointwise<T>(in_channels, half, false);
  }
  return p;
}

template <class T>
BifmParamsT<BasicTensor<T>> make_bifm(int64_t hr_channels, int64_t lr_channels, int ratio) {
  if (ratio != 2 && ratio != 4) {
    throw ConfigError("Bi-FM resolution ratio must be 2 or 4, got " + std::to_string(ratio));
  }
  BifmParamsT<BasicTensor<T>> p;
  p.hr_channels = hr_channels;
  p.lr_channels = lr_channels;
  p.ratio = ratio;
  for (int r = ratio; r > 1; r /= 2) {
    p.down_dw.push_back(make_conv<T>(hr_channels, hr_channels, 3, 2, static_cast<int>(hr_channels)));
  }
  p.down_pw = pointwise<T>(hr_channels, lr_channels, false);
  p.up_pw = pointwise<T>(lr_channels, hr_channels, false);
  return p;
}

template <class T>
ConvBlockT<BasicTensor<T>> make_convblock(int64_t in_channels, int64_t out_channels) {
  return {depthwise<T>(in_channels, 1), pointwise<T>(in_channels, out_channels, true)};
}

template <class T>
BottleneckT<BasicTensor<T>> make_bottleneck(int64_t channels) {
  if (channels % 2 != 0) {
    throw ConfigError("bottleneck channels must be even, got " + std::to_string(channels));
  }
  const int64_t half = channels / 2;
  return {pointwise<T>(channels, half, true), depthwise<T>(half, 1),
          pointwise<T>(half, channels, true)};
}

template <class T>
StemT<BasicTensor<T>> make_stem(int64_t in_channels, int64_t mid_channels, int64_t out_channels,
                                int reduction) {
  return {make_conv_bn<T>(in_channels, mid_channels, 3, 2, 1, true),
          make_asb<T>(mid_channels, out_channels, 2, reduction)};
}

template <class V>
V asb_forward(const V& x, const AsbParamsT<V>& p) {
  expect_channels(x, p.in_channels, "ASB");
  auto branch = [&](const V& b) {
    V y = conv_bn_forward(b, p.pw1);
    y = conv_bn_forward(y, p.dw1);
    y = conv_bn_forward(y, p.dw2);
    y = conv_bn_forward(y, p.pw2);
    return lsam_forward(y, p.lsam);
  };
  if (p.stride == 1) {
    auto [a, b] = channel_split(x);
    return channel_shuffle(concat(a, branch(b), 1), 2);
  }
  const V id = conv_bn_forward(conv_bn_forward(x, *p.id_dw), *p.id_pw);
  return channel_shuffle(concat(id, branch(x), 1), 2);
}

template <class V>
std::pair<V, V> bifm_forward(const V& x_hr, const V& x_lr, const BifmParamsT<V>& p) {
  expect_channels(x_hr, p.hr_channels, "Bi-FM high-resolution input");
  expect_channels(x_lr, p.lr_channels, "Bi-FM low-resolution input");
  if (x_hr.dim(0) != x_lr.dim(0) || x_hr.dim(2) != x_lr.dim(2) * p.ratio ||
      x_hr.dim(3) != x_lr.dim(3) * p.ratio) {
    throw ConfigError("Bi-FM expects a resolution ratio of " + std::to_string(p.ratio) +
                      " between " + to_string(x_hr.shape()) + " and " + to_string(x_lr.shape()));
  }
  const V up = bilinear_resize(conv_bn_forward(x_lr, p.up_pw), x_hr.dim(2), x_hr.dim(3));
  V down = x_hr;
  for (const auto& c : p.down_dw) down = conv_forward(down, c);
  down = conv_bn_forward(down, p.down_pw);
  return {add(x_hr, up), add(x_lr, down)};
}

template <class V>
V convblock_forward(const V& x, const ConvBlockT<V>& p) {
  expect_channels(x, p.dw.conv.weight.dim(0), "ConvBlock");
  return conv_bn_forward(conv_bn_forward(x, p.dw), p.pw);
}

template <class V>
V bottleneck_forward(const V& x, const BottleneckT<V>& p) {
  expect_channels(x, p.reduce.conv.weight.dim(1), "Bottleneck");
  return conv_bn_forward(conv_bn_forward(conv_bn_forward(x, p.reduce), p.dw), p.restore);
}

template <class V>
V stem_forward(const V& x, const StemT<V>& p) {
  expect_channels(x, p.conv.conv.weight.dim(1), "stem");
  return asb_forward(conv_bn_forward(x, p.conv), p.asb);
}

#define DPNET_INSTANTIATE_FACTORIES(T)                                                     \
  template AsbParamsT<BasicTensor<T>> make_asb<T>(int64_t, int64_t, int, int);             \
  template BifmParamsT<BasicTensor<T>> make_bifm<T>(int64_t, int64_t, int);                \
  template ConvBlockT<BasicTensor<T>> make_convblock<T>(int64_t, int64_t);                 \
  template BottleneckT<BasicTensor<T>> make_bottleneck<T>(int64_t);                        \
  template StemT<BasicTensor<T>> make_stem<T>(int64_t, int64_t, int64_t, int);

DPNET_INSTANTIATE_FACTORIES(float)
DPNET_INSTANTIATE_FACTORIES(double)

#define DPNET_INSTANTIATE_BLOCKS(V)                                                    \
  template V asb_forward(const V&, const AsbParamsT<V>&);                              \
  template std::pair<V, V> bifm_forward(const V&, const V&, const BifmParamsT<V>&);    \
  template V convblock_forward(const V&, const ConvBlockT<V>&);                        \
  template V bottleneck_forward(const V&, const BottleneckT<V>&);                      \
  template V stem_forward(const V&, const StemT<V>&);

DPNET_INSTANTIATE_BLOCKS(Tensor)
DPNET_INSTANTIATE_BLOCKS(TensorD)
DPNET_INSTANTIATE_BLOCKS(ad::Var)

#undef DPNET_INSTANTIATE_FACTORIES
#undef DPNET_INSTANTIATE_BLOCKS

}  // namespace dpnet
