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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpnet/attention.hpp"
#include "dpnet/layers.hpp"

namespace dpnet {

// Attention-based shuffle block.
//
// stride 1: (a, b) = split(x); b' = LSAM(pw2(dw2(dw1(pw1(b))))); out = shuffle(concat(a, b'))
// stride 2: both branches see all of x. The identity branch is dw 3x3 s2 -> pw;
//           the residual branch is pw1 -> dw1 -> dw2 (s2) -> pw2 -> LSAM.
// Every conv is followed by BN; relu after each BN except the last pointwise
// conv of a branch.
template <class V>
struct AsbParamsT {
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int stride = 1;
  ConvBnT<V> pw1, dw1, dw2, pw2;
  LsamParamsT<V> lsam;
  std::optional<ConvBnT<V>> id_dw, id_pw;

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
    if (s.id_dw) s.id_dw->visit(join_name(prefix, "id_dw"), f);
    if (s.id_pw) s.id_pw->visit(join_name(prefix, "id_pw"), f);
    s.pw1.visit(join_name(prefix, "pw1"), f);
    s.dw1.visit(join_name(prefix, "dw1"), f);
    s.dw2.visit(join_name(prefix, "dw2"), f);
    s.pw2.visit(join_name(prefix, "pw2"), f);
    s.lsam.visit(join_name(prefix, "lsam"), f);
  }
};

// Bi-directional fusion between a high-resolution and a low-resolution path.
//   hr' = hr + upsample(BN(pw_up(lr)))
//   lr' = lr + BN(pw_down(dw_s2^k(hr)))   with 2^k the resolution ratio
template <class V>
struct BifmParamsT {
  int64_t hr_channels = 0;
  int64_t lr_channels = 0;
  int ratio = 2;
  std::vector<ConvT<V>> down_dw;  // depthwise 3x3, stride 2, no BN
  ConvBnT<V> down_pw;
  ConvBnT<V> up_pw;

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
    for (size_t i = 0; i < s.down_dw.size(); ++i) {
      s.down_dw[i].visit(join_name(prefix, "down_dw" + std::to_string(i)), f);
    }
    s.down_pw.visit(join_name(prefix, "down_pw"), f);
    s.up_pw.visit(join_name(prefix, "up_pw"), f);
  }
};

// dw 3x3 + BN + relu -> pw 1x1 + BN + relu
template <class V>
struct ConvBlockT {
  ConvBnT<V> dw, pw;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    dw.visit(join_name(prefix, "dw"), f);
    pw.visit(join_name(prefix, "pw"), f);
  }
  template <class F>
  void visit(const std::string& prefix, F&& f) const {
    dw.visit(join_name(prefix, "dw"), f);
    pw.visit(join_name(prefix, "pw"), f);
  }
};

// 1x1 (C -> C/2) -> dw 3x3 -> 1x1 (C/2 -> C), each + BN + relu
template <class V>
struct BottleneckT {
  ConvBnT<V> reduce, dw, restore;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    reduce.visit(join_name(prefix, "reduce"), f);
    dw.visit(join_name(prefix, "dw"), f);
    restore.visit(join_name(prefix, "restore"), f);
  }
  template <class F>
  void visit(const std::string& prefix, F&& f) const {
    reduce.visit(join_name(prefix, "reduce"), f);
    dw.visit(join_name(prefix, "dw"), f);
    restore.visit(join_name(prefix, "restore"), f);
  }
};

// 3x3 conv s2 + BN + relu, then a stride-2 ASB: 1/4 of the input resolution.
template <class V>
struct StemT {
  ConvBnT<V> conv;
  AsbParamsT<V> asb;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    conv.visit(join_name(prefix, "conv"), f);
    asb.visit(join_name(prefix, "asb"), f);
  }
  template <class F>
  void visit(const std::string& prefix, F&& f) const {
    conv.visit(join_name(prefix, "conv"), f);
    asb.visit(join_name(prefix, "asb"), f);
  }
};

using AsbParams = AsbParamsT<Tensor>;
using BifmParams = BifmParamsT<Tensor>;
using ConvBlockParams = ConvBlockT<Tensor>;
using BottleneckParams = BottleneckT<Tensor>;
using StemParams = StemT<Tensor>;

template <class U, class V, class Fn>
AsbParamsT<U> rebind(const AsbParamsT<V>& p, Fn&& fn) {
  AsbParamsT<U> out;
  out.in_channels = p.in_channels;
  out.out_channels = p.out_channels;
  out.stride = p.stride;
  // Visit order: identity branch first.
  if (p.id_dw) out.id_dw = rebind<U>(*p.id_dw, fn);
  if (p.id_pw) out.id_pw = rebind<U>(*p.id_pw, fn);
  out.pw1 = rebind<U>(p.pw1, fn);
  out.dw1 = rebind<U>(p.dw1, fn);
  out.dw2 = rebind<U>(p.dw2, fn);
  out.pw2 = rebind<U>(p.pw2, fn);
  out.lsam = rebind<U>(p.lsam, fn);
  return out;
}

template <class U, class V, class Fn>
BifmParamsT<U> rebind(const BifmParamsT<V>& p, Fn&& fn) {
  BifmParamsT<U> out;
  out.hr_channels = p.hr_channels;
  out.lr_channels = p.lr_channels;
  out.ratio = p.ratio;
  for (const auto& c : p.down_dw) out.down_dw.push_back(rebind<U>(c, fn));
  out.down_pw = rebind<U>(p.down_pw, fn);
  out.up_pw = rebind<U>(p.up_pw, fn);
  return out;
}

template <class U, class V, class Fn>
ConvBlockT<U> rebind(const ConvBlockT<V>& p, Fn&& fn) {
  ConvBlockT<U> out;
  out.dw = rebind<U>(p.dw, fn);
  out.pw = rebind<U>(p.pw, fn);
  return out;
}

template <class U, class V, class Fn>
BottleneckT<U> rebind(const BottleneckT<V>& p, Fn&& fn) {
  BottleneckT<U> out;
  out.reduce = rebind<U>(p.reduce, fn);
  out.dw = rebind<U>(p.dw, fn);
  out.restore = rebind<U>(p.restore, fn);
  return out;
}

template <class U, class V, class Fn>
StemT<U> rebind(const StemT<V>& p, Fn&& fn) {
  StemT<U> out;
  out.conv = rebind<U>(p.conv, fn);
  out.asb = rebind<U>(p.asb, fn);
  return out;
}

// Factories produce zero weights with identity BN; see init_params.
// Stride 1 requires even in == out; stride 2 requires even out.
template <class T>
AsbParamsT<BasicTensor<T>> make_asb(int64_t in_channels, int64_t out_channels, int stride,
                                    int reduction = 8);

// ratio is 2 or 4.
template <class T>
BifmParamsT<BasicTensor<T>> make_bifm(int64_t hr_channels, int64_t lr_channels, int ratio);

template <class T>
ConvBlockT<BasicTensor<T>> make_convblock(int64_t in_channels, int64_t out_channels);

template <class T>
BottleneckT<BasicTensor<T>> make_bottleneck(int64_t channels);

template <class T>
StemT<BasicTensor<T>> make_stem(int64_t in_channels, int64_t mid_channels, int64_t out_channels,
                                int reduction = 8);

template <class V>
V asb_forward(const V& x, const AsbParamsT<V>& p);

// Returns (hr', lr').
template <class V>
std::pair<V, V> bifm_forward(const V& x_hr, const V& x_lr, const BifmParamsT<V>& p);

template <class V>
V convblock_forward(const V& x, const ConvBlockT<V>& p);

template <class V>
V bottleneck_forward(const V& x, const BottleneckT<V>& p);

template <class V>
V stem_forward(const V& x, const StemT<V>& p);

}  // namespace dpnet
