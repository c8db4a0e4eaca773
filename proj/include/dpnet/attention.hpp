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
#include <string>

#include "dpnet/layers.hpp"
#include "dpnet/tensor.hpp"

namespace dpnet {

// Lightweight self-attention over one feature map. With X the HW x C
// sequence of the input and d = C / r:
//   S_sp = sigmoid(X Wk_sp  softmax(GAP(X Wq_sp))^T)            (HW x 1)
//   S_ch = sigmoid(LN(softmax_HW(X Wq_ch)^T X Wk_ch Wo_ch))      (1 x C)
//   out  = S_sp * X + S_ch * X
template <class V>
struct LsamParamsT {
  V w_sp_q;  // C x d
  V w_sp_k;  // C x d
  V w_ch_q;  // C x 1
  V w_ch_k;  // C x d
  V w_ch_o;  // d x C
  V ln_gamma, ln_beta;  // C
  int reduction = 8;

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
    f(join_name(prefix, "w_sp_q"), s.w_sp_q, ParamKind::kWeight);
    f(join_name(prefix, "w_sp_k"), s.w_sp_k, ParamKind::kWeight);
    f(join_name(prefix, "w_ch_q"), s.w_ch_q, ParamKind::kWeight);
    f(join_name(prefix, "w_ch_k"), s.w_ch_k, ParamKind::kWeight);
    f(join_name(prefix, "w_ch_o"), s.w_ch_o, ParamKind::kWeight);
    f(join_name(prefix, "ln_gamma"), s.ln_gamma, ParamKind::kGamma);
    f(join_name(prefix, "ln_beta"), s.ln_beta, ParamKind::kBeta);
  }
};

enum class LcamDirection { kTopDown, kBottomUp };

// Cross-resolution attention. Queries come from 3x3 convolutions over the
// "query" map, keys and the re-weighted residual from the "target" map:
//   top-down:  target = F_h, query = upsample(F_l)   -> output at F_h size
//   bottom-up: target = F_l, query = downsample(F_h) -> output at F_l size
//   out = S_sp * X + S_ch * X + X
template <class V>
struct LcamParamsT {
  ConvT<V> f_sp;  // 3x3, C -> d, with bias
  ConvT<V> f_ch;  // 3x3, C -> 1, with bias
  V w_sp_k;       // C x d
  V w_ch_k;       // C x d
  V w_ch_o;       // d x C
  V ln_gamma, ln_beta;
  int reduction = 8;
  LcamDirection direction = LcamDirection::kTopDown;

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
    s.f_sp.visit(join_name(prefix, "f_sp"), f);
    s.f_ch.visit(join_name(prefix, "f_ch"), f);
    f(join_name(prefix, "w_sp_k"), s.w_sp_k, ParamKind::kWeight);
    f(join_name(prefix, "w_ch_k"), s.w_ch_k, ParamKind::kWeight);
    f(join_name(prefix, "w_ch_o"), s.w_ch_o, ParamKind::kWeight);
    f(join_name(prefix, "ln_gamma"), s.ln_gamma, ParamKind::kGamma);
    f(join_name(prefix, "ln_beta"), s.ln_beta, ParamKind::kBeta);
  }
};

using LsamParams = LsamParamsT<Tensor>;
using LcamParams = LcamParamsT<Tensor>;

template <class U, class V, class Fn>
LsamParamsT<U> rebind(const LsamParamsT<V>& p, Fn&& fn) {
  return {fn(p.w_sp_q), fn(p.w_sp_k), fn(p.w_ch_q), fn(p.w_ch_k),
          fn(p.w_ch_o), fn(p.ln_gamma), fn(p.ln_beta), p.reduction};
}

template <class U, class V, class Fn>
LcamParamsT<U> rebind(const LcamParamsT<V>& p, Fn&& fn) {
  return {rebind<U>(p.f_sp, fn), rebind<U>(p.f_ch, fn), fn(p.w_sp_k), fn(p.w_ch_k), fn(p.w_ch_o),
          fn(p.ln_gamma), fn(p.ln_beta), p.reduction, p.direction};
}

// Zero projections, LN gamma = 1, beta = 0. Throws ConfigError unless
// reduction divides channels.
template <class T>
LsamParamsT<BasicTensor<T>> make_lsam(int64_t channels, int reduction = 8);

template <class T>
LcamParamsT<BasicTensor<T>> make_lcam(int64_t channels, LcamDirection direction,
                                      int reduction = 8);

// Intermediate maps of one sample (N = 1), exposed for inspection.
template <class V>
struct LsamTrace {
  V q_sp;         // 1 x d
  V s_sp;         // HW x 1
  V q_ch;         // HW x 1
  V s_ch;         // 1 x C
  V output;       // 1 x C x H x W
};

template <class V>
struct LcamTrace {
  V q_sp;         // d x 1
  V s_sp;         // HW x 1
  V q_ch;         // 1 x HW
  V s_ch;         // 1 x C
  V output;       // 1 x C x H x W at the target resolution
};

template <class V>
LsamTrace<V> lsam_trace(const V& x, const LsamParamsT<V>& p);

template <class V>
V lsam_forward(const V& x, const LsamParamsT<V>& p);

template <class V>
LcamTrace<V> lcam_trace(const V& f_h, const V& f_l, const LcamParamsT<V>& p);

template <class V>
V lcam_forward(const V& f_h, const V& f_l, const LcamParamsT<V>& p);

}  // namespace dpnet
