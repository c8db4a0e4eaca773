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

#include "dpnet/attention.hpp"

#include <vector>

#include "dpnet/autodiff.hpp"
#include "dpnet/errors.hpp"

namespace dpnet {

namespace {

void check_reduction(int64_t channels, int reduction, const char* who) {
  if (reduction < 1 || channels % reduction != 0) {
    throw ConfigError(std::string(who) + ": reduction ratio " + std::to_string(reduction) +
                      " does not divide " + std::to_string(channels) + " channels");
  }
}

template <class V>
void check_feature_map(const V& x, const char* who) {
  if (x.shape().size() != 4) {
    throw ShapeError(std::string(who) + " expects N x C x H x W, got " + to_string(x.shape()));
  }
}

// 1 x C x H x W -> HW x C
template <class V>
V to_sequence(const V& f) {
  const int64_t c = f.dim(1), hw = f.dim(2) * f.dim(3);
  return transpose(reshape(f, {c, hw}));
}

// HW x C -> 1 x C x H x W
template <class V>
V from_sequence(const V& x, int64_t h, int64_t w) {
  return reshape(transpose(x), {1, x.dim(1), h, w});
}

// Applies a single-sample function to every batch entry.
template <class V, class Fn>
V per_sample(const V& x, Fn&& fn) {
  if (x.dim(0) == 1) return fn(x);
  std::vector<V> outs;
  for (int64_t n = 0; n < x.dim(0); ++n) outs.push_back(fn(slice(x, 0, n, 1)));
  return concat(std::span<const V>(outs), 0);
}

}  // namespace

template <class T>
LsamParamsT<BasicTensor<T>> make_lsam(int64_t channels, int reduction) {
  check_reduction(channels, reduction, "LSAM");
  const int64_t d = channels / reduction;
  using Ten = BasicTensor<T>;
  return {Ten({channels, d}, T(0)), Ten({channels, d}, T(0)), Ten({channels, 1}, T(0)),
          Ten({channels, d}, T(0)), Ten({d, channels}, T(0)), Ten({channels}, T(1)),
          Ten({channels}, T(0)),    reduction};
}

template <class T>
LcamParamsT<BasicTensor<T>> make_lcam(int64_t channels, LcamDirection direction, int reduction) {
  check_reduction(channels, reduction, "LCAM");
  const int64_t d = channels / reduction;
  using Ten = BasicTensor<T>;
  return {make_conv<T>(channels, d, 3, 1, 1, true),
          make_conv<T>(channels, 1, 3, 1, 1, true),
          Ten({channels, d}, T(0)),
          Ten({channels, d}, T(0)),
          Ten({d, channels}, T(0)),
          Ten({channels}, T(1)),
          Ten({channels}, T(0)),
          reduction,
          direction};
}

template <class V>
LsamTrace<V> lsam_trace(const V& f, const LsamParamsT<V>& p) {
  check_feature_map(f, "LSAM");
  const int64_t c = f.dim(1), h = f.dim(2), w = f.dim(3);
  check_reduction(c, p.reduction, "LSAM");
  if (p.w_sp_q.dim(0) != c) {
    throw ConfigError("LSAM parameters built for " + std::to_string(p.w_sp_q.dim(0)) +
                      " channels applied to " + to_string(f.shape()));
  }
  const int64_t d = c / p.reduction;

  const V x = to_sequence(f);
  // Spatial branch: the query is pooled to one row before the softmax.
  const V q_proj = matmul(x, p.w_sp_q);
  const V q_pool = reshape(global_avg_pool(reshape(transpose(q_proj), {1, d, h, w})), {1, d});
  const V q_sp = softmax(q_pool, 1);
  const V k_sp = matmul(x, p.w_sp_k);
  const V s_sp = sigmoid(matmul(k_sp, transpose(q_sp)));

  // Channel branch: softmax over positions, then a 1 x C descriptor.
  const V q_ch = softmax(matmul(x, p.w_ch_q), 0);
  const V k_ch = matmul(x, p.w_ch_k);
  const V corr = matmul(matmul(transpose(q_ch), k_ch), p.w_ch_o);
  const V s_ch = sigmoid(layernorm(corr, p.ln_gamma, p.ln_beta));

  const V y = add(mul(s_sp, x), mul(s_ch, x));
  return {q_sp, s_sp, q_ch, s_ch, from_sequence(y, h, w)};
}

template <class V>
V lsam_forward(const V& x, const LsamParamsT<V>& p) {
  check_feature_map(x, "LSAM");
  return per_sample(x, [&](const V& s) { return lsam_trace(s, p).output; });
}

template <class V>
LcamTrace<V> lcam_trace(const V& f_h, const V& f_l, const LcamParamsT<V>& p) {
  check_feature_map(f_h, "LCAM");
  check_feature_map(f_l, "LCAM");
  const int64_t c = f_h.dim(1);
  if (f_l.dim(1) != c) {
    throw ConfigError("LCAM: channel mismatch between " + to_string(f_h.shape()) + " and " +
                      to_string(f_l.shape()));
  }
  if (f_h.dim(2) < f_l.dim(2) || f_h.dim(3) < f_l.dim(3)) {
    throw ShapeError("LCAM: high-resolution input " + to_string(f_h.shape()) +
                     " is smaller than low-resolution input " + to_string(f_l.shape()));
  }
  check_reduction(c, p.reduction, "LCAM");
  if (p.w_sp_k.dim(0) != c) {
    throw ConfigError("LCAM parameters built for " + std::to_string(p.w_sp_k.dim(0)) +
                      " channels applied to " + to_string(f_h.shape()));
  }
  const int64_t d = c / p.reduction;

  const bool top_down = p.direction == LcamDirection::kTopDown;
  const V& target = top_down ? f_h : f_l;
  const int64_t h = target.dim(2), w = target.dim(3);
  const V query = bilinear_resize(top_down ? f_l : f_h, h, w);
  const V x = to_sequence(target);

  const V q_pool = reshape(global_avg_pool(conv_forward(query, p.f_sp)), {1, d});
  const V q_sp = reshape(softmax(q_pool, 1), {d, 1});
  const V k_sp = matmul(x, p.w_sp_k);
  const V s_sp = sigmoid(matmul(k_sp, q_sp));

  const V q_ch = softmax(reshape(conv_forward(query, p.f_ch), {1, h * w}), 1);
  const V k_ch = matmul(x, p.w_ch_k);
  const V corr = matmul(matmul(q_ch, k_ch), p.w_ch_o);
  const V s_ch = sigmoid(layernorm(corr, p.ln_gamma, p.ln_beta));

  const V y = add(add(mul(s_sp, x), mul(s_ch, x)), x);
  return {q_sp, s_sp, q_ch, s_ch, from_sequence(y, h, w)};
}

template <class V>
V lcam_forward(const V& f_h, const V& f_l, const LcamParamsT<V>& p) {
  check_feature_map(f_h, "LCAM");
  check_feature_map(f_l, "LCAM");
  if (f_h.dim(0) != f_l.dim(0)) {
    throw DimensionError("LCAM: batch mismatch between " + to_string(f_h.shape()) + " and " +
                         to_string(f_l.shape()));
  }
  if (f_h.dim(0) == 1) return lcam_trace(f_h, f_l, p).output;
  std::vector<V> outs;
  for (int64_t n = 0; n < f_h.dim(0); ++n) {
    outs.push_back(lcam_trace(slice(f_h, 0, n, 1), slice(f_l, 0, n, 1), p).output);
  }
  return concat(std::span<const V>(outs), 0);
}

template LsamParamsT<Tensor> make_lsam<float>(int64_t, int);
template LsamParamsT<TensorD> make_lsam<double>(int64_t, int);
template LcamParamsT<Tensor> make_lcam<float>(int64_t, LcamDirection, int);
template LcamParamsT<TensorD> make_lcam<double>(int64_t, LcamDirection, int);

#define DPNET_INSTANTIATE_ATTENTION(V)                                          \
  template LsamTrace<V> lsam_trace(const V&, const LsamParamsT<V>&);            \
  template V lsam_forward(const V&, const LsamParamsT<V>&);                     \
  template LcamTrace<V> lcam_trace(const V&, const V&, const LcamParamsT<V>&);  \
  template V lcam_forward(const V&, const V&, const LcamParamsT<V>&);

DPNET_INSTANTIATE_ATTENTION(Tensor)
DPNET_INSTANTIATE_ATTENTION(TensorD)
DPNET_INSTANTIATE_ATTENTION(ad::Var)

#undef DPNET_INSTANTIATE_ATTENTION

}  // namespace dpnet
