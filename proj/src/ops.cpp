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

#include "dpnet/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "dpnet/errors.hpp"

namespace dpnet {

namespace {

void require_rank(const Shape& s, int rank, const char* op) {
  if (static_cast<int>(s.size()) != rank) {
    throw ShapeError(std::string(op) + " expects a rank-" + std::to_string(rank) +
                     " tensor, got " + to_string(s));
  }
}

int normalize_axis(int axis, int rank, const char* op) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range");
  }
  return axis;
}

// outer x len x inner decomposition around `axis`.
struct AxisSplit {
  int64_t outer = 1;
  int64_t len = 1;
  int64_t inner = 1;
};

AxisSplit split_at(const Shape& s, int axis) {
  AxisSplit r;
  for (int i = 0; i < axis; ++i) r.outer *= s[i];
  r.len = s[axis];
  for (size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

std::array<int64_t, 4> pad4(const Shape& s) {
  std::array<int64_t, 4> r{1, 1, 1, 1};
  std::copy(s.begin(), s.end(), r.begin() + (4 - s.size()));
  return r;
}

template <typename T, typename Op>
BasicTensor<T> broadcast_binary(const BasicTensor<T>& a, const BasicTensor<T>& b, Op op) {
  if (a.shape() == b.shape()) {
    BasicTensor<T> out(a.shape());
    auto o = out.data();
    auto x = a.data();
    auto y = b.data();
    for (size_t i = 0; i < o.size(); ++i) o[i] = op(x[i], y[i]);
    return out;
  }
  const Shape shape = broadcast_shape(a.shape(), b.shape());
  BasicTensor<T> out(shape);
  const auto os = pad4(shape);
  const auto as = pad4(a.shape());
  const auto bs = pad4(b.shape());
  // Row-major strides with zero stride on stretched axes.
  std::array<int64_t, 4> ast{}, bst{};
  int64_t sa = 1, sb = 1;
  for (int i = 3; i >= 0; --i) {
    ast[i] = as[i] == 1 ? 0 : sa;
    bst[i] = bs[i] == 1 ? 0 : sb;
    sa *= as[i];
    sb *= bs[i];
  }
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  int64_t k = 0;
  for (int64_t i0 = 0; i0 < os[0]; ++i0)
    for (int64_t i1 = 0; i1 < os[1]; ++i1)
      for (int64_t i2 = 0; i2 < os[2]; ++i2) {
        const int64_t abase = i0 * ast[0] + i1 * ast[1] + i2 * ast[2];
        const int64_t bbase = i0 * bst[0] + i1 * bst[1] + i2 * bst[2];
        for (int64_t i3 = 0; i3 < os[3]; ++i3, ++k) {
          o[k] = op(x[abase + i3 * ast[3]], y[bbase + i3 * bst[3]]);
        }
      }
  return out;
}

}  // namespace

int64_t conv_output_extent(int64_t in, int64_t kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  if (a.size() != b.size()) {
    throw DimensionError("cannot broadcast " + to_string(a) + " with " + to_string(b) +
                         ": ranks differ");
  }
  Shape out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i] || b[i] == 1) {
      out[i] = a[i];
    } else if (a[i] == 1) {
      out[i] = b[i];
    } else {
      throw DimensionError("cannot broadcast " + to_string(a) + " with " + to_string(b));
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul shape mismatch: " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  BasicTensor<T> c({m, n});
  auto cd = c.data();
  auto ad = a.data();
  auto bd = b.data();
  for (int64_t i = 0; i < m; ++i) {
    T* crow = cd.data() + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const T av = ad[i * k + p];
      const T* brow = bd.data() + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w,
                      const std::type_identity_t<BasicTensor<T>>* bias, const Conv2dArgs& args) {
  require_rank(x.shape(), 4, "conv2d input");
  require_rank(w.shape(), 4, "conv2d weight");
  const int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int64_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int g = args.groups;
  if (g < 1 || cin % g != 0 || cout % g != 0) {
    throw ConfigError("conv2d: channels " + std::to_string(cin) + "->" + std::to_string(cout) +
                      " not divisible by groups " + std::to_string(g));
  }
  if (w.dim(1) * g != cin) {
    throw DimensionError("conv2d weight " + to_string(w.shape()) + " does not match input " +
                         to_string(x.shape()) + " with groups " + std::to_string(g));
  }
  if (args.stride < 1 || args.padding < 0) throw ConfigError("conv2d: invalid stride/padding");
  if (h + 2 * args.padding < kh || wd + 2 * args.padding < kw) {
    throw ShapeError("conv2d: kernel " + to_string(w.shape()) + " larger than padded input " +
                     to_string(x.shape()));
  }
  if (bias && (bias->rank() != 1 || bias->dim(0) != cout)) {
    throw DimensionError("conv2d bias " + to_string(bias->shape()) + " does not match Cout " +
                         std::to_string(cout));
  }
  const int s = args.stride, p = args.padding;
  const int64_t ho = conv_output_extent(h, kh, s, p);
  const int64_t wo = conv_output_extent(wd, kw, s, p);
  const int64_t cin_g = cin / g, cout_g = cout / g;
  BasicTensor<T> out({n, cout, ho, wo});
  auto od = out.data();
  auto xd = x.data();
  auto wdat = w.data();
  const bool pointwise = kh == 1 && kw == 1 && s == 1 && p == 0;

  for (int64_t b = 0; b < n; ++b) {
    for (int64_t co = 0; co < cout; ++co) {
      T* oplane = od.data() + (b * cout + co) * ho * wo;
      if (bias) std::fill(oplane, oplane + ho * wo, (*bias)[co]);
      const int64_t grp = co / cout_g;
      for (int64_t cl = 0; cl < cin_g; ++cl) {
        const int64_t ci = grp * cin_g + cl;
        const T* iplane = xd.data() + (b * cin + ci) * h * wd;
        const T* wk = wdat.data() + (co * cin_g + cl) * kh * kw;
        if (pointwise) {
          const T wv = wk[0];
          for (int64_t q = 0; q < ho * wo; ++q) oplane[q] += wv * iplane[q];
          continue;
        }
        for (int64_t ky = 0; ky < kh; ++ky) {
          for (int64_t kx = 0; kx < kw; ++kx) {
            const T wv = wk[ky * kw + kx];
            // Valid output columns: 0 <= ox*s - p + kx < W.
            int64_t ox_lo = 0;
            while (ox_lo < wo && ox_lo * s - p + kx < 0) ++ox_lo;
            int64_t ox_hi = wo;
            while (ox_hi > ox_lo && (ox_hi - 1) * s - p + kx >= wd) --ox_hi;
            for (int64_t oy = 0; oy < ho; ++oy) {
              const int64_t iy = oy * s - p + ky;
              if (iy < 0 || iy >= h) continue;
              const T* irow = iplane + iy * wd;
              T* orow = oplane + oy * wo;
              if (s == 1) {
                const T* src = irow - p + kx;
                for (int64_t ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * src[ox];
              } else {
                for (int64_t ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * irow[ox * s - p + kx];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x, int axis) {
  axis = normalize_axis(axis, x.rank(), "softmax");
  const AxisSplit sp = split_at(x.shape(), axis);
  BasicTensor<T> out(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (int64_t o = 0; o < sp.outer; ++o) {
    for (int64_t i = 0; i < sp.inner; ++i) {
      const int64_t base = o * sp.len * sp.inner + i;
      T mx = xd[base];
      for (int64_t k = 1; k < sp.len; ++k) mx = std::max(mx, xd[base + k * sp.inner]);
      T sum = 0;
      for (int64_t k = 0; k < sp.len; ++k) {
        const T e = std::exp(xd[base + k * sp.inner] - mx);
        od[base + k * sp.inner] = e;
        sum += e;
      }
      for (int64_t k = 0; k < sp.len; ++k) od[base + k * sp.inner] /= sum;
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (size_t i = 0; i < od.size(); ++i) {
    const T v = xd[i];
    // Evaluate on the side where exp() cannot overflow.
    if (v >= 0) {
      od[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      od[i] = e / (T(1) + e);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = xd[i] > T(0) ? xd[i] : T(0);
  return out;
}

template <typename T>
BasicTensor<T> layernorm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                         const BasicTensor<T>& beta, double eps) {
  const int64_t c = x.dim(-1);
  if (gamma.size() != c || beta.size() != c) {
    throw DimensionError("layernorm affine " + to_string(gamma.shape()) + "/" +
                         to_string(beta.shape()) + " does not match input " + to_string(x.shape()));
  }
  BasicTensor<T> out(x.shape());
  auto xd = x.data();
  auto od = out.data();
  const int64_t rows = x.size() / c;
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = xd.data() + r * c;
    T* orow = od.data() + r * c;
    T mean = 0;
    for (int64_t k = 0; k < c; ++k) mean += xr[k];
    mean /= static_cast<T>(c);
    T var = 0;
    for (int64_t k = 0; k < c; ++k) var += (xr[k] - mean) * (xr[k] - mean);
    var /= static_cast<T>(c);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
    for (int64_t k = 0; k < c; ++k) orow[k] = (xr[k] - mean) * inv * gamma[k] + beta[k];
  }
  return out;
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  require_rank(x.shape(), 4, "global_avg_pool");
  const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  BasicTensor<T> out({n, c, 1, 1});
  auto xd = x.data();
  for (int64_t i = 0; i < n * c; ++i) {
    T sum = 0;
    for (int64_t k = 0; k < hw; ++k) sum += xd[i * hw + k];
    out[i] = sum / static_cast<T>(hw);
  }
  return out;
}

namespace detail {

std::vector<LinearTap> bilinear_taps(int64_t in, int64_t out) {
  std::vector<LinearTap> taps(static_cast<size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (int64_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    auto lo = static_cast<int64_t>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    const int64_t hi = lo < in - 1 ? lo + 1 : lo;
    taps[o] = LinearTap{lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace detail

template <typename T>
BasicTensor<T> bilinear_resize(const BasicTensor<T>& x, int64_t out_h, int64_t out_w) {
  require_rank(x.shape(), 4, "bilinear_resize");
  if (out_h < 1 || out_w < 1) throw ShapeError("bilinear_resize: target size must be positive");
  const int64_t nc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto ty = detail::bilinear_taps(h, out_h);
  const auto tx = detail::bilinear_taps(w, out_w);
  BasicTensor<T> out({x.dim(0), x.dim(1), out_h, out_w});
  auto xd = x.data();
  auto od = out.data();
  for (int64_t p = 0; p < nc; ++p) {
    const T* ip = xd.data() + p * h * w;
    T* op = od.data() + p * out_h * out_w;
    for (int64_t oy = 0; oy < out_h; ++oy) {
      const auto& a = ty[oy];
      const T fy = static_cast<T>(a.frac);
      for (int64_t ox = 0; ox < out_w; ++ox) {
        const auto& b = tx[ox];
        const T fx = static_cast<T>(b.frac);
        // std::lerp keeps constants exact and results inside the endpoint range.
        const T top = std::lerp(ip[a.lo * w + b.lo], ip[a.lo * w + b.hi], fx);
        const T bot = std::lerp(ip[a.hi * w + b.lo], ip[a.hi * w + b.hi], fx);
        op[oy * out_w + ox] = std::lerp(top, bot, fy);
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> channel_shuffle(const BasicTensor<T>& x, int64_t groups) {
  require_rank(x.shape(), 4, "channel_shuffle");
  const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (groups < 1 || c % groups != 0) {
    throw ConfigError("channel_shuffle: " + std::to_string(c) + " channels not divisible by " +
                      std::to_string(groups) + " groups");
  }
  const int64_t per = c / groups;
  BasicTensor<T> out(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (int64_t b = 0; b < n; ++b) {
    for (int64_t i = 0; i < groups; ++i) {
      for (int64_t j = 0; j < per; ++j) {
        const T* src = xd.data() + (b * c + i * per + j) * hw;
        std::copy(src, src + hw, od.data() + (b * c + j * groups + i) * hw);
      }
    }
  }
  return out;
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> channel_split(const BasicTensor<T>& x) {
  require_rank(x.shape(), 4, "channel_split");
  const int64_t c = x.dim(1);
  if (c % 2 != 0) throw ConfigError("channel_split: odd channel count " + std::to_string(c));
  return {slice(x, 1, 0, c / 2), slice(x, 1, c / 2, c / 2)};
}

template <typename T>
BasicTensor<T> concat(std::span<const BasicTensor<T>> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  axis = normalize_axis(axis, static_cast<int>(first.size()), "concat");
  Shape shape = first;
  shape[axis] = 0;
  for (const auto& t : parts) {
    bool ok = t.rank() == static_cast<int>(first.size());
    for (int i = 0; ok && i < t.rank(); ++i) {
      if (i != axis && t.shape()[i] != first[i]) ok = false;
    }
    if (!ok) {
      throw DimensionError("concat: incompatible shapes " + to_string(first) + " and " +
                           to_string(t.shape()));
    }
    shape[axis] += t.shape()[axis];
  }
  BasicTensor<T> out(shape);
  const AxisSplit sp = split_at(shape, axis);
  auto od = out.data();
  int64_t offset = 0;
  for (const auto& t : parts) {
    const int64_t chunk = t.shape()[axis] * sp.inner;
    auto td = t.data();
    for (int64_t o = 0; o < sp.outer; ++o) {
      std::copy(td.begin() + o * chunk, td.begin() + (o + 1) * chunk,
                od.begin() + o * sp.len * sp.inner + offset);
    }
    offset += chunk;
  }
  return out;
}

template <typename T>
BasicTensor<T> concat(const BasicTensor<T>& a, const BasicTensor<T>& b, int axis) {
  const std::array<BasicTensor<T>, 2> parts{a, b};
  return concat(std::span<const BasicTensor<T>>(parts), axis);
}

template <typename T>
BasicTensor<T> slice(const BasicTensor<T>& x, int axis, int64_t begin, int64_t length) {
  axis = normalize_axis(axis, x.rank(), "slice");
  if (begin < 0 || length < 1 || begin + length > x.shape()[axis]) {
    throw ShapeError("slice [" + std::to_string(begin) + ", +" + std::to_string(length) +
                     ") out of range on axis " + std::to_string(axis) + " of " +
                     to_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[axis] = length;
  BasicTensor<T> out(shape);
  const AxisSplit sp = split_at(x.shape(), axis);
  auto xd = x.data();
  auto od = out.data();
  const int64_t chunk = length * sp.inner;
  for (int64_t o = 0; o < sp.outer; ++o) {
    auto src = xd.begin() + o * sp.len * sp.inner + begin * sp.inner;
    std::copy(src, src + chunk, od.begin() + o * chunk);
  }
  return out;
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return broadcast_binary(a, b, [](T u, T v) { return u + v; });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return broadcast_binary(a, b, [](T u, T v) { return u * v; });
}

template <typename T>
BasicTensor<T> batchnorm_inference(const BasicTensor<T>& x, const BasicTensor<T>& mean,
                                   const BasicTensor<T>& var, const BasicTensor<T>& gamma,
                                   const BasicTensor<T>& beta, double eps) {
  if (x.rank() < 2) throw ShapeError("batchnorm expects N x C [x H x W], got " + to_string(x.shape()));
  const int64_t n = x.dim(0), c = x.dim(1);
  for (const auto* t : {&mean, &var, &gamma, &beta}) {
    if (t->size() != c) {
      throw DimensionError("batchnorm statistics " + to_string(t->shape()) +
                           " do not match channels of " + to_string(x.shape()));
    }
  }
  const int64_t inner = x.size() / (n * c);
  BasicTensor<T> out(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (int64_t b = 0; b < n; ++b) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T inv = T(1) / std::sqrt(var[ch] + static_cast<T>(eps));
      const T g = gamma[ch], be = beta[ch], m = mean[ch];
      const int64_t base = (b * c + ch) * inner;
      for (int64_t k = 0; k < inner; ++k) od[base + k] = (xd[base + k] - m) * inv * g + be;
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape) {
  return x.reshaped(std::move(shape));
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& x) {
  require_rank(x.shape(), 2, "transpose");
  const int64_t r = x.dim(0), c = x.dim(1);
  BasicTensor<T> out({c, r});
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out.at(j, i) = x.at(i, j);
  return out;
}

template <typename T>
BasicTensor<T> sum_to_shape(const BasicTensor<T>& g, const Shape& shape) {
  if (g.shape() == shape) return g;
  if (shape.size() != g.shape().size()) {
    throw DimensionError("sum_to_shape: rank mismatch " + to_string(g.shape()) + " -> " +
                         to_string(shape));
  }
  BasicTensor<T> out(shape);
  const auto gs = pad4(g.shape());
  const auto ts = pad4(shape);
  std::array<int64_t, 4> st{};
  int64_t s = 1;
  for (int i = 3; i >= 0; --i) {
    st[i] = ts[i] == 1 ? 0 : s;
    s *= ts[i];
  }
  auto gd = g.data();
  auto od = out.data();
  int64_t k = 0;
  for (int64_t i0 = 0; i0 < gs[0]; ++i0)
    for (int64_t i1 = 0; i1 < gs[1]; ++i1)
      for (int64_t i2 = 0; i2 < gs[2]; ++i2)
        for (int64_t i3 = 0; i3 < gs[3]; ++i3, ++k)
          od[i0 * st[0] + i1 * st[1] + i2 * st[2] + i3 * st[3]] += gd[k];
  return out;
}

#define DPNET_INSTANTIATE_OPS(T)                                                                   \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                     \
                                 const std::type_identity_t<BasicTensor<T>>*, const Conv2dArgs&);                        \
  template BasicTensor<T> softmax(const BasicTensor<T>&, int);                                     \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                          \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                             \
  template BasicTensor<T> layernorm(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                    const BasicTensor<T>&, double);                                \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);                                  \
  template BasicTensor<T> bilinear_resize(const BasicTensor<T>&, int64_t, int64_t);                \
  template BasicTensor<T> channel_shuffle(const BasicTensor<T>&, int64_t);                         \
  template std::pair<BasicTensor<T>, BasicTensor<T>> channel_split(const BasicTensor<T>&);         \
  template BasicTensor<T> concat(std::span<const BasicTensor<T>>, int);                            \
  template BasicTensor<T> concat(const BasicTensor<T>&, const BasicTensor<T>&, int);               \
  template BasicTensor<T> slice(const BasicTensor<T>&, int, int64_t, int64_t);                     \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> batchnorm_inference(const BasicTensor<T>&, const BasicTensor<T>&,        \
                                              const BasicTensor<T>&, const BasicTensor<T>&,        \
                                              const BasicTensor<T>&, double);                      \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                   \
  template BasicTensor<T> transpose(const BasicTensor<T>&);                                        \
  template BasicTensor<T> sum_to_shape(const BasicTensor<T>&, const Shape&);

DPNET_INSTANTIATE_OPS(float)
DPNET_INSTANTIATE_OPS(double)

#undef DPNET_INSTANTIATE_OPS

}  // namespace dpnet
