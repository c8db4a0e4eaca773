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

#include "dpnet/autodiff.hpp"

#include <cmath>
#include <string>

#include "dpnet/errors.hpp"

namespace dpnet::ad {

const TensorD& Var::value() const {
  if (!tape_) throw Error("ad::Var is not attached to a tape");
  return tape_->value(id_);
}

TensorD Var::grad() const {
  if (!tape_) throw Error("ad::Var is not attached to a tape");
  return tape_->grad(id_);
}

Var Tape::leaf(TensorD value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(TensorD value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(TensorD value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(TensorD value, std::span<const Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    check_owned(v);
    needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}});
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(const Var& v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw Error("ad::Var used with a tape that did not create it");
  }
}

void Tape::backward(const Var& output, const TensorD& seed) {
  check_owned(output);
  if (seed.shape() != output.shape()) {
    throw DimensionError("backward seed " + to_string(seed.shape()) + " does not match output " +
                         to_string(output.shape()));
  }
  for (auto& n : nodes_) n.grad = TensorD{};
  sweep_.clear();
  accumulate(output, seed);
  for (size_t id = output.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.empty()) continue;
    sweep_.push_back(id);
    // Copy: the closure may accumulate into nodes that alias this storage.
    const TensorD g = n.grad;
    n.backward(*this, g);
  }
}

void Tape::accumulate(const Var& v, const TensorD& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (g.shape() != n.value.shape()) {
    throw DimensionError("gradient " + to_string(g.shape()) + " does not match node " +
                         to_string(n.value.shape()));
  }
  if (n.grad.empty()) {
    n.grad = g;
    return;
  }
  auto dst = n.grad.data();
  auto src = g.data();
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

TensorD Tape::grad(size_t id) const {
  const Node& n = nodes_[id];
  return n.grad.empty() ? TensorD(n.value.shape(), 0.0) : n.grad;
}

void Tape::record_kinks(std::span<const double> pre_activation) {
  for (double v : pre_activation) kinks_.push_back(v > 0.0 ? 1 : 0);
}

namespace {

Tape& tape_of(const Var& v) {
  if (!v.tape()) throw Error("ad::Var is not attached to a tape");
  return *v.tape();
}

TensorD conv2d_grad_input(const TensorD& g, const TensorD& w, const Shape& xshape,
                          const Conv2dArgs& a) {
  TensorD dx(xshape, 0.0);
  const int64_t n = xshape[0], cin = xshape[1], h = xshape[2], wd = xshape[3];
  const int64_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int64_t ho = g.dim(2), wo = g.dim(3);
  const int64_t cin_g = cin / a.groups, cout_g = cout / a.groups;
  for (int64_t b = 0; b < n; ++b)
    for (int64_t co = 0; co < cout; ++co) {
      const int64_t grp = co / cout_g;
      for (int64_t cl = 0; cl < cin_g; ++cl) {
        const int64_t ci = grp * cin_g + cl;
        for (int64_t ky = 0; ky < kh; ++ky)
          for (int64_t kx = 0; kx < kw; ++kx) {
            const double wv = w.at(co, cl, ky, kx);
            for (int64_t oy = 0; oy < ho; ++oy) {
              const int64_t iy = oy * a.stride - a.padding + ky;
              if (iy < 0 || iy >= h) continue;
              for (int64_t ox = 0; ox < wo; ++ox) {
                const int64_t ix = ox * a.stride - a.padding + kx;
                if (ix < 0 || ix >= wd) continue;
                dx.at(b, ci, iy, ix) += wv * g.at(b, co, oy, ox);
              }
            }
          }
      }
    }
  return dx;
}

TensorD conv2d_grad_weight(const TensorD& g, const TensorD& x, const Shape& wshape,
                           const Conv2dArgs& a) {
  TensorD dw(wshape, 0.0);
  const int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int64_t cout = wshape[0], kh = wshape[2], kw = wshape[3];
  const int64_t ho = g.dim(2), wo = g.dim(3);
  const int64_t cin_g = cin / a.groups, cout_g = cout / a.groups;
  for (int64_t b = 0; b < n; ++b)
    for (int64_t co = 0; co < cout; ++co) {
      const int64_t grp = co / cout_g;
      for (int64_t cl = 0; cl < cin_g; ++cl) {
        const int64_t ci = grp * cin_g + cl;
        for (int64_t ky = 0; ky < kh; ++ky)
          for (int64_t kx = 0; kx < kw; ++kx) {
            double acc = 0;
            for (int64_t oy = 0; oy < ho; ++oy) {
              const int64_t iy = oy * a.stride - a.padding + ky;
              if (iy < 0 || iy >= h) continue;
              for (int64_t ox = 0; ox < wo; ++ox) {
                const int64_t ix = ox * a.stride - a.padding + kx;
                if (ix < 0 || ix >= wd) continue;
                acc += x.at(b, ci, iy, ix) * g.at(b, co, oy, ox);
              }
            }
            dw.at(co, cl, ky, kx) += acc;
          }
      }
    }
  return dw;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  return t.record(dpnet::matmul(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const TensorD& g) {
    tp.accumulate(a, dpnet::matmul(g, dpnet::transpose(b.value())));
    tp.accumulate(b, dpnet::matmul(dpnet::transpose(a.value()), g));
  });
}

Var conv2d(const Var& x, const Var& w, const Var* bias, const Conv2dArgs& args) {
  Tape& t = tape_of(x);
  TensorD out = dpnet::conv2d(x.value(), w.value(), bias ? &bias->value() : nullptr, args);
  std::vector<Var> inputs{x, w};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias != nullptr;
  const Var b = has_bias ? *bias : Var{};
  return t.record(std::move(out), std::span<const Var>(inputs),
                  [x, w, b, has_bias, args](Tape& tp, const TensorD& g) {
                    if (tp.requires_grad(x)) {
                      tp.accumulate(x, conv2d_grad_input(g, w.value(), x.shape(), args));
                    }
                    if (tp.requires_grad(w)) {
                      tp.accumulate(w, conv2d_grad_weight(g, x.value(), w.shape(), args));
                    }
                    if (has_bias && tp.requires_grad(b)) {
                      const int64_t n = g.dim(0), c = g.dim(1), hw = g.dim(2) * g.dim(3);
                      TensorD db({c}, 0.0);
                      for (int64_t i = 0; i < n; ++i)
                        for (int64_t ch = 0; ch < c; ++ch)
                          for (int64_t k = 0; k < hw; ++k) db[ch] += g[(i * c + ch) * hw + k];
                      tp.accumulate(b, db);
                    }
                  });
}

Var softmax(const Var& x, int axis) {
  Tape& t = tape_of(x);
  TensorD y = dpnet::softmax(x.value(), axis);
  if (axis < 0) axis += x.value().rank();
  TensorD yc = y;
  return t.record(std::move(y), {x}, [x, axis, yc](Tape& tp, const TensorD& g) {
    const Shape& s = yc.shape();
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const int64_t len = s[axis];
    TensorD dx(s, 0.0);
    for (int64_t o = 0; o < outer; ++o)
      for (int64_t i = 0; i < inner; ++i) {
        const int64_t base = o * len * inner + i;
        double dot = 0;
        for (int64_t k = 0; k < len; ++k) dot += g[base + k * inner] * yc[base + k * inner];
        for (int64_t k = 0; k < len; ++k) {
          dx[base + k * inner] = yc[base + k * inner] * (g[base + k * inner] - dot);
        }
      }
    tp.accumulate(x, dx);
  });
}

Var sigmoid(const Var& x) {
  Tape& t = tape_of(x);
  TensorD y = dpnet::sigmoid(x.value());
  TensorD yc = y;
  return t.record(std::move(y), {x}, [x, yc](Tape& tp, const TensorD& g) {
    TensorD dx(g.shape());
    for (int64_t i = 0; i < g.size(); ++i) dx[i] = g[i] * yc[i] * (1.0 - yc[i]);
    tp.accumulate(x, dx);
  });
}

Var relu(const Var& x) {
  Tape& t = tape_of(x);
  t.record_kinks(x.value().data());
  return t.record(dpnet::relu(x.value()), {x}, [x](Tape& tp, const TensorD& g) {
    const TensorD& xv = x.value();
    TensorD dx(g.shape());
    for (int64_t i = 0; i < g.size(); ++i) dx[i] = xv[i] > 0.0 ? g[i] : 0.0;
    tp.accumulate(x, dx);
  });
}

Var layernorm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  Tape& t = tape_of(x);
  TensorD y = dpnet::layernorm(x.value(), gamma.value(), beta.value(), eps);
  return t.record(std::move(y), {x, gamma, beta}, [x, gamma, beta, eps](Tape& tp, const TensorD& g) {
    const TensorD& xv = x.value();
    const TensorD& gm = gamma.value();
    const int64_t c = xv.dim(-1);
    const int64_t rows = xv.size() / c;
    TensorD dx(xv.shape(), 0.0), dg(gm.shape(), 0.0), db(gm.shape(), 0.0);
    std::vector<double> xhat(static_cast<size_t>(c)), dxhat(static_cast<size_t>(c));
    for (int64_t r = 0; r < rows; ++r) {
      const double* xr = xv.data().data() + r * c;
      const double* gr = g.data().data() + r * c;
      double mean = 0;
      for (int64_t k = 0; k < c; ++k) mean += xr[k];
      mean /= static_cast<double>(c);
      double var = 0;
      for (int64_t k = 0; k < c; ++k) var += (xr[k] - mean) * (xr[k] - mean);
      var /= static_cast<double>(c);
      const double inv = 1.0 / std::sqrt(var + eps);
      double m1 = 0, m2 = 0;
      for (int64_t k = 0; k < c; ++k) {
        xhat[k] = (xr[k] - mean) * inv;
        dxhat[k] = gr[k] * gm[k];
        dg[k] += gr[k] * xhat[k];
        db[k] += gr[k];
        m1 += dxhat[k];
        m2 += dxhat[k] * xhat[k];
      }
      m1 /= static_cast<double>(c);
      m2 /= static_cast<double>(c);
      for (int64_t k = 0; k < c; ++k) dx[r * c + k] = inv * (dxhat[k] - m1 - xhat[k] * m2);
    }
    tp.accumulate(x, dx);
    tp.accumulate(gamma, dg);
    tp.accumulate(beta, db);
  });
}

Var global_avg_pool(const Var& x) {
  Tape& t = tape_of(x);
  return t.record(dpnet::global_avg_pool(x.value()), {x}, [x](Tape& tp, const TensorD& g) {
    const Shape& s = x.shape();
    const int64_t hw = s[2] * s[3];
    TensorD dx(s);
    for (int64_t i = 0; i < s[0] * s[1]; ++i)
      for (int64_t k = 0; k < hw; ++k) dx[i * hw + k] = g[i] / static_cast<double>(hw);
    tp.accumulate(x, dx);
  });
}

Var bilinear_resize(const Var& x, int64_t out_h, int64_t out_w) {
  Tape& t = tape_of(x);
  return t.record(dpnet::bilinear_resize(x.value(), out_h, out_w), {x},
                  [x, out_h, out_w](Tape& tp, const TensorD& g) {
                    const Shape& s = x.shape();
                    const int64_t h = s[2], w = s[3];
                    const auto ty = dpnet::detail::bilinear_taps(h, out_h);
                    const auto tx = dpnet::detail::bilinear_taps(w, out_w);
                    TensorD dx(s, 0.0);
                    for (int64_t p = 0; p < s[0] * s[1]; ++p) {
                      double* d = dx.data().data() + p * h * w;
                      const double* gp = g.data().data() + p * out_h * out_w;
                      for (int64_t oy = 0; oy < out_h; ++oy)
                        for (int64_t ox = 0; ox < out_w; ++ox) {
                          const double gv = gp[oy * out_w + ox];
                          const auto& a = ty[oy];
                          const auto& b = tx[ox];
                          d[a.lo * w + b.lo] += gv * (1 - a.frac) * (1 - b.frac);
                          d[a.lo * w + b.hi] += gv * (1 - a.frac) * b.frac;
                          d[a.hi * w + b.lo] += gv * a.frac * (1 - b.frac);
                          d[a.hi * w + b.hi] += gv * a.frac * b.frac;
                        }
                    }
                    tp.accumulate(x, dx);
                  });
}

Var channel_shuffle(const Var& x, int64_t groups) {
  Tape& t = tape_of(x);
  return t.record(dpnet::channel_shuffle(x.value(), groups), {x},
                  [x, groups](Tape& tp, const TensorD& g) {
                    tp.accumulate(x, dpnet::channel_shuffle(g, x.dim(1) / groups));
                  });
}

std::pair<Var, Var> channel_split(const Var& x) {
  const int64_t c = x.dim(1);
  if (c % 2 != 0) throw ConfigError("channel_split: odd channel count " + std::to_string(c));
  return {slice(x, 1, 0, c / 2), slice(x, 1, c / 2, c / 2)};
}

Var slice(const Var& x, int axis, int64_t begin, int64_t length) {
  Tape& t = tape_of(x);
  TensorD y = dpnet::slice(x.value(), axis, begin, length);
  if (axis < 0) axis += x.value().rank();
  return t.record(std::move(y), {x}, [x, axis, begin, length](Tape& tp, const TensorD& g) {
    const Shape& s = x.shape();
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    TensorD dx(s, 0.0);
    const int64_t chunk = length * inner;
    for (int64_t o = 0; o < outer; ++o)
      for (int64_t k = 0; k < chunk; ++k) dx[o * s[axis] * inner + begin * inner + k] = g[o * chunk + k];
    tp.accumulate(x, dx);
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Tape& t = tape_of(parts[0]);
  std::vector<TensorD> values;
  values.reserve(parts.size());
  for (const Var& p : parts) values.push_back(p.value());
  TensorD y = dpnet::concat(std::span<const TensorD>(values), axis);
  if (axis < 0) axis += y.rank();
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(y), parts, [inputs, axis](Tape& tp, const TensorD& g) {
    int64_t offset = 0;
    for (const Var& p : inputs) {
      const int64_t len = p.shape()[axis];
      if (tp.requires_grad(p)) tp.accumulate(p, dpnet::slice(g, axis, offset, len));
      offset += len;
    }
  });
}

Var concat(const Var& a, const Var& b, int axis) {
  const Var parts[2] = {a, b};
  return concat(std::span<const Var>(parts, 2), axis);
}

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  return t.record(dpnet::add(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const TensorD& g) {
    tp.accumulate(a, dpnet::sum_to_shape(g, a.shape()));
    tp.accumulate(b, dpnet::sum_to_shape(g, b.shape()));
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  return t.record(dpnet::mul(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const TensorD& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, dpnet::sum_to_shape(dpnet::mul(g, b.value()), a.shape()));
    if (tp.requires_grad(b)) tp.accumulate(b, dpnet::sum_to_shape(dpnet::mul(g, a.value()), b.shape()));
  });
}

Var batchnorm_inference(const Var& x, const Var& mean, const Var& var, const Var& gamma,
                        const Var& beta, double eps) {
  Tape& t = tape_of(x);
  TensorD y = dpnet::batchnorm_inference(x.value(), mean.value(), var.value(), gamma.value(),
                                         beta.value(), eps);
  return t.record(std::move(y), {x, mean, var, gamma, beta},
                  [x, mean, var, gamma, beta, eps](Tape& tp, const TensorD& g) {
                    const TensorD& xv = x.value();
                    const int64_t n = xv.dim(0), c = xv.dim(1);
                    const int64_t inner = xv.size() / (n * c);
                    TensorD dx(xv.shape());
                    TensorD dm({c}, 0.0), dv({c}, 0.0), dg({c}, 0.0), db({c}, 0.0);
                    for (int64_t ch = 0; ch < c; ++ch) {
                      const double inv = 1.0 / std::sqrt(var.value()[ch] + eps);
                      const double gm = gamma.value()[ch], m = mean.value()[ch];
                      for (int64_t b = 0; b < n; ++b)
                        for (int64_t k = 0; k < inner; ++k) {
                          const int64_t i = (b * c + ch) * inner + k;
                          const double centered = xv[i] - m;
                          dx[i] = g[i] * gm * inv;
                          dm[ch] -= g[i] * gm * inv;
                          dv[ch] += g[i] * gm * centered * -0.5 * inv * inv * inv;
                          dg[ch] += g[i] * centered * inv;
                          db[ch] += g[i];
                        }
                    }
                    tp.accumulate(x, dx);
                    // Statistics may be stored with a different rank than {C}.
                    tp.accumulate(mean, dm.reshaped(mean.shape()));
                    tp.accumulate(var, dv.reshaped(var.shape()));
                    tp.accumulate(gamma, dg.reshaped(gamma.shape()));
                    tp.accumulate(beta, db.reshaped(beta.shape()));
                  });
}

Var reshape(const Var& x, Shape shape) {
  Tape& t = tape_of(x);
  return t.record(x.value().reshaped(std::move(shape)), {x}, [x](Tape& tp, const TensorD& g) {
    tp.accumulate(x, g.reshaped(x.shape()));
  });
}

Var transpose(const Var& x) {
  Tape& t = tape_of(x);
  return t.record(dpnet::transpose(x.value()), {x},
                  [x](Tape& tp, const TensorD& g) { tp.accumulate(x, dpnet::transpose(g)); });
}

}  // namespace dpnet::ad
