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

#include "dpnet/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "dpnet/errors.hpp"

namespace dpnet {

namespace {

constexpr double kAspectScale = 4.0 / (std::numbers::pi * std::numbers::pi);

double intersection(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return iw > 0 && ih > 0 ? iw * ih : 0.0;
}

double aspect_gap(const Box& pred, const Box& gt) {
  return std::atan2(gt.width(), gt.height()) - std::atan2(pred.width(), pred.height());
}

double aspect_term(const Box& pred, const Box& gt) {
  const double d = aspect_gap(pred, gt);
  return kAspectScale * d * d;
}

struct Geometry {
  double rho2, c2;
};

Geometry centre_geometry(const Box& p, const Box& g) {
  const double dx = ((p.x1 - g.x1) + (p.x2 - g.x2)) / 2, dy = ((p.y1 - g.y1) + (p.y2 - g.y2)) / 2;
  const double cw = std::max(p.x2, g.x2) - std::min(p.x1, g.x1);
  const double ch = std::max(p.y2, g.y2) - std::min(p.y1, g.y1);
  return {dx * dx + dy * dy, cw * cw + ch * ch};
}

double sigmoid(double v) {
  return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

}  // namespace

double iou(const Box& a, const Box& b) {
  const double inter = intersection(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double ciou_alpha(const Box& pred, const Box& gt) {
  const double v = aspect_term(pred, gt);
  const double denom = (1.0 - iou(pred, gt)) + v;
  return denom > 0 ? v / denom : 0.0;
}

double ciou_loss_with_alpha(const Box& pred, const Box& gt, double alpha) {
  const Geometry g = centre_geometry(pred, gt);
  const double dist = g.c2 > 0 ? g.rho2 / g.c2 : 0.0;
  return 1.0 - iou(pred, gt) + dist + alpha * aspect_term(pred, gt);
}

double ciou_loss(const Box& pred, const Box& gt) {
  return ciou_loss_with_alpha(pred, gt, ciou_alpha(pred, gt));
}

std::array<double, 4> ciou_gradient(const Box& p, const Box& g) {
  std::array<double, 4> grad{};  // x1, y1, x2, y2

  // -IoU
  const double iw = std::min(p.x2, g.x2) - std::max(p.x1, g.x1);
  const double ih = std::min(p.y2, g.y2) - std::max(p.y1, g.y1);
  const bool overlap = iw > 0 && ih > 0;
  const double inter = overlap ? iw * ih : 0.0;
  const double uni = p.area() + g.area() - inter;
  if (uni > 0) {
    std::array<double, 4> d_inter{};
    if (overlap) {
      d_inter[0] = p.x1 > g.x1 ? -ih : 0.0;
      d_inter[2] = p.x2 < g.x2 ? ih : 0.0;
      d_inter[1] = p.y1 > g.y1 ? -iw : 0.0;
      d_inter[3] = p.y2 < g.y2 ? iw : 0.0;
    }
    const std::array<double, 4> d_area{-p.height(), -p.width(), p.height(), p.width()};
    for (int k = 0; k < 4; ++k) {
      const double d_uni = d_area[k] - d_inter[k];
      grad[k] -= (d_inter[k] * uni - inter * d_uni) / (uni * uni);
    }
  }

  // rho^2 / c^2
  const Geometry geo = centre_geometry(p, g);
  if (geo.c2 > 0) {
    const double dx = ((p.x1 - g.x1) + (p.x2 - g.x2)) / 2, dy = ((p.y1 - g.y1) + (p.y2 - g.y2)) / 2;
    const double cw = std::max(p.x2, g.x2) - std::min(p.x1, g.x1);
    const double ch = std::max(p.y2, g.y2) - std::min(p.y1, g.y1);
    const std::array<double, 4> d_rho{dx, dy, dx, dy};
    const std::array<double, 4> d_c{p.x1 < g.x1 ? -2 * cw : 0.0, p.y1 < g.y1 ? -2 * ch : 0.0,
                                    p.x2 > g.x2 ? 2 * cw : 0.0, p.y2 > g.y2 ? 2 * ch : 0.0};
    for (int k = 0; k < 4; ++k) {
      grad[k] += (d_rho[k] * geo.c2 - geo.rho2 * d_c[k]) / (geo.c2 * geo.c2);
    }
  }

  // alpha * v, alpha frozen
  const double alpha = ciou_alpha(p, g);
  const double w = p.width(), h = p.height(), r2 = w * w + h * h;
  if (alpha != 0 && r2 > 0) {
    const double scale = -2.0 * alpha * kAspectScale * aspect_gap(p, g);
    const double d_w = scale * h / r2, d_h = scale * -w / r2;
    grad[0] -= d_w;
    grad[2] += d_w;
    grad[1] -= d_h;
    grad[3] += d_h;
  }
  return grad;
}

std::vector<Detection> decode(std::span<const Tensor> cls, std::span<const Tensor> reg,
                              const DecodeOptions& options, int64_t n) {
  if (cls.size() != reg.size() || cls.size() > options.strides.size()) {
    throw DimensionError("decode: expected matching classification and regression levels");
  }
  std::vector<Detection> out;
  const double max_x = static_cast<double>(options.image_w), max_y = static_cast<double>(options.image_h);
  for (size_t l = 0; l < cls.size(); ++l) {
    const Tensor& c = cls[l];
    const Tensor& r = reg[l];
    if (c.rank() != 4 || r.rank() != 4 || r.dim(1) != 4 || c.dim(0) != r.dim(0) || c.dim(2) != r.dim(2) ||
        c.dim(3) != r.dim(3) || n < 0 || n >= c.dim(0)) {
      throw DimensionError("decode: level " + std::to_string(l) + " has classification " +
                           to_string(c.shape()) + " and regression " + to_string(r.shape()));
    }
    const int64_t k_count = c.dim(1), h = c.dim(2), w = c.dim(3);
    const double s = options.strides[l];
    for (int64_t i = 0; i < h; ++i) {
      for (int64_t j = 0; j < w; ++j) {
        int best = 0;
        float logit = c.at(n, 0, i, j);
        for (int64_t k = 1; k < k_count; ++k) {
          if (c.at(n, k, i, j) > logit) logit = c.at(n, k, i, j), best = static_cast<int>(k);
        }
        const double score = std::clamp(sigmoid(logit), std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
        if (score < options.score_threshold) continue;
        const double cx = (j + 0.5) * s, cy = (i + 0.5) * s;
        auto off = [&](int64_t ch) { return std::max(0.0, static_cast<double>(r.at(n, ch, i, j))) * s; };
        Box b{cx - off(0), cy - off(1), cx + off(2), cy + off(3)};
        b.x1 = std::clamp(b.x1, 0.0, max_x);
        b.x2 = std::clamp(b.x2, 0.0, max_x);
        b.y1 = std::clamp(b.y1, 0.0, max_y);
        b.y2 = std::clamp(b.y2, 0.0, max_y);
        out.push_back({b, best, score});
      }
    }
  }
  return out;
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold) {
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return dets[a].class_id < dets[b].class_id;
  });
  std::vector<Detection> kept;
  for (size_t idx : order) {
    const Detection& d = dets[idx];
    bool keep = true;
    for (const auto& k : kept) {
      if (k.class_id == d.class_id && iou(k.box, d.box) > iou_threshold) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(d);
  }
  return kept;
}

std::string to_json_line(const Detection& d) {
  const nlohmann::json j = {
      {"box", {d.box.x1, d.box.y1, d.box.x2, d.box.y2}}, {"class", d.class_id}, {"score", d.score}};
  return j.dump();
}

void write_json_lines(std::ostream& os, std::span<const Detection> dets) {
  for (const auto& d : dets) os << to_json_line(d) << '\n';
}

}  // namespace dpnet
