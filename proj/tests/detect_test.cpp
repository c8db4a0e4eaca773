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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "dpnet/detect.hpp"
#include "dpnet/errors.hpp"
#include "dpnet/gradcheck.hpp"
#include "dpnet/rng.hpp"
#include "detect_oracles.hpp"

namespace dpnet {
namespace {

using oracle::brute_force_nms;
using oracle::random_box;
using oracle::raster_iou;
using oracle::same_det;

TEST(Iou, Basics) {
  const Box a{0, 0, 4, 4}, b{2, 2, 6, 6}, far{10, 10, 12, 12};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, far), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, b), 4.0 / 28.0);
  EXPECT_DOUBLE_EQ(iou(Box{1, 1, 1, 1}, Box{1, 1, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, Box{4, 0, 8, 4}), 0.0);  // touching edges
}

TEST(Iou, MatchesRasterizationAndIsSymmetric) {
  Lcg64 rng(42);
  for (int t = 0; t < 200; ++t) {
    const Box a = random_box(rng, 16, 1.0 / 16), b = random_box(rng, 16, 1.0 / 16);
    EXPECT_EQ(iou(a, b), iou(b, a));
    EXPECT_NEAR(iou(a, b), raster_iou(a, b, 16, 512), 1e-3);
  }
  for (int t = 0; t < 50; ++t) {
    const Box a = random_box(rng), b = random_box(rng);
    EXPECT_NEAR(iou(a, b), raster_iou(a, b, 16, 1024), 1e-2);
  }
}

// Independent evaluation from centre/size parameters.
double ciou_reference(const Box& p, const Box& g) {
  const double pcx = (p.x1 + p.x2) / 2, pcy = (p.y1 + p.y2) / 2, pw = p.x2 - p.x1, ph = p.y2 - p.y1;
  const double gcx = (g.x1 + g.x2) / 2, gcy = (g.y1 + g.y2) / 2, gw = g.x2 - g.x1, gh = g.y2 - g.y1;
  const double ix = std::max(0.0, std::min(pcx + pw / 2, gcx + gw / 2) - std::max(pcx - pw / 2, gcx - gw / 2));
  const double iy = std::max(0.0, std::min(pcy + ph / 2, gcy + gh / 2) - std::max(pcy - ph / 2, gcy - gh / 2));
  const double inter = ix * iy, uni = pw * ph + gw * gh - inter;
  const double u = uni > 0 ? inter / uni : 0.0;
  const double ex = std::max(pcx + pw / 2, gcx + gw / 2) - std::min(pcx - pw / 2, gcx - gw / 2);
  const double ey = std::max(pcy + ph / 2, gcy + gh / 2) - std::min(pcy - ph / 2, gcy - gh / 2);
  const double rho2 = (pcx - gcx) * (pcx - gcx) + (pcy - gcy) * (pcy - gcy);
  const double diff = std::atan(gw / gh) - (ph > 0 ? std::atan(pw / ph) : std::numbers::pi / 2);
  const double v = 4.0 / (std::numbers::pi * std::numbers::pi) * diff * diff;
  const double alpha = (1 - u) + v > 0 ? v / ((1 - u) + v) : 0.0;
  return 1 - u + rho2 / (ex * ex + ey * ey) + alpha * v;
}

TEST(Ciou, IdentityAndConcentric) {
  const Box g{2, 3, 10, 7};
  EXPECT_EQ(ciou_loss(g, g), 0.0);
  const Box inner{4, 4, 8, 6};  // same centre, same 2:1 aspect
  EXPECT_DOUBLE_EQ(ciou_loss(inner, g), 1.0 - iou(inner, g));
  EXPECT_DOUBLE_EQ(ciou_loss(inner, g), 1.0 - 8.0 / 32.0);
}

TEST(Ciou, MatchesReferenceFormula) {
  Lcg64 rng(7);
  for (int t = 0; t < 500; ++t) {
    Box p = random_box(rng), g = random_box(rng);
    if (g.width() < 0.1 || g.height() < 0.1) continue;
    const double l = ciou_loss(p, g);
    EXPECT_NEAR(l, ciou_reference(p, g), 1e-6);
    EXPECT_GE(l, 0.0);
  }
}

TEST(Ciou, ZeroOnlyForIdenticalBoxes) {
  Lcg64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const Box b = random_box(rng);
    if (b.width() <= 0 || b.height() <= 0) continue;
    EXPECT_EQ(ciou_loss(b, b), 0.0);
    Box moved = b;
    moved.x2 += 0.01;
    EXPECT_GT(ciou_loss(moved, b), 0.0);
  }
}

TEST(Ciou, DegeneratePredictionsStayFinite) {
  const Box g{0, 0, 4, 2};
  for (const Box& p : {Box{1, 1, 1, 3}, Box{1, 1, 3, 1}, Box{2, 2, 2, 2}, Box{20, 20, 20, 20}}) {
    EXPECT_TRUE(std::isfinite(ciou_loss(p, g)));
    for (double d : ciou_gradient(p, g)) EXPECT_TRUE(std::isfinite(d));
  }
}

class CiouGrad : public ::testing::TestWithParam<uint64_t> {};

TEST_P(CiouGrad, FrozenAlphaGradient) {
  Lcg64 rng(GetParam());
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const Box g = random_box(rng), p = random_box(rng);
    if (g.width() < 0.5 || g.height() < 0.5 || p.width() < 0.5 || p.height() < 0.5) continue;
    const double alpha = ciou_alpha(p, g);
    auto f = [&](std::span<const double> x) { return ciou_loss_with_alpha({x[0], x[1], x[2], x[3]}, g, alpha); };
    auto grad = [&](std::span<const double> x) {
      const auto d = ciou_gradient({x[0], x[1], x[2], x[3]}, g);
      return std::vector<double>(d.begin(), d.end());
    };
    const std::vector<double> x{p.x1, p.y1, p.x2, p.y2};
    const auto rep = grad_check(f, grad, x);
    EXPECT_TRUE(rep.passed) << rep.summary();
    ++checked;
  }
  EXPECT_GT(checked, 5);
}

INSTANTIATE_TEST_SUITE_P(Seeds, CiouGrad, ::testing::Values(1u, 2u, 3u));

TEST(Ciou, GradientCoversDisjointAndContained) {
  const Box g{0, 0, 4, 3};
  for (const Box& p : {Box{6, 5, 9, 11}, Box{1, 0.5, 2.5, 2}, Box{-1, -2, 7, 5}}) {
    const double alpha = ciou_alpha(p, g);
    auto f = [&](std::span<const double> x) { return ciou_loss_with_alpha({x[0], x[1], x[2], x[3]}, g, alpha); };
    auto grad = [&](std::span<const double> x) {
      const auto d = ciou_gradient({x[0], x[1], x[2], x[3]}, g);
      return std::vector<double>(d.begin(), d.end());
    };
    const std::vector<double> x{p.x1, p.y1, p.x2, p.y2};
    EXPECT_TRUE(grad_check(f, grad, x).passed);
  }
}

DecodeOptions opts320() {
  DecodeOptions o;
  o.image_w = o.image_h = 320;
  return o;
}

TEST(Decode, ColdLogitsGiveNothing) {
  std::vector<Tensor> cls{Tensor({1, 3, 4, 4}, -50.0f), Tensor({1, 3, 2, 2}, -50.0f)};
  std::vector<Tensor> reg{Tensor({1, 4, 4, 4}, 1.0f), Tensor({1, 4, 2, 2}, 1.0f)};
  EXPECT_TRUE(decode(cls, reg, opts320()).empty());
}

TEST(Decode, SingleHotCellIsClamped) {
  std::vector<Tensor> cls{Tensor({1, 2, 3, 3}, -50.0f)};
  std::vector<Tensor> reg{Tensor({1, 4, 3, 3}, 1.0f)};
  cls[0].at(0, 1, 0, 0) = 3.0f;
  const auto dets = decode(cls, reg, opts320());
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].box, (Box{0, 0, 12, 12}));
  EXPECT_EQ(dets[0].class_id, 1);
  EXPECT_NEAR(dets[0].score, 1.0 / (1.0 + std::exp(-3.0)), 1e-7);
}

TEST(Decode, StridesOffsetsAndCardinality) {
  Lcg64 rng(3);
  std::vector<Tensor> cls, reg;
  int64_t cells = 0;
  for (int64_t s : {8, 4, 2}) {
    cls.push_back(random_uniform<float>({2, 5, s, s}, rng, -4, 4));
    reg.push_back(random_uniform<float>({2, 4, s, s}, rng, -1, 3));
    cells += s * s;
  }
  DecodeOptions o;
  o.image_w = o.image_h = 64;
  o.score_threshold = 0.3;
  for (int64_t n = 0; n < 2; ++n) {
    const auto dets = decode(cls, reg, o, n);
    EXPECT_LE(static_cast<int64_t>(dets.size()), cells);
    for (const auto& d : dets) {
      EXPECT_GE(d.score, 0.3);
      EXPECT_LT(d.score, 1.0);
      EXPECT_GE(d.box.x1, 0.0);
      EXPECT_LE(d.box.x2, 64.0);
      EXPECT_LE(d.box.x1, d.box.x2);
      EXPECT_LE(d.box.y1, d.box.y2);
    }
  }
  // Level 2 (stride 32), cell (1, 0), negative left offset.
  std::vector<Tensor> c3{Tensor({1, 1, 1, 1}, -50.0f), Tensor({1, 1, 1, 1}, -50.0f), Tensor({1, 1, 2, 2}, -50.0f)};
  std::vector<Tensor> r3{Tensor({1, 4, 1, 1}), Tensor({1, 4, 1, 1}), Tensor({1, 4, 2, 2})};
  c3[2].at(0, 0, 1, 0) = 10.0f;
  r3[2].at(0, 0, 1, 0) = -2.0f;
  r3[2].at(0, 1, 1, 0) = 0.5f;
  r3[2].at(0, 2, 1, 0) = 0.25f;
  r3[2].at(0, 3, 1, 0) = 0.125f;
  o.image_w = o.image_h = 64;
  const auto one = decode(c3, r3, o);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].box, (Box{16, 48 - 16, 16 + 8, 48 + 4}));
  EXPECT_THROW(decode(std::span(c3).first(2), r3, o), DimensionError);
}

TEST(Nms, SmallCases) {
  const Detection a{{0, 0, 10, 10}, 0, 0.9}, b{{0, 0, 10, 10}, 0, 0.8};
  EXPECT_EQ(nms(std::vector{a}, 0.5).size(), 1u);
  const auto kept = nms(std::vector{b, a}, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].score, 0.9);
  Detection c = b;
  c.class_id = 1;
  EXPECT_EQ(nms(std::vector{a, c}, 0.5).size(), 2u);
  EXPECT_TRUE(nms(std::vector<Detection>{}, 0.5).empty());
}

TEST(Nms, TiesPreferLowerClassThenEarlierIndex) {
  const Detection a{{0, 0, 10, 10}, 2, 0.7}, b{{0, 0, 10, 10}, 1, 0.7}, c{{0, 0, 10, 10}, 1, 0.7};
  std::vector<Detection> in{a, b, c};
  in[2].box.x2 = 10.5;
  const auto kept = nms(in, 0.5);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_TRUE(same_det(kept[0], in[1]));
  EXPECT_TRUE(same_det(kept[1], in[0]));
}

TEST(Nms, MatchesBruteForceOnRandomBoxes) {
  for (uint64_t seed : {1u, 2u, 3u}) {
    Lcg64 rng(seed);
    std::vector<Detection> dets;
    for (int i = 0; i < 200; ++i) {
      // Coarse scores force ties.
      dets.push_back({random_box(rng, 100), static_cast<int>(rng.uniform(0, 3)),
                      std::round(rng.uniform(0.05, 1.0) * 20) / 20});
    }
    for (double thr : {0.3, 0.5, 0.6}) {
      const auto got = nms(dets, thr);
      const auto want = brute_force_nms(dets, thr);
      ASSERT_EQ(got.size(), want.size());
      for (size_t i = 0; i < got.size(); ++i) EXPECT_TRUE(same_det(got[i], want[i]));
      for (size_t i = 1; i < got.size(); ++i) EXPECT_GE(got[i - 1].score, got[i].score);
      for (size_t i = 0; i < got.size(); ++i) {
        for (size_t j = i + 1; j < got.size(); ++j) {
          if (got[i].class_id == got[j].class_id) EXPECT_LE(iou(got[i].box, got[j].box), thr);
        }
      }
    }
  }
}

TEST(Detections, JsonLines) {
  const Detection d{{1.5, 2, 3, 4.25}, 7, 0.5};
  const auto j = nlohmann::json::parse(to_json_line(d));
  EXPECT_EQ(j["class"].get<int>(), 7);
  EXPECT_EQ(j["score"].get<double>(), 0.5);
  EXPECT_EQ(j["box"].get<std::vector<double>>(), (std::vector<double>{1.5, 2, 3, 4.25}));
  std::ostringstream os;
  write_json_lines(os, std::vector{d, d});
  EXPECT_EQ(os.str(), to_json_line(d) + "\n" + to_json_line(d) + "\n");
  EXPECT_EQ(to_json_line(d).find('\n'), std::string::npos);
}

}  // namespace
}  // namespace dpnet
