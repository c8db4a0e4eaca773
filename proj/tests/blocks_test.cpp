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

#include <algorithm>
#include <cmath>
#include <vector>

#include "dpnet/blocks.hpp"
#include "dpnet/errors.hpp"
#include "dpnet/gradcheck.hpp"
#include "dpnet/rng.hpp"

namespace dpnet {
namespace {

template <class P>
P randomized(P p, uint64_t seed) {
  Lcg64 rng(seed);
  randomize_params(p, rng, -0.5, 0.5);
  return p;
}

TEST(Asb, ZeroWeightsStrideOneKeepsIdentityHalfAndZeros) {
  Lcg64 rng(1);
  const Tensor x = random_uniform<float>({1, 16, 5, 5}, rng);
  const Tensor y = asb_forward(x, make_asb<float>(16, 16, 1));
  ASSERT_EQ(y.shape(), x.shape());
  const int64_t hw = 25;
  for (int64_t c = 0; c < 16; ++c) {
    // shuffle with g = 2: output channel 2j reads identity channel j.
    for (int64_t i = 0; i < hw; ++i) {
      const float want = c % 2 == 0 ? x[(c / 2) * hw + i] : 0.0f;
      EXPECT_EQ(y[c * hw + i], want);
    }
  }
}

TEST(Asb, StrideOneIdentityHalfSurvivesShuffle) {
  Lcg64 rng(2);
  const Tensor x = random_uniform<float>({2, 32, 4, 4}, rng);
  const auto p = randomized(make_asb<float>(32, 32, 1), 3);
  const Tensor y = asb_forward(x, p);
  const int64_t hw = 16;
  for (int64_t n = 0; n < 2; ++n) {
    for (int64_t j = 0; j < 16; ++j) {
      for (int64_t i = 0; i < hw; ++i) {
        EXPECT_EQ(y[(n * 32 + 2 * j) * hw + i], x[(n * 32 + j) * hw + i]);
      }
    }
  }
}

TEST(Asb, Shapes) {
  Lcg64 rng(3);
  const Tensor x = random_uniform<float>({1, 64, 80, 80}, rng);
  const Tensor y = asb_forward(x, randomized(make_asb<float>(64, 128, 2), 4));
  EXPECT_EQ(y.shape(), (Shape{1, 128, 40, 40}));
  EXPECT_TRUE(y.all_finite());
  const Tensor z = asb_forward(y, randomized(make_asb<float>(128, 128, 1), 5));
  EXPECT_EQ(z.shape(), (Shape{1, 128, 40, 40}));
  const Tensor odd = random_uniform<float>({1, 16, 7, 9}, rng);
  EXPECT_EQ(asb_forward(odd, make_asb<float>(16, 32, 2)).shape(), (Shape{1, 32, 4, 5}));
}

TEST(Asb, Errors) {
  EXPECT_THROW(make_asb<float>(16, 32, 1), ConfigError);
  EXPECT_THROW(make_asb<float>(15, 15, 1), ConfigError);
  EXPECT_THROW(make_asb<float>(16, 16, 3), ConfigError);
  EXPECT_THROW(make_asb<float>(16, 24, 2), ConfigError);  // 12 not divisible by r = 8
  EXPECT_THROW(asb_forward(Tensor({1, 8, 4, 4}), make_asb<float>(16, 16, 1)), ConfigError);
}

TEST(Asb, StrideTwoVisitsIdentityBranch) {
  std::vector<std::string> names;
  make_asb<float>(16, 32, 2).visit("b", [&](const std::string& n, const auto&, ParamKind) {
    names.push_back(n);
  });
  EXPECT_EQ(names.front(), "b.id_dw.conv.weight");
  EXPECT_NE(std::find(names.begin(), names.end(), "b.lsam.w_ch_o"), names.end());
  std::vector<std::string> plain;
  make_asb<float>(16, 16, 1).visit("", [&](const std::string& n, const auto&, ParamKind) {
    plain.push_back(n);
  });
  EXPECT_EQ(plain.front(), "pw1.conv.weight");
}

TEST(Bifm, ZeroLanesAreIdentity) {
  Lcg64 rng(4);
  for (int ratio : {2, 4}) {
    const Tensor hr = random_uniform<float>({1, 16, 8, 8}, rng);
    const Tensor lr = random_uniform<float>({1, 32, 8 / ratio, 8 / ratio}, rng);
    const auto [a, b] = bifm_forward(hr, lr, make_bifm<float>(16, 32, ratio));
    EXPECT_EQ(a, hr);
    EXPECT_EQ(b, lr);
  }
}

TEST(Bifm, ConstantInputsHandEvaluation) {
  // Depthwise lanes pick the centre tap, pointwise lanes are all ones, so
  // hr' = a + k * Clr * b and lr' = b + k * Chr * a everywhere, k the
  // identity-BN scale 1 / sqrt(1 + eps).
  const double a = 0.25, b = -0.5, k = 1.0 / std::sqrt(1.0 + kBatchNormEps);
  for (int ratio : {2, 4}) {
    auto p = make_bifm<double>(4, 6, ratio);
    for (auto& c : p.down_dw) {
      for (int64_t ch = 0; ch < 4; ++ch) c.weight.at(ch, 0, 1, 1) = 1.0;
    }
    p.down_pw.conv.weight = TensorD(p.down_pw.conv.weight.shape(), 1.0);
    p.up_pw.conv.weight = TensorD(p.up_pw.conv.weight.shape(), 1.0);
    const TensorD hr({1, 4, 8, 8}, a);
    const TensorD lr({1, 6, 8 / ratio, 8 / ratio}, b);
    const auto [h, l] = bifm_forward(hr, lr, p);
    for (double v : h.data()) EXPECT_NEAR(v, a + k * 6 * b, 1e-14);
    for (double v : l.data()) EXPECT_NEAR(v, b + k * 4 * a, 1e-14);
  }
}

TEST(Bifm, ShapesAndErrors) {
  Lcg64 rng(5);
  const Tensor hr = random_uniform<float>({1, 128, 40, 40}, rng);
  const Tensor lr = random_uniform<float>({1, 256, 20, 20}, rng);
  const auto [a, b] = bifm_forward(hr, lr, randomized(make_bifm<float>(128, 256, 2), 6));
  EXPECT_EQ(a.shape(), hr.shape());
  EXPECT_EQ(b.shape(), lr.shape());
  EXPECT_THROW(bifm_forward(hr, lr, make_bifm<float>(128, 256, 4)), ConfigError);
  EXPECT_THROW(make_bifm<float>(128, 256, 3), ConfigError);
  EXPECT_THROW(bifm_forward(lr, hr, make_bifm<float>(128, 256, 2)), ConfigError);
}

TEST(Bottleneck, ZeroWeightsGiveZero) {
  Lcg64 rng(6);
  const Tensor x = random_uniform<float>({1, 16, 6, 6}, rng);
  const Tensor y = bottleneck_forward(x, make_bottleneck<float>(16));
  ASSERT_EQ(y.shape(), x.shape());
  for (float v : y.data()) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(make_bottleneck<float>(15), ConfigError);
  EXPECT_THROW(bottleneck_forward(Tensor({1, 8, 2, 2}), make_bottleneck<float>(16)), ConfigError);
}

TEST(ConvBlock, PreservesSpatialSize) {
  Lcg64 rng(7);
  const Tensor x = random_uniform<float>({1, 128, 40, 40}, rng);
  const Tensor y = convblock_forward(x, randomized(make_convblock<float>(128, 128), 8));
  EXPECT_EQ(y.shape(), x.shape());
  for (float v : y.data()) EXPECT_GE(v, 0.0f);
  EXPECT_EQ(convblock_forward(x, make_convblock<float>(128, 64)).shape(), (Shape{1, 64, 40, 40}));
  EXPECT_THROW(convblock_forward(x, make_convblock<float>(64, 64)), ConfigError);
}

TEST(Stem, QuarterResolution) {
  Lcg64 rng(8);
  const Tensor x = random_uniform<float>({1, 3, 320, 320}, rng, 0, 1);
  auto p = make_stem<float>(3, 32, 64);
  init_params(p, rng);
  const Tensor y = stem_forward(x, p);
  EXPECT_EQ(y.shape(), (Shape{1, 64, 80, 80}));
  EXPECT_TRUE(y.all_finite());
  EXPECT_THROW(stem_forward(Tensor({1, 1, 32, 32}), p), ConfigError);
}

class BlockGrad : public ::testing::TestWithParam<uint64_t> {};

template <class P, class Fn>
GradCheckReport check_block(const P& p, std::vector<TensorD> inputs, uint64_t seed, Fn&& fwd) {
  const size_t n_in = inputs.size();
  for (const auto& t : flatten_params<TensorD>(p)) inputs.push_back(t);
  auto f = [&](ad::Tape&, std::span<const ad::Var> v) {
    return fwd(v.first(n_in), bind_params<ad::Var>(p, v.subspan(n_in)));
  };
  return grad_check(f, inputs, {.seed = seed});
}

TEST_P(BlockGrad, AsbStrideOne) {
  const uint64_t seed = GetParam();
  Lcg64 rng(seed);
  const auto p = randomized(make_asb<double>(16, 16, 1), seed);
  const auto report = check_block(p, {random_uniform<double>({1, 16, 4, 4}, rng)}, seed,
                                  [](std::span<const ad::Var> x, const auto& pv) {
                                    return asb_forward(x[0], pv);
                                  });
  EXPECT_TRUE(report.passed) << report.summary();
  EXPECT_GT(report.checked, 600);
}

TEST_P(BlockGrad, AsbStrideTwo) {
  const uint64_t seed = GetParam();
  Lcg64 rng(seed);
  const auto p = randomized(make_asb<double>(8, 16, 2), seed);
  const auto report = check_block(p, {random_uniform<double>({1, 8, 4, 4}, rng)}, seed,
                                  [](std::span<const ad::Var> x, const auto& pv) {
                                    return asb_forward(x[0], pv);
                                  });
  EXPECT_TRUE(report.passed) << report.summary();
}

TEST_P(BlockGrad, BifmAndBottleneck) {
  const uint64_t seed = GetParam();
  Lcg64 rng(seed);
  const auto pb = randomized(make_bifm<double>(4, 8, 4), seed);
  auto report = check_block(
      pb, {random_uniform<double>({1, 4, 8, 8}, rng), random_uniform<double>({1, 8, 2, 2}, rng)},
      seed, [](std::span<const ad::Var> x, const auto& pv) {
        auto [a, b] = bifm_forward(x[0], x[1], pv);
        return concat(reshape(a, {a.value().size()}), reshape(b, {b.value().size()}), 0);
      });
  EXPECT_TRUE(report.passed) << report.summary();
  const auto pn = randomized(make_bottleneck<double>(8), seed);
  report = check_block(pn, {random_uniform<double>({1, 8, 3, 3}, rng)}, seed,
                       [](std::span<const ad::Var> x, const auto& pv) {
                         return bottleneck_forward(x[0], pv);
                       });
  EXPECT_TRUE(report.passed) << report.summary();
}

INSTANTIATE_TEST_SUITE_P(Seeds, BlockGrad, ::testing::Values(0u, 1u, 2u));

}  // namespace
}  // namespace dpnet
