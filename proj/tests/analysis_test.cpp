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

#include <map>
#include <sstream>

#include <json.hpp>

#include "dpnet/analysis.hpp"
#include "dpnet/blocks.hpp"
#include "dpnet/errors.hpp"
#include "dpnet/weights.hpp"

namespace dpnet {
namespace {

const CostRow& only_row(const CostReport& r) {
  EXPECT_EQ(r.rows.size(), 1u);
  return r.rows.front();
}

TEST(Analysis, StandardConvHandCount) {
  CostReport r;
  const FeatureSize out = conv_cost(r, "c", 16, 32, 3, 1, 1, false, {40, 40});
  EXPECT_EQ(out.h, 40);
  EXPECT_EQ(only_row(r).params, 4608);    // 3*3*16*32
  EXPECT_EQ(only_row(r).macs, 7372800);   // 40*40*3*3*16*32
  EXPECT_EQ(only_row(r).elementwise, 0);
}

TEST(Analysis, DepthwiseHandCount) {
  CostReport a, b;
  conv_cost(a, "dw", 64, 64, 3, 1, 64, false, {10, 10});
  conv_cost(b, "dw", 64, 64, 3, 2, 64, true, {10, 10});
  EXPECT_EQ(only_row(a).params, 576);
  EXPECT_EQ(only_row(a).macs, 10 * 10 * 9 * 64);
  EXPECT_EQ(only_row(b).params, 640);
  EXPECT_EQ(only_row(b).macs, 5 * 5 * 9 * 64);
}

TEST(Analysis, LsamHandCount) {
  CostReport r;
  lsam_cost(r, "lsam", 128, 8, {40, 40});
  // 4 projections of 128x16, W_ch^q 128, LN 2x128
  EXPECT_EQ(only_row(r).params, 2048 + 2048 + 128 + 2048 + 2048 + 256);
  EXPECT_EQ(only_row(r).params, 8576);
  const int64_t hw = 1600, c = 128, d = 16;
  const int64_t k_sp_q_sp = hw * d;
  EXPECT_EQ(k_sp_q_sp, 25600);
  EXPECT_EQ(only_row(r).macs, 3 * hw * c * d + hw * c + k_sp_q_sp + hw * d + d * c);
  EXPECT_EQ(count_param_scalars(make_lsam<float>(128, 8)), 8576);
}

TEST(Analysis, LcamHandCount) {
  CostReport r;
  const FeatureSize out = lcam_cost(r, "x", 128, 8, LcamDirection::kBottomUp, {40, 40}, {20, 20});
  EXPECT_EQ(out.h, 20);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].name, "x.f_sp");
  EXPECT_EQ(r.rows[0].params, 9 * 128 * 16 + 16);
  EXPECT_EQ(r.rows[0].macs, 400 * 9 * 128 * 16);
  EXPECT_EQ(r.rows[1].params, 9 * 128 + 1);
  EXPECT_EQ(r.rows[2].params, 3 * 128 * 16 + 256);
  EXPECT_EQ(r.rows[2].macs, 2 * 400 * 128 * 16 + 2 * 400 * 16 + 16 * 128);
}

TEST(Analysis, AsbStrideOneHandCount) {
  CostReport r;
  asb_cost(r, "b", 128, 128, 1, 8, {40, 40});
  ASSERT_EQ(r.rows.size(), 9u);
  // pw1: 64 -> 64
  EXPECT_EQ(r.rows[0].name, "b.pw1.conv");
  EXPECT_EQ(r.rows[0].params, 4096);
  EXPECT_EQ(r.rows[0].macs, 1600 * 4096);
  EXPECT_EQ(r.rows[1].name, "b.pw1.bn");
  EXPECT_EQ(r.rows[1].params, 128);
  EXPECT_EQ(r.rows[2].params, 576);
  EXPECT_EQ(r.rows[2].macs, 1600 * 576);
  EXPECT_EQ(r.rows[8].name, "b.lsam");
  EXPECT_EQ(r.rows[8].params, 4 * 64 * 8 + 64 + 128);
  EXPECT_EQ(r.total_params(), 4096 + 128 + 576 + 128 + 576 + 128 + 4096 + 128 + 2240);
}

TEST(Analysis, BlockCountsMatchBuiltBlocks) {
  auto check = [](const auto& params, const CostReport& r) {
    EXPECT_EQ(count_param_scalars(params), r.total_params());
  };
  for (int stride : {1, 2}) {
    CostReport r;
    asb_cost(r, "", 64, stride == 1 ? 64 : 128, stride, 8, {16, 16});
    check(make_asb<float>(64, stride == 1 ? 64 : 128, stride), r);
  }
  for (int ratio : {2, 4}) {
    CostReport r;
    bifm_cost(r, "", 128, 256, ratio, {16, 16});
    check(make_bifm<float>(128, 256, ratio), r);
  }
  CostReport cb, bn, st, lc;
  convblock_cost(cb, "", 128, 96, {8, 8});
  check(make_convblock<float>(128, 96), cb);
  bottleneck_cost(bn, "", 128, {8, 8});
  check(make_bottleneck<float>(128), bn);
  stem_cost(st, "", 3, 32, 64, 8, {64, 64});
  check(make_stem<float>(3, 32, 64), st);
  lcam_cost(lc, "", 64, 8, LcamDirection::kTopDown, {8, 8}, {4, 4});
  check(make_lcam<float>(64, LcamDirection::kTopDown), lc);
}

// Layer prefix of a parameter: its name without the last component.
std::map<std::string, int64_t> learnable_by_layer(const WeightStore& store) {
  std::map<std::string, int64_t> out;
  for (const auto& e : store.entries()) {
    if (is_buffer(e.kind)) continue;
    out[e.name.substr(0, e.name.rfind('.'))] += e.tensor.size();
  }
  return out;
}

TEST(Analysis, RowsMatchModelTraversal) {
  for (int classes : {80, 3}) {
    DpnetConfig c;
    c.num_classes = classes;
    const CostReport rep = analyze(c);
    const auto layers = learnable_by_layer(collect_weights(build(c, 0)));
    EXPECT_EQ(rep.rows.size(), layers.size());
    for (const auto& row : rep.rows) {
      auto it = layers.find(row.name);
      ASSERT_NE(it, layers.end()) << row.name;
      EXPECT_EQ(it->second, row.params) << row.name;
    }
    EXPECT_EQ(rep.total_params(), collect_weights(build(c, 0)).scalar_count(false));
  }
}

TEST(Analysis, TotalsAreSumsOfRows) {
  const CostReport rep = analyze(DpnetConfig{});
  int64_t p = 0, m = 0, e = 0;
  for (const auto& r : rep.rows) p += r.params, m += r.macs, e += r.elementwise;
  EXPECT_EQ(rep.total_params(), p);
  EXPECT_EQ(rep.total_macs(), m);
  EXPECT_EQ(rep.total_elementwise(), e);
  const MacCount mc = count_macs(DpnetConfig{}, 320);
  EXPECT_EQ(mc.core, m);
  EXPECT_EQ(mc.total(), m + e);
}

TEST(Analysis, MacsAreLinearInArea) {
  for (auto [k, s, g] : {std::tuple{3, 1, 1}, {1, 1, 1}, {3, 1, 16}}) {
    int64_t macs[3];
    int i = 0;
    for (int64_t size : {8, 16, 32}) {
      CostReport r;
      conv_cost(r, "c", 16, 32, k, s, g, false, {size, size});
      macs[i++] = r.total_macs();
    }
    EXPECT_EQ(macs[1], 4 * macs[0]);
    EXPECT_EQ(macs[2], 4 * macs[1]);
  }
  CostReport a, b;
  lsam_cost(a, "l", 64, 8, {8, 8});
  lsam_cost(b, "l", 64, 8, {16, 16});
  EXPECT_EQ(b.total_macs() - 64 * 8, 4 * (a.total_macs() - 64 * 8));
}

TEST(Analysis, HalfInputQuartersMacs) {
  const double full = static_cast<double>(count_macs(DpnetConfig{}, 320).core);
  const double half = static_cast<double>(count_macs(DpnetConfig{}, 160).core);
  EXPECT_NEAR(half / full, 0.25, 0.005);
  EXPECT_THROW(count_macs(DpnetConfig{}, 100), ConfigError);
}

TEST(Analysis, RenderSummary) {
  CostReport empty;
  const std::string e = render_summary(empty);
  EXPECT_NE(e.find("Params (M): 0.000"), std::string::npos);
  EXPECT_NE(e.find("MACs (G): 0.000"), std::string::npos);

  CostReport one;
  conv_cost(one, "conv", 16, 32, 3, 1, 1, false, {40, 40});
  const std::string s = render_summary(one);
  std::istringstream is(s);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(lines[1].rfind("conv ", 0), 0u);
  EXPECT_EQ(lines[2].rfind("total", 0), 0u);
  EXPECT_NE(lines[2].find("4608"), std::string::npos);
  EXPECT_NE(lines[2].find("7372800"), std::string::npos);

  const CostReport rep = analyze(DpnetConfig{});
  const std::string full = render_summary(rep);
  size_t n = 0;
  for (char ch : full) n += ch == '\n';
  EXPECT_EQ(n, rep.rows.size() + 2 + 5);  // header, total, five footer lines
  EXPECT_NE(full.find("Params (M): 2.267"), std::string::npos);
  EXPECT_NE(full.find("MACs (G): 0.991"), std::string::npos);
}

TEST(Analysis, JsonReport) {
  const CostReport rep = analyze(DpnetConfig{}, 256);
  const auto doc = nlohmann::json::parse(report_to_json(rep));
  EXPECT_EQ(doc["total_params"].get<int64_t>(), rep.total_params());
  EXPECT_EQ(doc["total_macs"].get<int64_t>(), rep.total_macs());
  EXPECT_EQ(doc["rows"].size(), rep.rows.size());
  EXPECT_EQ(doc["input"][0].get<int>(), 256);
}

}  // namespace
}  // namespace dpnet
