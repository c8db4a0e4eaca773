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

#include "dpnet/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "dpnet/errors.hpp"
#include "dpnet/ops.hpp"

namespace dpnet {

int64_t CostReport::total_params() const {
  int64_t n = 0;
  for (const auto& r : rows) n += r.params;
  return n;
}

int64_t CostReport::total_macs() const {
  int64_t n = 0;
  for (const auto& r : rows) n += r.macs;
  return n;
}

int64_t CostReport::total_elementwise() const {
  int64_t n = 0;
  for (const auto& r : rows) n += r.elementwise;
  return n;
}

FeatureSize conv_cost(CostReport& r, const std::string& prefix, int64_t cin, int64_t cout, int kernel,
                      int stride, int groups, bool bias, FeatureSize in) {
  const int pad = kernel / 2;
  const FeatureSize out{conv_output_extent(in.h, kernel, stride, pad),
                        conv_output_extent(in.w, kernel, stride, pad)};
  const int64_t per_out = int64_t{kernel} * kernel * (cin / groups);
  CostRow row{prefix, "conv", per_out * cout + (bias ? cout : 0), out.h * out.w * per_out * cout,
              bias ? out.h * out.w * cout : 0};
  r.rows.push_back(std::move(row));
  return out;
}

FeatureSize conv_bn_cost(CostReport& r, const std::string& prefix, int64_t cin, int64_t cout,
                         int kernel, int stride, int groups, FeatureSize in) {
  const FeatureSize out = conv_cost(r, join_name(prefix, "conv"), cin, cout, kernel, stride, groups,
                                    false, in);
  r.rows.push_back({join_name(prefix, "bn"), "bn", 2 * cout, 0, out.h * out.w * cout});
  return out;
}

void lsam_cost(CostReport& r, const std::string& prefix, int64_t c, int reduction, FeatureSize in) {
  const int64_t d = c / reduction, hw = in.h * in.w;
  CostRow row{prefix, "lsam", 0, 0, 0};
  row.params = 4 * c * d + c + 2 * c;
  // X Wq, X Wk, K Q^T, X Wq_ch, X Wk_ch, Q_ch^T K_ch, (.) Wo
  row.macs = hw * c * d + hw * c * d + hw * d + hw * c + hw * c * d + hw * d + d * c;
  // GAP, two softmaxes, two sigmoids, LN, two products and a sum over X
  row.elementwise = hw * d + d + hw + hw + hw + c + c + c + 3 * hw * c;
  r.rows.push_back(std::move(row));
}

FeatureSize lcam_cost(CostReport& r, const std::string& prefix, int64_t c, int reduction,
                      LcamDirection direction, FeatureSize high, FeatureSize low) {
  const int64_t d = c / reduction;
  const FeatureSize out = direction == LcamDirection::kTopDown ? high : low;
  const int64_t hw = out.h * out.w;
  conv_cost(r, join_name(prefix, "f_sp"), c, d, 3, 1, 1, true, out);
  conv_cost(r, join_name(prefix, "f_ch"), c, 1, 3, 1, 1, true, out);
  CostRow row{prefix, "lcam", 0, 0, 0};
  row.params = 3 * c * d + 2 * c;
  // X Wk, K Q, X Wk_ch, Q_ch K_ch, (.) Wo
  row.macs = hw * c * d + hw * d + hw * c * d + hw * d + d * c;
  // query resize, GAP, two softmaxes, two sigmoids, LN, re-weighting + residual
  row.elementwise = c * hw + hw * d + d + hw + hw + hw + c + c + c + 4 * hw * c;
  r.rows.push_back(std::move(row));
  return out;
}

FeatureSize asb_cost(CostReport& r, const std::string& prefix, int64_t cin, int64_t cout, int stride,
                     int reduction, FeatureSize in) {
  const int64_t half = cout / 2;
  const int64_t branch_in = stride == 1 ? half : cin;
  if (stride == 2) {
    const FeatureSize id = conv_bn_cost(r, join_name(prefix, "id_dw"), cin, cin, 3, 2,
                                        static_cast<int>(cin), in);
    conv_bn_cost(r, join_name(prefix, "id_pw"), cin, half, 1, 1, 1, id);
  }
  conv_bn_cost(r, join_name(prefix, "pw1"), branch_in, half, 1, 1, 1, in);
  conv_bn_cost(r, join_name(prefix, "dw1"), half, half, 3, 1, static_cast<int>(half), in);
  const FeatureSize out = conv_bn_cost(r, join_name(prefix, "dw2"), half, half, 3, stride,
                                       static_cast<int>(half), in);
  conv_bn_cost(r, join_name(prefix, "pw2"), half, half, 1, 1, 1, out);
  lsam_cost(r, join_name(prefix, "lsam"), half, reduction, out);
  return out;
}

void bifm_cost(CostReport& r, const std::string& prefix, int64_t hr, int64_t lr, int ratio,
               FeatureSize high) {
  FeatureSize s = high;
  int i = 0;
  for (int k = ratio; k > 1; k /= 2, ++i) {
    s = conv_cost(r, join_name(prefix, "down_dw" + std::to_string(i)), hr, hr, 3, 2,
                  static_cast<int>(hr), false, s);
  }
  conv_bn_cost(r, join_name(prefix, "down_pw"), hr, lr, 1, 1, 1, s);
  r.rows.back().elementwise += s.h * s.w * lr;  // fusion add
  conv_bn_cost(r, join_name(prefix, "up_pw"), lr, hr, 1, 1, 1, s);
  r.rows.back().elementwise += 2 * high.h * high.w * hr;  // upsample + fusion add
}

void convblock_cost(CostReport& r, const std::string& prefix, int64_t cin, int64_t cout, FeatureSize in) {
  conv_bn_cost(r, join_name(prefix, "dw"), cin, cin, 3, 1, static_cast<int>(cin), in);
  conv_bn_cost(r, join_name(prefix, "pw"), cin, cout, 1, 1, 1, in);
}

void bottleneck_cost(CostReport& r, const std::string& prefix, int64_t c, FeatureSize in) {
  conv_bn_cost(r, join_name(prefix, "reduce"), c, c / 2, 1, 1, 1, in);
  conv_bn_cost(r, join_name(prefix, "dw"), c / 2, c / 2, 3, 1, static_cast<int>(c / 2), in);
  conv_bn_cost(r, join_name(prefix, "restore"), c / 2, c, 1, 1, 1, in);
}

FeatureSize stem_cost(CostReport& r, const std::string& prefix, int64_t cin, int64_t mid, int64_t cout,
                      int reduction, FeatureSize in) {
  const FeatureSize s = conv_bn_cost(r, join_name(prefix, "conv"), cin, mid, 3, 2, 1, in);
  return asb_cost(r, join_name(prefix, "asb"), mid, cout, 2, reduction, s);
}

CostReport analyze(const DpnetConfig& config, int input_size) {
  config.validate();
  if (input_size <= 0 || input_size % 32 != 0) {
    throw ConfigError("input size " + std::to_string(input_size) + " must be a positive multiple of 32");
  }
  const int r = config.reduction;
  CostReport rep;
  rep.input_h = rep.input_w = input_size;
  FeatureSize s = stem_cost(rep, "stem", config.in_channels, config.stem_channels[0],
                            config.stem_channels[1], r, {input_size, input_size});
  s = asb_cost(rep, "shared.0", config.stem_channels[1], config.hrp_width, 2, r, s);
  for (int i = 1; i < config.shared_asb_count; ++i) {
    asb_cost(rep, "shared." + std::to_string(i), config.hrp_width, config.hrp_width, 1, r, s);
  }
  const FeatureSize high = s;
  const int hrp_split[2] = {config.hrp_depth / 2, config.hrp_depth - config.hrp_depth / 2};
  std::array<FeatureSize, 3> level{high, {}, {}};
  int64_t lr_in = config.hrp_width;
  FeatureSize low = high;
  for (int st = 0; st < 2; ++st) {
    const std::string tag = std::to_string(st + 1);
    for (int i = 0; i < hrp_split[st]; ++i) {
      asb_cost(rep, "hrp" + tag + "." + std::to_string(i), config.hrp_width, config.hrp_width, 1, r, high);
    }
    const int64_t w = config.lrp_widths[st];
    low = asb_cost(rep, "lrp" + tag + ".0", lr_in, w, 2, r, low);
    for (int i = 1; i < config.lrp_depths[st]; ++i) {
      asb_cost(rep, "lrp" + tag + "." + std::to_string(i), w, w, 1, r, low);
    }
    bifm_cost(rep, "bifm" + tag, config.hrp_width, w, st == 0 ? 2 : 4, high);
    level[st + 1] = low;
    lr_in = w;
  }
  const int64_t widths[3] = {config.hrp_width, config.lrp_widths[0], config.lrp_widths[1]};
  const int64_t fc = config.fpn_channels;
  for (int l = 0; l < 3; ++l) {
    conv_bn_cost(rep, "fpn.lateral" + std::to_string(l + 1), widths[l], fc, 1, 1, 1, level[l]);
  }
  lcam_cost(rep, "fpn.td2.lcam", fc, r, LcamDirection::kTopDown, level[1], level[2]);
  bottleneck_cost(rep, "fpn.td2.bottleneck", fc, level[1]);
  lcam_cost(rep, "fpn.td1.lcam", fc, r, LcamDirection::kTopDown, level[0], level[1]);
  bottleneck_cost(rep, "fpn.td1.bottleneck", fc, level[0]);
  lcam_cost(rep, "fpn.bu2.lcam", fc, r, LcamDirection::kBottomUp, level[0], level[1]);
  bottleneck_cost(rep, "fpn.bu2.bottleneck", fc, level[1]);
  lcam_cost(rep, "fpn.bu3.lcam", fc, r, LcamDirection::kBottomUp, level[1], level[2]);
  bottleneck_cost(rep, "fpn.bu3.bottleneck", fc, level[2]);
  for (int l = 0; l < 3; ++l) {
    const std::string head = "head" + std::to_string(l + 1);
    int64_t c = fc;
    for (int i = 0; i < config.head_convblocks; ++i) {
      convblock_cost(rep, head + ".block" + std::to_string(i), c, config.head_width, level[l]);
      c = config.head_width;
    }
    conv_cost(rep, head + ".cls", c, config.num_classes, 1, 1, 1, true, level[l]);
    conv_cost(rep, head + ".reg", c, 4, 1, 1, 1, true, level[l]);
  }
  return rep;
}

int64_t count_params(const DpnetConfig& config) { return analyze(config).total_params(); }

MacCount count_macs(const DpnetConfig& config, int input_size) {
  const CostReport rep = analyze(config, input_size);
  return {rep.total_macs(), rep.total_elementwise()};
}

std::string render_summary(const CostReport& report) {
  size_t width = 5;
  for (const auto& r : report.rows) width = std::max(width, r.name.size());
  std::ostringstream os;
  char buf[256];
  auto line = [&](const std::string& name, const std::string& kind, int64_t p, int64_t m, int64_t e) {
    std::snprintf(buf, sizeof(buf), "%-*s  %-5s  %12lld  %14lld  %12lld\n", static_cast<int>(width),
                  name.c_str(), kind.c_str(), static_cast<long long>(p), static_cast<long long>(m),
                  static_cast<long long>(e));
    os << buf;
  };
  std::snprintf(buf, sizeof(buf), "%-*s  %-5s  %12s  %14s  %12s\n", static_cast<int>(width), "layer",
                "kind", "params", "macs", "elementwise");
  os << buf;
  for (const auto& r : report.rows) line(r.name, r.kind, r.params, r.macs, r.elementwise);
  line("total", "", report.total_params(), report.total_macs(), report.total_elementwise());
  const double macs_g = static_cast<double>(report.total_macs()) * 1e-9;
  std::snprintf(buf, sizeof(buf),
                "input %lldx%lld\nParams (M): %.3f\nMACs (G): %.3f\nMACs incl. elementwise (G): %.3f\n"
                "FLOPs as 2 x MACs (G): %.3f\n",
                static_cast<long long>(report.input_h), static_cast<long long>(report.input_w),
                static_cast<double>(report.total_params()) * 1e-6, macs_g,
                static_cast<double>(report.total_macs() + report.total_elementwise()) * 1e-9,
                2.0 * macs_g);
  os << buf;
  return os.str();
}

std::string report_to_json(const CostReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"name", r.name},
                    {"kind", r.kind},
                    {"params", r.params},
                    {"macs", r.macs},
                    {"elementwise", r.elementwise}});
  }
  nlohmann::json doc = {{"input", {report.input_h, report.input_w}},
                        {"rows", rows},
                        {"total_params", report.total_params()},
                        {"total_macs", report.total_macs()},
                        {"total_elementwise", report.total_elementwise()}};
  return doc.dump(2);
}

}  // namespace dpnet
