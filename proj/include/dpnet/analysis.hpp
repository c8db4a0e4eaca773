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
#include <vector>

#include "dpnet/attention.hpp"
#include "dpnet/network.hpp"

// Closed-form parameter and multiply-accumulate accounting.
//
// One row per parameterized layer, named like the parameter prefix it owns
// ("shared.1.pw1.conv", "shared.1.pw1.bn", "shared.1.lsam", ...). `macs`
// counts convolution and matrix-product multiply-accumulates; `elementwise`
// counts normalization, softmax, sigmoid, pooling, resampling, re-weighting
// and fusion additions at one per element. Parameter-free work (resize,
// fusion adds) is attributed to the row that produces its input.
namespace dpnet {

struct CostRow {
  std::string name;
  std::string kind;  // conv | bn | lsam | lcam
  int64_t params = 0;
  int64_t macs = 0;
  int64_t elementwise = 0;
};

struct CostReport {
  int64_t input_h = 0, input_w = 0;
  std::vector<CostRow> rows;

  int64_t total_params() const;
  int64_t total_macs() const;
  int64_t total_elementwise() const;
};

struct MacCount {
  int64_t core = 0;
  int64_t elementwise = 0;
  int64_t total() const { return core + elementwise; }
};

struct FeatureSize {
  int64_t h = 0, w = 0;
};

// Block-level accounting. Each appends its rows under `prefix` and returns
// the output spatial size.
FeatureSize conv_cost(CostReport& r, const std::string& prefix, int64_t cin, int64_t cout, int kernel,
                      int stride, int groups, bool bias, FeatureSize in);
FeatureSize conv_bn_cost(CostReport& r, const std::string& prefix, int64_t cin, int64_t cout,
                         int kernel, int stride, int groups, FeatureSize in);
void lsam_cost(CostReport& r, const std::string& prefix, int64_t channels, int reduction, FeatureSize in);
// Output size is the high-resolution size for top-down, low for bottom-up.
FeatureSize lcam_cost(CostReport& r, const std::string& prefix, int64_t channels, int reduction,
                      LcamDirection direction, FeatureSize high, FeatureSize low);
FeatureSize asb_cost(CostReport& r, const std::string& prefix, int64_t cin, int64_t cout, int stride,
                     int reduction, FeatureSize in);
void bifm_cost(CostReport& r, const std::string& prefix, int64_t hr_channels, int64_t lr_channels,
               int ratio, FeatureSize high);
void convblock_cost(CostReport& r, const std::string& prefix, int64_t cin, int64_t cout, FeatureSize in);
void bottleneck_cost(CostReport& r, const std::string& prefix, int64_t channels, FeatureSize in);
FeatureSize stem_cost(CostReport& r, const std::string& prefix, int64_t cin, int64_t mid, int64_t cout,
                      int reduction, FeatureSize in);

// Whole model at an input_size x input_size image. Throws ConfigError.
CostReport analyze(const DpnetConfig& config, int input_size);
inline CostReport analyze(const DpnetConfig& config) { return analyze(config, config.input_size); }

int64_t count_params(const DpnetConfig& config);
MacCount count_macs(const DpnetConfig& config, int input_size);

// Fixed-width table, one line per row, a totals line, then Params (M),
// MACs (G) and 2 x MACs (G) with three decimals.
std::string render_summary(const CostReport& report);
std::string report_to_json(const CostReport& report);

}  // namespace dpnet
