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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dpnet/blocks.hpp"

namespace dpnet {

struct DpnetConfig {
  int input_size = 320;
  int in_channels = 3;
  std::array<int, 2> stem_channels{32, 64};
  // The first shared ASB has stride 2 (1/4 -> 1/8).
  int shared_asb_count = 4;
  int hrp_width = 128;
  // Split across the two stages: hrp_depth / 2 before the first Bi-FM, the
  // rest before the second.
  int hrp_depth = 16;
  // Per LRP stage, including the stride-2 entry block.
  std::array<int, 2> lrp_depths{6, 6};
  std::array<int, 2> lrp_widths{256, 512};
  int fpn_channels = 128;
  int reduction = 8;
  int head_convblocks = 2;
  int head_width = 128;
  int num_classes = 80;
  double score_threshold = 0.05;
  double nms_threshold = 0.6;

  // Throws ConfigError listing every violated constraint.
  void validate() const;
};

// Reads a JSON object whose keys mirror DpnetConfig; missing keys keep their
// defaults, unknown keys are rejected. Throws ConfigError.
DpnetConfig parse_config(const std::string& json_text);
DpnetConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const DpnetConfig& config);

struct HeadParams {
  std::vector<ConvBlockParams> blocks;
  ConvT<Tensor> cls;  // 1x1 with bias
  ConvT<Tensor> reg;  // 1x1 with bias, 4 channels (l, t, r, b)

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
    for (size_t i = 0; i < s.blocks.size(); ++i) {
      s.blocks[i].visit(join_name(prefix, "block" + std::to_string(i)), f);
    }
    s.cls.visit(join_name(prefix, "cls"), f);
    s.reg.visit(join_name(prefix, "reg"), f);
  }
};

struct FpnParams {
  std::array<ConvBnT<Tensor>, 3> lateral;  // C_i -> fpn channels, no relu
  // td[0]: level 2 from level 3, td[1]: level 1 from level 2.
  std::array<LcamParams, 2> td;
  std::array<BottleneckParams, 2> td_bottleneck;
  // bu[0]: level 2 from level 1, bu[1]: level 3 from level 2.
  std::array<LcamParams, 2> bu;
  std::array<BottleneckParams, 2> bu_bottleneck;

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
    for (int i = 0; i < 3; ++i) s.lateral[i].visit(join_name(prefix, "lateral" + std::to_string(i + 1)), f);
    const char* td_names[2] = {"td2", "td1"};
    const char* bu_names[2] = {"bu2", "bu3"};
    for (int i = 0; i < 2; ++i) {
      s.td[i].visit(join_name(prefix, std::string(td_names[i]) + ".lcam"), f);
      s.td_bottleneck[i].visit(join_name(prefix, std::string(td_names[i]) + ".bottleneck"), f);
    }
    for (int i = 0; i < 2; ++i) {
      s.bu[i].visit(join_name(prefix, std::string(bu_names[i]) + ".lcam"), f);
      s.bu_bottleneck[i].visit(join_name(prefix, std::string(bu_names[i]) + ".bottleneck"), f);
    }
  }
};

struct Model {
  DpnetConfig config;
  StemParams stem;
  std::vector<AsbParams> shared;
  std::array<std::vector<AsbParams>, 2> hrp;
  std::array<std::vector<AsbParams>, 2> lrp;
  std::array<BifmParams, 2> bifm;
  FpnParams fpn;
  std::array<HeadParams, 3> head;

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
    auto name = [&](const std::string& n) { return join_name(prefix, n); };
    s.stem.visit(name("stem"), f);
    for (size_t i = 0; i < s.shared.size(); ++i) s.shared[i].visit(name("shared." + std::to_string(i)), f);
    for (int st = 0; st < 2; ++st) {
      const std::string tag = std::to_string(st + 1);
      for (size_t i = 0; i < s.hrp[st].size(); ++i) {
        s.hrp[st][i].visit(name("hrp" + tag + "." + std::to_string(i)), f);
      }
      for (size_t i = 0; i < s.lrp[st].size(); ++i) {
        s.lrp[st][i].visit(name("lrp" + tag + "." + std::to_string(i)), f);
      }
      s.bifm[st].visit(name("bifm" + tag), f);
    }
    s.fpn.visit(name("fpn"), f);
    for (int l = 0; l < 3; ++l) s.head[l].visit(name("head" + std::to_string(l + 1)), f);
  }
};

// Validates the config, builds every block and initializes it from
// Lcg64(seed) in visit order (see init_params).
Model build(const DpnetConfig& config, uint64_t seed);

struct ForwardResult {
  std::array<Tensor, 3> c;    // backbone: HRP at 1/8, LRP at 1/16 and 1/32
  std::array<Tensor, 3> m;    // lateral projections
  std::array<Tensor, 3> f;    // FPN outputs
  std::array<Tensor, 3> cls;  // N x num_classes x H_l x W_l logits
  std::array<Tensor, 3> reg;  // N x 4 x H_l x W_l offsets in stride units
};

inline constexpr std::array<int, 3> kLevelStrides{8, 16, 32};

// image: N x in_channels x H x W with H, W divisible by 32.
ForwardResult forward(const Model& model, const Tensor& image);

// Scalar learnable parameters (BN running statistics excluded).
int64_t model_param_count(const Model& model);

}  // namespace dpnet
