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

#include "dpnet/network.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpnet/errors.hpp"

namespace dpnet {

namespace {

using json = nlohmann::json;

void check_width(std::vector<std::string>& bad, const std::string& name, int width, int r) {
  if (width <= 0 || width % 2 != 0) {
    bad.push_back(name + " = " + std::to_string(width) + " must be positive and even");
  } else if (r > 0 && (width % r != 0 || (width / 2) % r != 0)) {
    bad.push_back(name + " = " + std::to_string(width) + " and its half must be divisible by reduction " +
                  std::to_string(r));
  }
}

std::array<int, 2> int_pair(const std::string& key, const json& v) {
  if (!v.is_array() || v.size() != 2) {
    throw ConfigError("config key \"" + key + "\": expected two integers, got " + v.dump());
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

}  // namespace

void DpnetConfig::validate() const {
  std::vector<std::string> bad;
  if (input_size <= 0 || input_size % 32 != 0) {
    bad.push_back("input_size = " + std::to_string(input_size) + " must be a positive multiple of 32");
  }
  if (in_channels <= 0) bad.push_back("in_channels must be positive");
  if (reduction <= 0) bad.push_back("reduction must be positive");
  if (stem_channels[0] <= 0) bad.push_back("stem_channels[0] must be positive");
  check_width(bad, "stem_channels[1]", stem_channels[1], reduction);
  if (shared_asb_count < 1) bad.push_back("shared_asb_count must be at least 1");
  check_width(bad, "hrp_width", hrp_width, reduction);
  if (hrp_depth < 0) bad.push_back("hrp_depth must be non-negative");
  for (int i = 0; i < 2; ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    if (lrp_depths[i] < 1) bad.push_back("lrp_depths" + idx + " must be at least 1");
    check_width(bad, "lrp_widths" + idx, lrp_widths[i], reduction);
  }
  if (fpn_channels <= 0 || fpn_channels % 2 != 0 || (reduction > 0 && fpn_channels % reduction != 0)) {
    bad.push_back("fpn_channels = " + std::to_string(fpn_channels) +
                  " must be even and divisible by reduction");
  }
  if (head_convblocks < 0) bad.push_back("head_convblocks must be non-negative");
  if (head_width <= 0) bad.push_back("head_width must be positive");
  if (num_classes <= 0) bad.push_back("num_classes must be positive");
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) bad.push_back("score_threshold must lie in [0, 1]");
  if (!(nms_threshold >= 0.0 && nms_threshold <= 1.0)) bad.push_back("nms_threshold must lie in [0, 1]");
  if (bad.empty()) return;
  std::string msg = "invalid config:";
  for (const auto& b : bad) msg += "\n  " + b;
  throw ConfigError(msg);
}

DpnetConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  DpnetConfig c;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "input_size") c.input_size = value.get<int>();
      else if (key == "in_channels") c.in_channels = value.get<int>();
      else if (key == "stem_channels") c.stem_channels = int_pair(key, value);
      else if (key == "shared_asb_count") c.shared_asb_count = value.get<int>();
      else if (key == "hrp_width") c.hrp_width = value.get<int>();
      else if (key == "hrp_depth") c.hrp_depth = value.get<int>();
      else if (key == "lrp_depths") c.lrp_depths = int_pair(key, value);
      else if (key == "lrp_widths") c.lrp_widths = int_pair(key, value);
      else if (key == "fpn_channels") c.fpn_channels = value.get<int>();
      else if (key == "reduction") c.reduction = value.get<int>();
      else if (key == "head_convblocks") c.head_convblocks = value.get<int>();
      else if (key == "head_width") c.head_width = value.get<int>();
      else if (key == "num_classes") c.num_classes = value.get<int>();
      else if (key == "score_threshold") c.score_threshold = value.get<double>();
      else if (key == "nms_threshold") c.nms_threshold = value.get<double>();
      else throw ConfigError("unknown config key \"" + key + "\"");
    } catch (const ConfigError&) {
      throw;
    } catch (const json::exception& e) {
      throw ConfigError("config key \"" + key + "\": " + e.what());
    }
  }
  c.validate();
  return c;
}

DpnetConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const DpnetConfig& c) {
  json doc = {{"input_size", c.input_size},
              {"in_channels", c.in_channels},
              {"stem_channels", c.stem_channels},
              {"shared_asb_count", c.shared_asb_count},
              {"hrp_width", c.hrp_width},
              {"hrp_depth", c.hrp_depth},
              {"lrp_depths", c.lrp_depths},
              {"lrp_widths", c.lrp_widths},
              {"fpn_channels", c.fpn_channels},
              {"reduction", c.reduction},
              {"head_convblocks", c.head_convblocks},
              {"head_width", c.head_width},
              {"num_classes", c.num_classes},
              {"score_threshold", c.score_threshold},
              {"nms_threshold", c.nms_threshold}};
  return doc.dump(2);
}

Model build(const DpnetConfig& config, uint64_t seed) {
  config.validate();
  const int r = config.reduction;
  Model m;
  m.config = config;
  m.stem = make_stem<float>(config.in_channels, config.stem_channels[0], config.stem_channels[1], r);
  m.shared.push_back(make_asb<float>(config.stem_channels[1], config.hrp_width, 2, r));
  for (int i = 1; i < config.shared_asb_count; ++i) {
    m.shared.push_back(make_asb<float>(config.hrp_width, config.hrp_width, 1, r));
  }
  const int hrp_split[2] = {config.hrp_depth / 2, config.hrp_depth - config.hrp_depth / 2};
  int lr_in = config.hrp_width;
  for (int st = 0; st < 2; ++st) {
    for (int i = 0; i < hrp_split[st]; ++i) {
      m.hrp[st].push_back(make_asb<float>(config.hrp_width, config.hrp_width, 1, r));
    }
    const int w = config.lrp_widths[st];
    m.lrp[st].push_back(make_asb<float>(lr_in, w, 2, r));
    for (int i = 1; i < config.lrp_depths[st]; ++i) m.lrp[st].push_back(make_asb<float>(w, w, 1, r));
    m.bifm[st] = make_bifm<float>(config.hrp_width, w, st == 0 ? 2 : 4);
    lr_in = w;
  }
  const int64_t level_width[3] = {config.hrp_width, config.lrp_widths[0], config.lrp_widths[1]};
  const int64_t fc = config.fpn_channels;
  for (int l = 0; l < 3; ++l) m.fpn.lateral[l] = make_conv_bn<float>(level_width[l], fc, 1, 1, 1, false);
  for (int i = 0; i < 2; ++i) {
    m.fpn.td[i] = make_lcam<float>(fc, LcamDirection::kTopDown, r);
    m.fpn.td_bottleneck[i] = make_bottleneck<float>(fc);
    m.fpn.bu[i] = make_lcam<float>(fc, LcamDirection::kBottomUp, r);
    m.fpn.bu_bottleneck[i] = make_bottleneck<float>(fc);
  }
  for (auto& h : m.head) {
    int64_t c = fc;
    for (int i = 0; i < config.head_convblocks; ++i) {
      h.blocks.push_back(make_convblock<float>(c, config.head_width));
      c = config.head_width;
    }
    h.cls = make_conv<float>(c, config.num_classes, 1, 1, 1, true);
    h.reg = make_conv<float>(c, 4, 1, 1, 1, true);
  }
  Lcg64 rng(seed);
  init_params(m, rng);
  return m;
}

ForwardResult forward(const Model& model, const Tensor& image) {
  const auto& cfg = model.config;
  if (image.rank() != 4 || image.dim(1) != cfg.in_channels || image.dim(2) % 32 != 0 ||
      image.dim(3) % 32 != 0) {
    throw ShapeError("input must be N x " + std::to_string(cfg.in_channels) +
                     " x H x W with H and W multiples of 32, got " + to_string(image.shape()));
  }
  Tensor x = stem_forward(image, model.stem);
  for (const auto& b : model.shared) x = asb_forward(x, b);
  Tensor hr = x, lr = x;
  ForwardResult out;
  for (int st = 0; st < 2; ++st) {
    for (const auto& b : model.hrp[st]) hr = asb_forward(hr, b);
    for (const auto& b : model.lrp[st]) lr = asb_forward(lr, b);
    std::tie(hr, lr) = bifm_forward(hr, lr, model.bifm[st]);
    out.c[st + 1] = lr;
  }
  out.c[0] = hr;

  const auto& fpn = model.fpn;
  for (int l = 0; l < 3; ++l) out.m[l] = conv_bn_forward(out.c[l], fpn.lateral[l]);
  std::array<Tensor, 3> td;
  td[2] = out.m[2];
  td[1] = bottleneck_forward(lcam_forward(out.m[1], td[2], fpn.td[0]), fpn.td_bottleneck[0]);
  td[0] = bottleneck_forward(lcam_forward(out.m[0], td[1], fpn.td[1]), fpn.td_bottleneck[1]);
  out.f[0] = td[0];
  out.f[1] = bottleneck_forward(lcam_forward(out.f[0], td[1], fpn.bu[0]), fpn.bu_bottleneck[0]);
  out.f[2] = bottleneck_forward(lcam_forward(out.f[1], td[2], fpn.bu[1]), fpn.bu_bottleneck[1]);

  for (int l = 0; l < 3; ++l) {
    Tensor y = out.f[l];
    for (const auto& b : model.head[l].blocks) y = convblock_forward(y, b);
    out.cls[l] = conv_forward(y, model.head[l].cls);
    out.reg[l] = conv_forward(y, model.head[l].reg);
  }
  return out;
}

int64_t model_param_count(const Model& model) { return count_param_scalars(model); }

}  // namespace dpnet
