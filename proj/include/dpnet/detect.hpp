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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dpnet/tensor.hpp"

namespace dpnet {

// Pixel coordinates, corner convention.
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool operator==(const Box&) const = default;
};

struct Detection {
  Box box;
  int class_id = 0;
  double score = 0;
  bool operator==(const Detection&) const = default;
};

// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b);

// Complete-IoU loss
//   1 - IoU + rho^2(centres) / c^2(enclosing diagonal) + alpha * v
//   v = 4/pi^2 (atan(w_gt/h_gt) - atan(w/h))^2, alpha = v / ((1 - IoU) + v)
// Aspect angles use atan2(w, h), so zero-height boxes stay finite.
double ciou_loss(const Box& pred, const Box& gt);
double ciou_alpha(const Box& pred, const Box& gt);
// Loss with alpha supplied instead of derived from the boxes.
double ciou_loss_with_alpha(const Box& pred, const Box& gt, double alpha);
// d loss / d (x1, y1, x2, y2) of pred with alpha held constant.
std::array<double, 4> ciou_gradient(const Box& pred, const Box& gt);

struct DecodeOptions {
  double score_threshold = 0.05;
  int64_t image_w = 0, image_h = 0;
  std::array<int, 3> strides{8, 16, 32};
};

// cls[l]: N x K x H x W logits, reg[l]: N x 4 x H x W (l, t, r, b) in
// stride units. For sample n, each cell (i, j) of level l with stride s
// yields a box (cx - l s, cy - t s, cx + r s, cy + b s) around
// ((j + 0.5) s, (i + 0.5) s), negative offsets taken as 0, clamped to the
// image. Score is the largest class sigmoid; cells below the threshold are
// dropped. Output is in level, row, column order.
std::vector<Detection> decode(std::span<const Tensor> cls, std::span<const Tensor> reg,
                              const DecodeOptions& options, int64_t n = 0);

// Per-class greedy suppression in descending score order, ties broken by
// lower class id then earlier index. Returns kept detections in that order.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold = 0.6);

// {"box":[x1,y1,x2,y2],"class":k,"score":s}
std::string to_json_line(const Detection& d);
void write_json_lines(std::ostream& os, std::span<const Detection> dets);

}  // namespace dpnet
