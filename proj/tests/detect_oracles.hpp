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

// Brute-force references for box post-processing, used only by tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "dpnet/detect.hpp"
#include "dpnet/rng.hpp"

namespace dpnet::oracle {

inline Box random_box(Lcg64& rng, double extent = 16.0, double quantum = 0.0) {
  auto q = [&](double v) { return quantum > 0 ? std::round(v / quantum) * quantum : v; };
  double x1 = q(rng.uniform(0, extent)), x2 = q(rng.uniform(0, extent));
  double y1 = q(rng.uniform(0, extent)), y2 = q(rng.uniform(0, extent));
  if (x2 < x1) std::swap(x1, x2);
  if (y2 < y1) std::swap(y1, y2);
  return {x1, y1, x2, y2};
}

// Counts sample points at cell centres of a uniform grid.
inline double raster_iou(const Box& a, const Box& b, double extent, int cells) {
  const double step = extent / cells;
  int64_t in_a = 0, in_b = 0, both = 0;
  for (int i = 0; i < cells; ++i) {
    const double y = (i + 0.5) * step;
    for (int j = 0; j < cells; ++j) {
      const double x = (j + 0.5) * step;
      const bool pa = x > a.x1 && x < a.x2 && y > a.y1 && y < a.y2;
      const bool pb = x > b.x1 && x < b.x2 && y > b.y1 && y < b.y2;
      in_a += pa;
      in_b += pb;
      both += pa && pb;
    }
  }
  const int64_t uni = in_a + in_b - both;
  return uni > 0 ? static_cast<double>(both) / static_cast<double>(uni) : 0.0;
}

inline bool same_det(const Detection& a, const Detection& b) { return a == b; }

// Repeatedly takes the best remaining detection and removes everything of
// its class that overlaps it.
inline std::vector<Detection> brute_force_nms(std::vector<Detection> dets, double thr) {
  std::vector<bool> alive(dets.size(), true);
  std::vector<Detection> kept;
  while (true) {
    int best = -1;
    for (size_t i = 0; i < dets.size(); ++i) {
      if (!alive[i]) continue;
      if (best < 0 || dets[i].score > dets[best].score ||
          (dets[i].score == dets[best].score && dets[i].class_id < dets[best].class_id)) {
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;
    kept.push_back(dets[best]);
    alive[best] = false;
    for (size_t i = 0; i < dets.size(); ++i) {
      if (alive[i] && dets[i].class_id == dets[best].class_id && iou(dets[i].box, dets[best].box) > thr) {
        alive[i] = false;
      }
    }
  }
  return kept;
}

}  // namespace dpnet::oracle
