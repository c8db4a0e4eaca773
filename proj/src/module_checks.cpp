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

#include "dpnet/module_checks.hpp"

#include "dpnet/blocks.hpp"
#include "dpnet/detect.hpp"
#include "dpnet/errors.hpp"
#include "dpnet/rng.hpp"

namespace dpnet {

namespace {

template <class P, class Fn>
GradCheckReport check_bundle(P params, std::vector<TensorD> inputs, Lcg64& rng,
                             const GradCheckOptions& options, Fn&& fwd) {
  randomize_params(params, rng);
  const size_t n_in = inputs.size();
  for (auto& t : flatten_params<TensorD>(params)) inputs.push_back(std::move(t));
  auto f = [&](ad::Tape&, std::span<const ad::Var> v) {
    return fwd(v.first(n_in), bind_params<ad::Var>(params, v.subspan(n_in)));
  };
  return grad_check(f, inputs, options);
}

Box random_box(Lcg64& rng) {
  const double x = rng.uniform(0, 10), y = rng.uniform(0, 10);
  return {x, y, x + rng.uniform(1, 10), y + rng.uniform(1, 10)};
}

GradCheckReport check_ciou(Lcg64& rng, const GradCheckOptions& options) {
  const Box gt = random_box(rng);
  const Box pred = random_box(rng);
  const double alpha = ciou_alpha(pred, gt);
  auto to_box = [](std::span<const double> x) { return Box{x[0], x[1], x[2], x[3]}; };
  auto f = [&](std::span<const double> x) { return ciou_loss_with_alpha(to_box(x), gt, alpha); };
  auto g = [&](std::span<const double> x) {
    const auto d = ciou_gradient(to_box(x), gt);
    return std::vector<double>(d.begin(), d.end());
  };
  const std::vector<double> x0{pred.x1, pred.y1, pred.x2, pred.y2};
  return grad_check(f, g, x0, options);
}

}  // namespace

const std::vector<std::string>& gradient_check_modules() {
  static const std::vector<std::string> names{"lsam", "lcam-td", "lcam-bu", "asb", "ciou"};
  return names;
}

GradCheckReport check_module_gradient(const std::string& module, uint64_t seed,
                                      const GradCheckOptions& options) {
  Lcg64 rng(seed);
  GradCheckOptions opts = options;
  opts.seed = seed;
  if (module == "lsam") {
    std::vector<TensorD> x{random_uniform<double>({1, 16, 4, 4}, rng)};
    return check_bundle(make_lsam<double>(16, 8), std::move(x), rng, opts,
                        [](std::span<const ad::Var> v, const auto& p) { return lsam_forward(v[0], p); });
  }
  if (module == "lcam-td" || module == "lcam-bu") {
    const auto dir = module == "lcam-td" ? LcamDirection::kTopDown : LcamDirection::kBottomUp;
    std::vector<TensorD> x{random_uniform<double>({1, 8, 4, 4}, rng),
                           random_uniform<double>({1, 8, 2, 2}, rng)};
    return check_bundle(make_lcam<double>(8, dir, 4), std::move(x), rng, opts,
                        [](std::span<const ad::Var> v, const auto& p) {
                          return lcam_forward(v[0], v[1], p);
                        });
  }
  if (module == "asb") {
    std::vector<TensorD> x{random_uniform<double>({1, 16, 4, 4}, rng)};
    return check_bundle(make_asb<double>(16, 16, 1, 8), std::move(x), rng, opts,
                        [](std::span<const ad::Var> v, const auto& p) { return asb_forward(v[0], p); });
  }
  if (module == "ciou") return check_ciou(rng, opts);
  throw ConfigError("unknown gradient-check module \"" + module + "\"");
}

}  // namespace dpnet
