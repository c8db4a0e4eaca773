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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dpnet/autodiff.hpp"

namespace dpnet {

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-5;
  // Seeds the random projection that reduces a tensor output to a scalar.
  uint64_t seed = 0;
};

struct GradCheckReport {
  struct Coordinate {
    size_t input = 0;
    int64_t index = 0;
  };

  // max over checked coordinates of |analytic - numeric| / max(1, |numeric|)
  double max_rel_error = 0.0;
  int64_t checked = 0;
  // Coordinates whose +/- eps probes crossed a non-smooth point.
  std::vector<Coordinate> skipped;
  Coordinate worst;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = false;

  std::string summary() const;
};

// Builds the function under test on the given tape from one Var per input.
using TapeFunction = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

// Central-difference check of every coordinate of every input. A tensor
// output y is reduced to the scalar sum(w * y) with fixed random w.
GradCheckReport grad_check(const TapeFunction& f, std::span<const TensorD> inputs,
                           const GradCheckOptions& options = {});

using ScalarFunction = std::function<double(std::span<const double>)>;
using GradientFunction = std::function<std::vector<double>(std::span<const double>)>;

// Same check for a scalar function with a hand-derived gradient.
GradCheckReport grad_check(const ScalarFunction& f, const GradientFunction& grad,
                           std::span<const double> x, const GradCheckOptions& options = {});

}  // namespace dpnet
