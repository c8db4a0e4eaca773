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

#include "dpnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dpnet/errors.hpp"
#include "dpnet/rng.hpp"

namespace dpnet {

namespace {

struct Evaluation {
  double loss = 0.0;
  std::vector<uint8_t> kinks;
};

double project(const TensorD& y, const TensorD& w) {
  double s = 0;
  for (int64_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

void note(GradCheckReport& r, size_t input, int64_t index, double analytic, double numeric) {
  const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
  ++r.checked;
  if (err >= r.max_rel_error) {
    r.max_rel_error = err;
    r.worst = {input, index};
    r.worst_analytic = analytic;
    r.worst_numeric = numeric;
  }
}

}  // namespace

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << " max_rel_error=" << max_rel_error << " checked=" << checked
     << " skipped=" << skipped.size();
  if (checked > 0) {
    os << " worst=(input " << worst.input << ", index " << worst.index << ", analytic "
       << worst_analytic << ", numeric " << worst_numeric << ")";
  }
  return os.str();
}

GradCheckReport grad_check(const TapeFunction& f, std::span<const TensorD> inputs,
                           const GradCheckOptions& options) {
  std::vector<TensorD> probe(inputs.begin(), inputs.end());
  TensorD weights;

  auto evaluate = [&](bool with_backward, std::vector<TensorD>* grads) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    vars.reserve(probe.size());
    for (const auto& t : probe) vars.push_back(tape.leaf(t));
    const ad::Var y = f(tape, vars);
    if (weights.empty()) {
      Lcg64 rng(options.seed);
      weights = random_uniform<double>(y.shape(), rng);
    }
    Evaluation e{project(y.value(), weights), tape.kink_signature()};
    if (with_backward) {
      tape.backward(y, weights);
      for (const auto& v : vars) grads->push_back(v.grad());
    }
    return e;
  };

  std::vector<TensorD> analytic;
  const Evaluation base = evaluate(true, &analytic);

  GradCheckReport report;
  for (size_t in = 0; in < probe.size(); ++in) {
    for (int64_t i = 0; i < probe[in].size(); ++i) {
      const double orig = probe[in][i];
      probe[in][i] = orig + options.eps;
      const Evaluation plus = evaluate(false, nullptr);
      probe[in][i] = orig - options.eps;
      const Evaluation minus = evaluate(false, nullptr);
      probe[in][i] = orig;
      if (plus.kinks != base.kinks || minus.kinks != base.kinks) {
        report.skipped.push_back({in, i});
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * options.eps);
      note(report, in, i, analytic[in][i], numeric);
    }
  }
  report.passed = report.max_rel_error < options.tol;
  return report;
}

GradCheckReport grad_check(const ScalarFunction& f, const GradientFunction& grad,
                           std::span<const double> x, const GradCheckOptions& options) {
  std::vector<double> probe(x.begin(), x.end());
  const std::vector<double> analytic = grad(probe);
  if (analytic.size() != probe.size()) {
    throw DimensionError("gradient has " + std::to_string(analytic.size()) +
                         " entries for an input of " + std::to_string(probe.size()));
  }
  GradCheckReport report;
  for (size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + options.eps;
    const double plus = f(probe);
    probe[i] = orig - options.eps;
    const double minus = f(probe);
    probe[i] = orig;
    note(report, 0, static_cast<int64_t>(i), analytic[i], (plus - minus) / (2.0 * options.eps));
  }
  report.passed = report.max_rel_error < options.tol;
  return report;
}

}  // namespace dpnet
