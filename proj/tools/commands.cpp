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

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <vector>

#include "dpnet/analysis.hpp"
#include "dpnet/detect.hpp"
#include "dpnet/errors.hpp"
#include "dpnet/module_checks.hpp"
#include "dpnet/network.hpp"
#include "dpnet/ppm.hpp"
#include "dpnet/rng.hpp"
#include "dpnet/tensor_io.hpp"
#include "dpnet/weights.hpp"

namespace dpnet::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
 public:
  using Error::Error;
};

DpnetConfig config_from(const std::string& path) {
  return path.empty() ? DpnetConfig{} : load_config(path);
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace

int cmd_summarize(const SummarizeOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const DpnetConfig cfg = config_from(o.config);
    const CostReport rep = analyze(cfg, o.input_size.value_or(cfg.input_size));
    out << (o.json ? report_to_json(rep) + "\n" : render_summary(rep));
    return kExitOk;
  });
}

int cmd_forward(const ForwardOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.weights.empty() == !o.random_weights) {
      throw UsageError("exactly one of --weights and --random-weights is required");
    }
    if (o.input.empty() == !o.random_input) {
      throw UsageError("exactly one of --input and --random-input is required");
    }
    const DpnetConfig cfg = config_from(o.config);
    Model model = build(cfg, o.seed);
    if (!o.weights.empty()) load_weights(model, o.weights);
    if (!o.save_weights.empty()) save_weights(model, o.save_weights);

    Tensor image;
    if (o.random_input) {
      Lcg64 rng(o.input_seed.value_or(o.seed));
      image = random_uniform<float>({1, cfg.in_channels, cfg.input_size, cfg.input_size}, rng, 0.0, 1.0);
    } else {
      if (cfg.in_channels != 3) throw UsageError("PPM input requires in_channels = 3");
      image = load_ppm(o.input);
      if (image.dim(2) != cfg.input_size || image.dim(3) != cfg.input_size) {
        throw UsageError("image is " + std::to_string(image.dim(3)) + "x" + std::to_string(image.dim(2)) +
                         ", config expects " + std::to_string(cfg.input_size) + "x" +
                         std::to_string(cfg.input_size));
      }
    }

    const ForwardResult r = forward(model, image);
    std::vector<std::pair<std::string, const Tensor*>> outputs;
    const char* groups[] = {"c", "m", "f", "cls", "reg"};
    const std::array<Tensor, 3>* tensors[] = {&r.c, &r.m, &r.f, &r.cls, &r.reg};
    for (int g = 0; g < 5; ++g) {
      for (int l = 0; l < 3; ++l) outputs.emplace_back(groups[g] + std::to_string(l + 1), &(*tensors[g])[l]);
    }
    if (!o.dump_dir.empty()) fs::create_directories(o.dump_dir);
    for (const auto& [name, t] : outputs) {
      out << name << ' ' << to_string(t->shape()) << " (" << t->dim(2) << 'x' << t->dim(3) << 'x'
          << t->dim(1) << ")\n";
      if (!o.dump_dir.empty()) save_tensor(fs::path(o.dump_dir) / (name + ".dpnt"), *t);
    }
    if (o.detect) {
      DecodeOptions opts;
      opts.score_threshold = cfg.score_threshold;
      opts.image_w = image.dim(3);
      opts.image_h = image.dim(2);
      std::copy(kLevelStrides.begin(), kLevelStrides.end(), opts.strides.begin());
      const auto dets = nms(decode(r.cls, r.reg, opts), cfg.nms_threshold);
      out << "detections " << dets.size() << '\n';
      if (!o.dump_dir.empty()) {
        std::ofstream os(fs::path(o.dump_dir) / "detections.jsonl");
        write_json_lines(os, dets);
      } else {
        write_json_lines(out, dets);
      }
    }
    return kExitOk;
  });
}

int cmd_gradcheck(const GradcheckOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto& names = gradient_check_modules();
    if (std::find(names.begin(), names.end(), o.module) == names.end()) {
      throw UsageError("unknown module \"" + o.module + "\"");
    }
    if (!(o.eps > 0) || !(o.tol > 0)) throw UsageError("--eps and --tol must be positive");
    const GradCheckReport rep = check_module_gradient(o.module, o.seed, {o.eps, o.tol, o.seed});
    out << o.module << " seed " << o.seed << ": " << rep.summary() << '\n';
    return rep.passed ? kExitOk : kExitCheckFailed;
  });
}

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.iters < 1) throw UsageError("--iters must be at least 1");
    const DpnetConfig cfg = config_from(o.config);
    const Model model = build(cfg, o.seed);
    Lcg64 rng(o.seed);
    const Tensor image =
        random_uniform<float>({1, cfg.in_channels, cfg.input_size, cfg.input_size}, rng, 0.0, 1.0);
    std::vector<double> times;
    for (int i = 0; i < o.iters; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const ForwardResult r = forward(model, image);
      const auto t1 = std::chrono::steady_clock::now();
      if (!r.f[0].all_finite()) throw Error("non-finite forward output");
      times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    double mean = 0;
    for (double t : times) mean += t;
    mean /= static_cast<double>(times.size());
    const double min = *std::min_element(times.begin(), times.end());
    const MacCount macs = count_macs(cfg, cfg.input_size);
    out << std::setprecision(9) << "iters " << o.iters << '\n'
        << "mean_s " << mean << '\n'
        << "min_s " << min << '\n'
        << "macs " << macs.core << '\n'
        << "macs_per_s " << static_cast<double>(macs.core) / mean << '\n';
    return kExitOk;
  });
}

}  // namespace dpnet::cli
