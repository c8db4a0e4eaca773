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

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace dpnet::cli;
  CLI::App app{"DPNet inference, cost and gradient tools"};
  app.require_subcommand(1);

  SummarizeOptions sum;
  auto* s = app.add_subcommand("summarize", "Print the per-layer parameter and MAC table");
  s->add_option("--config", sum.config, "JSON config (defaults when omitted)");
  s->add_option("--input-size", sum.input_size, "Square input size");
  s->add_flag("--json", sum.json, "Emit JSON instead of a table");

  ForwardOptions fwd;
  auto* f = app.add_subcommand("forward", "Run one forward pass and dump outputs");
  f->add_option("--config", fwd.config, "JSON config");
  auto* w = f->add_option("--weights", fwd.weights, "DPNW weight file");
  auto* rw = f->add_flag("--random-weights", fwd.random_weights, "Initialize weights from --seed");
  w->excludes(rw);
  f->add_option("--seed", fwd.seed, "Weight seed");
  auto* in = f->add_option("--input", fwd.input, "P6 PPM image of the config input size");
  auto* ri = f->add_flag("--random-input", fwd.random_input, "Uniform [0, 1) input");
  in->excludes(ri);
  f->add_option("--input-seed", fwd.input_seed, "Input seed (defaults to --seed)");
  f->add_option("--dump-dir", fwd.dump_dir, "Directory for DPNT dumps");
  f->add_option("--save-weights", fwd.save_weights, "Write the model weights as DPNW");
  f->add_flag("--detect", fwd.detect, "Decode, suppress and write detections");

  GradcheckOptions gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference gradient check of one module");
  g->add_option("--module", gc.module, "lsam | lcam-td | lcam-bu | asb | ciou")->required();
  g->add_option("--seed", gc.seed, "Seed");
  g->add_option("--eps", gc.eps, "Central-difference step");
  g->add_option("--tol", gc.tol, "Maximum relative error");

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "Time forward passes");
  b->add_option("--config", bench.config, "JSON config");
  b->add_option("--iters", bench.iters, "Timed iterations");
  b->add_option("--seed", bench.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (s->parsed()) return cmd_summarize(sum, std::cout, std::cerr);
  if (f->parsed()) return cmd_forward(fwd, std::cout, std::cerr);
  if (g->parsed()) return cmd_gradcheck(gc, std::cout, std::cerr);
  return cmd_bench(bench, std::cout, std::cerr);
}
