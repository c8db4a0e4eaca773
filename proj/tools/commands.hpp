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
#include <iosfwd>
#include <optional>
#include <string>

// Subcommand implementations behind the dpnet executable. Each returns the
// process exit code: 0 success, 1 check failure, 2 usage or input error.
namespace dpnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

struct SummarizeOptions {
  std::string config;  // empty: defaults
  std::optional<int> input_size;
  bool json = false;
};

struct ForwardOptions {
  std::string config;
  std::string weights;
  bool random_weights = false;
  uint64_t seed = 0;
  std::string input;
  bool random_input = false;
  std::optional<uint64_t> input_seed;  // defaults to seed
  std::string dump_dir;
  std::string save_weights;
  bool detect = false;
};

struct GradcheckOptions {
  std::string module;
  uint64_t seed = 0;
  double eps = 1e-5;
  double tol = 1e-5;
};

struct BenchOptions {
  std::string config;
  int iters = 5;
  uint64_t seed = 0;
};

int cmd_summarize(const SummarizeOptions& o, std::ostream& out, std::ostream& err);
int cmd_forward(const ForwardOptions& o, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckOptions& o, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err);

}  // namespace dpnet::cli
