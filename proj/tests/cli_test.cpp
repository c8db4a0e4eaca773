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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "dpnet/errors.hpp"
#include "dpnet/ppm.hpp"

namespace dpnet::cli {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "dpnet_cli_test" / name;
  fs::create_directories(p.parent_path());
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

std::string ppm_bytes(int w, int h, const std::string& header_extra = "") {
  std::string s = "P6\n" + header_extra + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (int i = 0; i < w * h * 3; ++i) s.push_back(static_cast<char>((i * 37) % 256));
  return s;
}

fs::path small_config() {
  const fs::path p = scratch("small.json");
  write_file(p, R"({"input_size": 64, "stem_channels": [8, 16], "shared_asb_count": 2, "hrp_width": 32,
                   "hrp_depth": 2, "lrp_depths": [1, 1], "lrp_widths": [32, 64], "fpn_channels": 16,
                   "head_width": 16, "num_classes": 4})");
  return p;
}

TEST(Summarize, DefaultTotals) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_summarize({}, out, err), kExitOk);
  EXPECT_NE(out.str().find("Params (M): 2.267"), std::string::npos);
  EXPECT_NE(out.str().find("MACs (G): 0.991"), std::string::npos);
  EXPECT_NE(out.str().find("input 320x320"), std::string::npos);
}

TEST(Summarize, InputSizeAndErrors) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_summarize({.input_size = 160}, out, err), kExitOk);
  EXPECT_NE(out.str().find("MACs (G): 0.248"), std::string::npos);
  EXPECT_EQ(cmd_summarize({.config = scratch("missing.json").string()}, out, err), kExitUsage);
  const fs::path bad = scratch("bad.json");
  write_file(bad, R"({"widths": 3})");
  EXPECT_EQ(cmd_summarize({.config = bad.string()}, out, err), kExitUsage);
  EXPECT_NE(err.str().find("widths"), std::string::npos);
  EXPECT_EQ(cmd_summarize({.input_size = 100}, out, err), kExitUsage);
  std::ostringstream js;
  EXPECT_EQ(cmd_summarize({.json = true}, js, err), kExitOk);
  EXPECT_EQ(js.str().front(), '{');
}

TEST(Forward, RandomDumpsAreByteIdentical) {
  const fs::path a = scratch("dump_a"), b = scratch("dump_b");
  fs::remove_all(a);
  fs::remove_all(b);
  std::ostringstream out, err;
  ForwardOptions o{.config = small_config().string(), .random_weights = true, .seed = 3,
                   .random_input = true, .dump_dir = a.string(), .detect = true};
  ASSERT_EQ(cmd_forward(o, out, err), kExitOk) << err.str();
  o.dump_dir = b.string();
  ASSERT_EQ(cmd_forward(o, out, err), kExitOk) << err.str();
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    EXPECT_EQ(read_file(e.path()), read_file(b / e.path().filename())) << e.path();
    ++files;
  }
  EXPECT_EQ(files, 16);  // 15 tensors + detections
  EXPECT_EQ(read_file(a / "c1.dpnt").substr(0, 4), "DPNT");
}

TEST(Forward, WeightsRoundTripThroughFiles) {
  const fs::path w = scratch("w.dpnw"), a = scratch("rt_a"), b = scratch("rt_b");
  std::ostringstream out, err;
  ForwardOptions o{.config = small_config().string(), .random_weights = true, .seed = 5,
                   .random_input = true, .input_seed = 9, .dump_dir = a.string(),
                   .save_weights = w.string()};
  ASSERT_EQ(cmd_forward(o, out, err), kExitOk) << err.str();
  ForwardOptions l{.config = small_config().string(), .weights = w.string(), .seed = 1,
                   .random_input = true, .input_seed = 9, .dump_dir = b.string()};
  ASSERT_EQ(cmd_forward(l, out, err), kExitOk) << err.str();
  for (const char* name : {"cls1.dpnt", "reg3.dpnt", "f2.dpnt"}) {
    EXPECT_EQ(read_file(a / name), read_file(b / name));
  }
}

TEST(Forward, PpmManifestAt320) {
  const fs::path img = scratch("img320.ppm");
  write_file(img, ppm_bytes(320, 320));
  std::ostringstream out, err;
  ASSERT_EQ(cmd_forward({.random_weights = true, .input = img.string()}, out, err), kExitOk) << err.str();
  const std::string m = out.str();
  EXPECT_NE(m.find("c1 [1x128x40x40] (40x40x128)"), std::string::npos) << m;
  EXPECT_NE(m.find("c2 [1x256x20x20] (20x20x256)"), std::string::npos);
  EXPECT_NE(m.find("c3 [1x512x10x10] (10x10x512)"), std::string::npos);
  EXPECT_NE(m.find("f3 [1x128x10x10]"), std::string::npos);
}

TEST(Forward, InputErrors) {
  std::ostringstream out, err;
  const fs::path img = scratch("img300.ppm");
  write_file(img, ppm_bytes(300, 300));
  EXPECT_EQ(cmd_forward({.random_weights = true, .input = img.string()}, out, err), kExitUsage);
  EXPECT_NE(err.str().find("300x300"), std::string::npos);
  const fs::path broken = scratch("broken.ppm");
  write_file(broken, "P6\n320 320\n255\nabc");
  EXPECT_EQ(cmd_forward({.random_weights = true, .input = broken.string()}, out, err), kExitUsage);
  write_file(broken, "P3\n1 1\n255\n0 0 0");
  EXPECT_EQ(cmd_forward({.random_weights = true, .input = broken.string()}, out, err), kExitUsage);
  EXPECT_EQ(cmd_forward({.random_weights = true}, out, err), kExitUsage);
  EXPECT_EQ(cmd_forward({.weights = "x.dpnw", .random_weights = true, .random_input = true}, out, err),
            kExitUsage);
  EXPECT_EQ(cmd_forward({.random_input = true}, out, err), kExitUsage);
  EXPECT_EQ(cmd_forward({.weights = scratch("none.dpnw").string(), .random_input = true}, out, err),
            kExitUsage);
}

TEST(Gradcheck, ExitCodes) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_gradcheck({.module = "lsam", .seed = 7}, out, err), kExitOk);
  EXPECT_EQ(cmd_gradcheck({.module = "ciou", .seed = 3}, out, err), kExitOk);
  EXPECT_EQ(cmd_gradcheck({.module = "lsam", .seed = 7, .tol = 1e-12}, out, err), kExitCheckFailed);
  EXPECT_EQ(cmd_gradcheck({.module = "none"}, out, err), kExitUsage);
  EXPECT_EQ(cmd_gradcheck({.module = "asb", .eps = -1}, out, err), kExitUsage);
  EXPECT_NE(out.str().find("max_rel_error"), std::string::npos);
}

TEST(Bench, ReportsOrderedTimings) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_bench({.config = small_config().string(), .iters = 3}, out, err), kExitOk);
  std::istringstream is(out.str());
  std::string key;
  double iters = 0, mean = 0, min = 0, macs = 0, rate = 0;
  is >> key >> iters >> key >> mean >> key >> min >> key >> macs >> key >> rate;
  EXPECT_EQ(iters, 3);
  EXPECT_LE(min, mean);
  EXPECT_NEAR(rate, macs / mean, 1e-6 * rate);
  EXPECT_EQ(cmd_bench({.iters = 0}, out, err), kExitUsage);
}

TEST(Ppm, HeaderCommentsAndScaling) {
  std::istringstream is(ppm_bytes(2, 1, "# comment\n"));
  const Tensor t = read_ppm(is);
  EXPECT_EQ(t.shape(), (Shape{1, 3, 1, 2}));
  EXPECT_FLOAT_EQ(t.at(0, 0, 0, 0), 0.0f);
  EXPECT_FLOAT_EQ(t.at(0, 1, 0, 0), 37.0f / 255.0f);
  EXPECT_FLOAT_EQ(t.at(0, 0, 0, 1), 111.0f / 255.0f);
  std::istringstream deep("P6\n1 1\n65535\n\0\0\0\0\0\0");
  EXPECT_THROW(read_ppm(deep), FormatError);
  std::istringstream empty("");
  EXPECT_THROW(read_ppm(empty), FormatError);
}

}  // namespace
}  // namespace dpnet::cli
