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

#include "dpnet/ppm.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "dpnet/errors.hpp"

namespace dpnet {

namespace {

// Skips whitespace and '#' comments, then reads one decimal token.
long read_header_int(std::istream& is, const char* field) {
  int ch = is.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = is.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = is.get();
  }
  if (ch == EOF || !std::isdigit(ch)) throw FormatError(std::string("PPM: bad ") + field);
  long v = 0;
  while (ch != EOF && std::isdigit(ch)) {
    v = v * 10 + (ch - '0');
    if (v > 1 << 20) throw FormatError(std::string("PPM: ") + field + " too large");
    ch = is.get();
  }
  if (ch == EOF || !std::isspace(ch)) throw FormatError(std::string("PPM: bad ") + field);
  return v;
}

}  // namespace

Tensor read_ppm(std::istream& is) {
  char magic[2] = {};
  if (!is.read(magic, 2) || magic[0] != 'P' || magic[1] != '6') throw FormatError("PPM: expected P6 magic");
  const long w = read_header_int(is, "width");
  const long h = read_header_int(is, "height");
  const long maxval = read_header_int(is, "maxval");
  if (w <= 0 || h <= 0) throw FormatError("PPM: empty image");
  if (maxval != 255) throw FormatError("PPM: only maxval 255 is supported, got " + std::to_string(maxval));
  const size_t hw = static_cast<size_t>(w) * static_cast<size_t>(h);
  std::vector<unsigned char> raw(3 * hw);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw FormatError("PPM: truncated pixel data");
  }
  Tensor t({1, 3, h, w});
  for (size_t p = 0; p < hw; ++p) {
    for (size_t c = 0; c < 3; ++c) t[c * hw + p] = static_cast<float>(raw[3 * p + c]) / 255.0f;
  }
  return t;
}

Tensor load_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("PPM: cannot open " + path.string());
  return read_ppm(is);
}

}  // namespace dpnet
