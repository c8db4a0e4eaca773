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

#include <filesystem>
#include <iosfwd>

#include "dpnet/tensor.hpp"

namespace dpnet {

// Binary PPM (P6, maxval 255) to a 1 x 3 x H x W tensor scaled by 1/255.
// Throws FormatError on malformed input.
Tensor read_ppm(std::istream& is);
Tensor load_ppm(const std::filesystem::path& path);

}  // namespace dpnet
