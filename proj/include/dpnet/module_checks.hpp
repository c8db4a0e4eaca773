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
#include <string>
#include <vector>

#include "dpnet/gradcheck.hpp"

namespace dpnet {

// Modules with a ready-made double-precision gradient check at toy sizes:
// lsam, lcam-td, lcam-bu, asb (stride 1) and ciou.
const std::vector<std::string>& gradient_check_modules();

// Draws inputs and parameters from Lcg64(seed) and checks the gradient with
// respect to all of them (ciou: the predicted box, alpha held constant).
// Throws ConfigError for an unknown module name.
GradCheckReport check_module_gradient(const std::string& module, uint64_t seed,
                                      const GradCheckOptions& options = {});

}  // namespace dpnet
