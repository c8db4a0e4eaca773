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

#include <stdexcept>
#include <string>

namespace dpnet {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand extents disagree (matmul inner dims, broadcasting).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A hyperparameter combination is invalid (indivisible groups, odd split,
// reduction ratio not dividing channels, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A tensor has the wrong rank or spatial size for the requested op.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated binary/text input.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpnet
