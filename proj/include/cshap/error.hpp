/*
 * Copyright 2026 The cshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace cshap {

// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not compose (operands, layers, files).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input that violates a documented constraint.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Missing files, unreadable or malformed documents.
class IoError : public Error {
 public:
  using Error::Error;
};

// A layer kind that a given algorithm cannot handle.
class UnsupportedLayerError : public Error {
 public:
  using Error::Error;
};

// Training diverged (non-finite loss).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace cshap
