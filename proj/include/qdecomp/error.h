// Copyright 2026 The qdecomp Authors. All Rights Reserved.
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

#ifndef QDECOMP_ERROR_H_
#define QDECOMP_ERROR_H_

#include <stdexcept>
#include <string>

namespace qdecomp {

// Bad input data: malformed files, invariant violations, degenerate inputs
// that an operation cannot handle. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A text or vector that has no direction (all tokens out of vocabulary).
class ZeroVectorError : public DataError {
 public:
  using DataError::DataError;
};

// Invalid arguments or configuration. The CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qdecomp

#endif  // QDECOMP_ERROR_H_
