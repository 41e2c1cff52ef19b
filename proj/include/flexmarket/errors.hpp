// Copyright 2026 The flexmarket Authors
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

#ifndef FLEXMARKET_ERRORS_HPP_
#define FLEXMARKET_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace flexmarket {

/// Base class for all solver-level failures.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A prosumer whose zero-price flexibility exceeds its capacity
/// (-b/a > m): the reduced problem has an empty box for it.
class InfeasibleProsumerError : public SolverError {
 public:
  InfeasibleProsumerError(int index, const std::string& what)
      : SolverError(what), index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

/// The coupling cap cannot be met: sum of lower bounds exceeds f
/// (assumption 1 violated with the cap enabled).
class InfeasibleCapError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// An enumeration-based routine was asked to run beyond its size limit.
class SizeLimitError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace flexmarket

#endif  // FLEXMARKET_ERRORS_HPP_
