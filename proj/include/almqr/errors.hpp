// Copyright 2026 The almqr Authors
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

namespace almqr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad input: dimension or weight mismatch, malformed spec, unsupported
/// combination of arguments.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A point lies outside the domain or image where an operation is defined.
class DomainError : public Error {
public:
  using Error::Error;
};

/// A numerical procedure failed (root solver, continuation, quadrature).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// The fiber over a point contains a critical point, so quantities built
/// from inverse differentials (H, branch differentials) are undefined there.
class SingularFiberError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Path continuation could not make progress; `t` is where it stalled.
class StepUnderflowError : public NumericalError {
public:
  StepUnderflowError(const std::string& what, double t)
      : NumericalError(what + " (t=" + std::to_string(t) + ")"), t_(t) {}
  double t() const noexcept { return t_; }

private:
  double t_;
};

}  // namespace almqr
