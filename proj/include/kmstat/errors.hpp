// Copyright 2026 The kmstat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KMSTAT_ERRORS_HPP_
#define KMSTAT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace kmstat {

/// Base class of all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input validation.
class EmptySample : public Error {
 public:
  using Error::Error;
};
class NonPositiveTime : public Error {
 public:
  using Error::Error;
};
class InvalidParameter : public Error {
 public:
  using Error::Error;
};
class ParseError : public Error {
 public:
  using Error::Error;
};
class UnsortedGrid : public Error {
 public:
  using Error::Error;
};

// Model capabilities.
class ModelNotSamplable : public Error {
 public:
  using Error::Error;
};
class ModelNotContinuous : public Error {
 public:
  using Error::Error;
};

// Numerical failures.
class QuadratureFailure : public Error {
 public:
  using Error::Error;
};
class DivergentIntegral : public Error {
 public:
  using Error::Error;
};
class SingularSurvival : public Error {
 public:
  using Error::Error;
};
class DegenerateWeightMass : public Error {
 public:
  using Error::Error;
};
class NonConvergedEigensolve : public Error {
 public:
  using Error::Error;
};
class RegimeMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace kmstat

#endif  // KMSTAT_ERRORS_HPP_
