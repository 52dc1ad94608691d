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

#ifndef KMSTAT_KERNELS_HPP_
#define KMSTAT_KERNELS_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "kmstat/models.hpp"
#include "kmstat/quadrature.hpp"

namespace kmstat {

using BivariateFn = std::function<double(double, double)>;

/// Symmetric bivariate kernel on the positive half-line.
///
/// Built-in kernels may also carry closed forms of derived quantities for
/// specific survival models (the transformed kernel K' = A1 A2 K and the
/// projection of K against F). The operators module consults these hooks
/// and falls back to quadrature when they return nothing.
class Kernel {
 public:
  virtual ~Kernel() = default;

  virtual double operator()(double x, double y) const = 0;

  /// Round-trippable kernel spec, e.g. "ou", "gauss:0.5", "prod:1".
  virtual std::string name() const = 0;

  virtual bool positive_definite() const { return false; }
  virtual bool bounded() const { return false; }

  /// Closed form of K' = A1 A2 K under `model`, when known.
  virtual std::optional<BivariateFn> transformed_closed_form(
      const SurvivalModel& model) const {
    (void)model;
    return std::nullopt;
  }

  /// Closed form of y -> integral_0^tau K(x, y) dF(x) under `model`, when
  /// known for the requested truncation point.
  virtual std::optional<RealFn> projection_closed_form(
      const SurvivalModel& model, double tau) const {
    (void)model;
    (void)tau;
    return std::nullopt;
  }
};

using KernelPtr = std::shared_ptr<const Kernel>;

/// Ornstein-Uhlenbeck kernel K(x, y) = exp(-|x - y|).
KernelPtr ou_kernel();

/// Gaussian kernel K(x, y) = exp(-(x - y)^2 / (2 bw^2)), bw > 0.
KernelPtr gaussian_kernel(double bandwidth);

/// Product kernel K(x, y) = (x - center)(y - center). center = 0 gives the
/// classic non-degenerate example; center = E(T) makes it degenerate.
KernelPtr product_kernel(double center);

/// Cramer-von Mises kernel of a continuous null model:
/// K(x, y) = S0(max(x,y)) + (F0(x)^2 + F0(y)^2)/2 - 2/3.
/// Throws ModelNotContinuous for discrete nulls.
KernelPtr cvm_kernel(SurvivalModelPtr null_model);

/// Quadrature of the defining integral of the CvM kernel,
/// integral (1{x<=t} - F0(t))(1{y<=t} - F0(t)) dF0(t); validation oracle for
/// the closed form.
double cvm_defining_integral(const SurvivalModel& null_model, double x,
                             double y, const QuadratureOptions& opts = {});

/// Parses the kernel mini-language: `ou`, `gauss:BW`, `prod:CENTER`, `cvm`
/// (the latter binds to `null_model`, which must then be non-null).
KernelPtr parse_kernel(const std::string& spec, SurvivalModelPtr null_model = {});

}  // namespace kmstat

#endif  // KMSTAT_KERNELS_HPP_
