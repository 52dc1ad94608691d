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

#ifndef KMSTAT_QUADRATURE_HPP_
#define KMSTAT_QUADRATURE_HPP_

#include <functional>
#include <vector>

namespace kmstat {

using RealFn = std::function<double(double)>;

struct QuadratureOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  int max_depth = 48;
};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
/// Computed once per order and cached; safe for concurrent use.
const std::vector<std::pair<double, double>>& gauss_legendre_rule(int points);

/// Fixed n-point Gauss-Legendre estimate of the integral of f over [a, b].
double gauss_legendre(const RealFn& f, double a, double b, int points = 15);

/// Adaptive Gauss-Legendre integration over the finite interval [a, b].
///
/// Panels are bisected until the two-level estimate settles within the
/// tolerance budget, which is split between halves on each recursion.
/// Throws QuadratureFailure on non-finite integrand values or when the
/// depth limit is exhausted before the estimate settles.
double integrate(const RealFn& f, double a, double b,
                 const QuadratureOptions& opts = {});

/// Verdict of an integral over [a, infinity) evaluated by geometric
/// truncation. `increments` holds the per-doubling tail contributions;
/// when the verdict is divergent they are the non-settling evidence.
struct TailIntegral {
  bool finite = false;
  double value = 0.0;
  std::vector<double> increments;
};

/// Integrates f over [a, infinity) on the windows [a, T], [T, 2T], ...
/// with T doubled until the tail increment falls below the relative
/// tolerance. Divergence is declared when increments fail to decay over
/// `nondecay_limit` consecutive doublings or grow past overflow guards.
TailIntegral integrate_improper(const RealFn& f, double a,
                                const QuadratureOptions& opts = {},
                                double initial_span = 1.0,
                                int max_doublings = 60,
                                int nondecay_limit = 6);

}  // namespace kmstat

#endif  // KMSTAT_QUADRATURE_HPP_
