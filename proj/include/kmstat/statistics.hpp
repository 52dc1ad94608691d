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

#ifndef KMSTAT_STATISTICS_HPP_
#define KMSTAT_STATISTICS_HPP_

#include <cstddef>
#include <optional>

#include "kmstat/kernels.hpp"
#include "kmstat/models.hpp"
#include "kmstat/survival.hpp"

namespace kmstat {

enum class ScalingHint { kSqrtN, kN };

struct StatisticComponents {
  double vstat = 0.0;
  double diagonal = 0.0;
  double pair_mass = 0.0;  // (sum W)^2 - sum W^2
};

struct StatisticResult {
  double value = 0.0;
  std::size_t n = 0;
  std::size_t n_events = 0;
  ScalingHint scaling_hint = ScalingHint::kSqrtN;
  std::optional<StatisticComponents> components;
};

/// Kaplan-Meier V-statistic sum_{i,j} W_i W_j K(X_i, X_j). The double sum
/// runs over uncensored indices only (zero weights contribute nothing), so
/// the cost is quadratic in the number of events, not in n.
double vstat(const KaplanMeierFit& fit, const Kernel& kernel);

/// Kaplan-Meier U-statistic (V-statistic minus its diagonal, renormalised by
/// the off-diagonal weight mass). Throws DegenerateWeightMass when fewer
/// than two observations carry weight.
double ustat(const KaplanMeierFit& fit, const Kernel& kernel);

/// Like ustat, also reporting the exact components of the identity
/// vstat = ustat * pair_mass + diagonal.
double ustat(const KaplanMeierFit& fit, const Kernel& kernel,
             StatisticComponents& components);

/// Squared maximum mean discrepancy between the Kaplan-Meier estimate and a
/// fixed continuous null model:
///   MMD^2 = sum_{ij} W_i W_j K - 2 sum_i W_i phi0(X_i) + theta(F0),
/// with phi0 the projection of K against F0. The constant term is cached
/// per (kernel, model) pair.
double mmd2(const KaplanMeierFit& fit, const KernelPtr& kernel,
            const SurvivalModelPtr& null_model,
            const QuadratureOptions& opts = {});

/// Population target theta(F; tau) = double integral of K against F x F up
/// to tau; the centering constant of the non-degenerate CLT.
double theta_limit(const SurvivalModelPtr& model, const KernelPtr& kernel,
                   double tau = kInf, const QuadratureOptions& opts = {});

}  // namespace kmstat

#endif  // KMSTAT_STATISTICS_HPP_
