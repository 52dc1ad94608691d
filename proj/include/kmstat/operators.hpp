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

#ifndef KMSTAT_OPERATORS_HPP_
#define KMSTAT_OPERATORS_HPP_

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "kmstat/kernels.hpp"
#include "kmstat/models.hpp"
#include "kmstat/quadrature.hpp"

namespace kmstat {

/// The Efron-Johnstone forward operator:
/// (A g)(x) = g(x) - S(x)^{-1} integral_x^inf g dF. Annihilates constants.
/// The returned function throws SingularSurvival where S(x) = 0.
RealFn forward_operator(SurvivalModelPtr model, RealFn g,
                        const QuadratureOptions& opts = {});

/// The projection phi(y) = integral_0^tau K(x, y) dF(x), evaluated through a
/// registered closed form when the kernel has one, by quadrature otherwise.
RealFn projection(SurvivalModelPtr model, KernelPtr kernel, double tau = kInf,
                  const QuadratureOptions& opts = {});

/// The transformed kernel K' = A1 A2 K, i.e. the four-term expansion
/// K(x,y) - S(x)^{-1} int_x K(s,y) dF(s) - S(y)^{-1} int_y K(x,t) dF(t)
///        + (S(x) S(y))^{-1} int_x int_y K dF dF.
///
/// Uses a registered closed form when available; the quadrature path caches
/// the inner tail integrals per second argument so repeated evaluation does
/// not pay the nested cost twice. Thread-safe.
class TransformedKernel {
 public:
  TransformedKernel(SurvivalModelPtr model, KernelPtr kernel,
                    const QuadratureOptions& opts = {});

  double operator()(double x, double y) const;

  bool has_closed_form() const { return closed_.has_value(); }

  /// Always evaluates the four-term quadrature expansion (oracle path for
  /// validating registered closed forms).
  double quadrature_eval(double x, double y) const;

  const SurvivalModel& model() const { return *model_; }
  const Kernel& source() const { return *kernel_; }
  const SurvivalModelPtr& model_ptr() const { return model_; }
  const KernelPtr& source_ptr() const { return kernel_; }

 private:
  struct TailCache {
    std::mutex mu;
    std::map<double, std::map<double, double>> rows;
  };

  // integral_lower^tauF K(arg, t) dF(t); the cache rows are keyed by the
  // lower limit so the double term reuses one row across its outer nodes.
  double tail_integral(double lower, double arg) const;
  double cached_tail(double lower, double arg) const;

  SurvivalModelPtr model_;
  KernelPtr kernel_;
  QuadratureOptions opts_;
  QuadratureOptions inner_opts_;
  std::optional<BivariateFn> closed_;

  // Per-y memo of s -> integral_s K(y, t) dF(t), shared across evaluations
  // (and across copies of this kernel).
  std::shared_ptr<TailCache> cache_;
};

TransformedKernel transformed_kernel(SurvivalModelPtr model, KernelPtr kernel,
                                     const QuadratureOptions& opts = {});

enum class Regime {
  kNonDegenerate,     // Var_F(phi) > 0: sqrt(n) scaling
  kDegenerateZero,    // phi = 0 F-a.s.: n scaling
  kDegenerateConstant // phi = c != 0 F-a.s.: n scaling
};

const char* regime_name(Regime regime);

struct RegimeClassification {
  Regime regime = Regime::kNonDegenerate;
  double var_phi = 0.0;
  double phi_mean = 0.0;
};

/// Classifies the degeneracy regime of (model, kernel) by estimating the
/// mean and variance of the projection on a model-quantile grid. `tol` is
/// relative to E_F(phi^2); misclassification silently changes the scaling,
/// so it is surfaced as a parameter.
RegimeClassification classify_regime(SurvivalModelPtr model, KernelPtr kernel,
                                     double tau = kInf, double tol = 1e-8,
                                     const QuadratureOptions& opts = {});

/// Asymptotic variance of the non-degenerate regime,
/// sigma^2 = integral_0^tau S(x)/(1 - H(x-)) (A phi)^2(x) dF(x).
/// The CLT for the V-statistic has variance 4 sigma^2. Throws
/// DivergentIntegral when the tail fails to settle.
double sigma2(const JointModel& joint, KernelPtr kernel,
              const QuadratureOptions& opts = {});

}  // namespace kmstat

#endif  // KMSTAT_OPERATORS_HPP_
