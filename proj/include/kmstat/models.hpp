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

#ifndef KMSTAT_MODELS_HPP_
#define KMSTAT_MODELS_HPP_

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kmstat/quadrature.hpp"
#include "kmstat/rng.hpp"
#include "kmstat/survival.hpp"

namespace kmstat {

class Kernel;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Analytically known survival-time distribution: CDF F, survivor S = 1 - F,
/// cumulative hazard, density and quantile where they exist, and the
/// supremum of the support.
class SurvivalModel {
 public:
  virtual ~SurvivalModel() = default;

  virtual double cdf(double x) const = 0;
  virtual double survival(double x) const { return 1.0 - cdf(x); }
  virtual double cumulative_hazard(double x) const = 0;

  virtual bool has_density() const { return false; }
  virtual double density(double) const;

  virtual bool has_quantile() const { return false; }
  virtual double quantile(double p) const;

  /// Inverse of the survivor function, S^{-1}(v). Tail integrals transform
  /// through this rather than quantile(1 - v), which loses all precision
  /// once F saturates at 1. The default forwards to quantile(1 - v);
  /// models should override it with an accurate form.
  virtual double survival_quantile(double v) const;

  /// Hazard density dLambda/dx = density/survival for continuous models.
  double hazard_density(double x) const;

  virtual bool continuous() const { return true; }
  virtual double support_upper() const { return kInf; }

  /// Mean of the distribution; default integrates the survivor function.
  virtual double mean() const;

  /// Rate parameter when the model is exponential; kernels use this to
  /// decide whether a closed-form attachment applies.
  virtual std::optional<double> exponential_rate() const { return std::nullopt; }

  /// Round-trippable spec string, e.g. "exp:1".
  virtual std::string describe() const = 0;
};

using SurvivalModelPtr = std::shared_ptr<const SurvivalModel>;

/// Censoring-time distribution G, survivor-centric because every formula in
/// the limit theory consumes 1 - G(x-) rather than G itself.
class CensoringModel {
 public:
  virtual ~CensoringModel() = default;

  virtual double survivor(double x) const = 0;  // 1 - G(x)
  double cdf(double x) const { return 1.0 - survivor(x); }
  /// Left limit 1 - G(x-); equals survivor(x) for continuous models.
  virtual double survivor_left(double x) const { return survivor(x); }

  virtual bool has_quantile() const { return false; }
  virtual double quantile(double p) const;  // may return +inf (no censoring)

  virtual bool continuous() const { return true; }
  virtual double support_upper() const { return kInf; }

  virtual std::string describe() const = 0;
};

using CensoringModelPtr = std::shared_ptr<const CensoringModel>;

/// A (survival, censoring) pair under non-informative censoring, giving the
/// observed-time distribution through 1 - H(x) = (1 - G(x)) S(x) and the
/// observation window tau = sup{t : 1 - H(t) > 0}.
class JointModel {
 public:
  JointModel(SurvivalModelPtr survival, CensoringModelPtr censoring);

  const SurvivalModel& survival() const { return *survival_; }
  const CensoringModel& censoring() const { return *censoring_; }
  const SurvivalModelPtr& survival_ptr() const { return survival_; }
  const CensoringModelPtr& censoring_ptr() const { return censoring_; }

  double h_survivor(double x) const {
    return censoring_->survivor(x) * survival_->survival(x);
  }
  double h_survivor_left(double x) const {
    return censoring_->survivor_left(x) *
           (survival_->continuous() ? survival_->survival(x)
                                    : survival_left(x));
  }
  double tau() const { return tau_; }

  std::string describe() const;

 private:
  double survival_left(double x) const;
  SurvivalModelPtr survival_;
  CensoringModelPtr censoring_;
  double tau_ = kInf;
};

/// Exponential survival model with the given rate. Throws InvalidParameter
/// unless rate > 0.
SurvivalModelPtr exponential_model(double rate);

/// Koziol-Green proportional censoring: 1 - G(t) = S(t)^gamma. gamma = 0
/// means no censoring (G degenerate at +infinity). The event probability is
/// 1/(1 + gamma) when the base model is continuous.
JointModel koziol_green(SurvivalModelPtr base, double gamma);

/// Draws n i.i.d. censored pairs (min(T, C), 1{T <= C}) by inverse-CDF
/// sampling; deterministic given the stream. Throws ModelNotSamplable when a
/// quantile function is missing.
CensoredSample sample_censored(const JointModel& joint, std::size_t n,
                               Rng& rng);

/// Parses the model mini-language ("exp:RATE").
SurvivalModelPtr parse_survival_model(const std::string& spec);

/// Parses the censoring mini-language ("kg:GAMMA" relative to `base`, or
/// "none").
JointModel parse_joint_model(SurvivalModelPtr base, const std::string& censor_spec);

// ---------------------------------------------------------------------------
// Integrability diagnostics for the two scaling regimes.
// ---------------------------------------------------------------------------

enum class ConditionSet {
  kCondition1,  // non-degenerate case, sqrt(n) scaling
  kCondition2,  // degenerate case, n scaling
};

/// Verdict for one integral: the settled value when finite, otherwise the
/// sequence of non-settling tail increments as divergence evidence.
struct IntegralDiagnostic {
  bool finite = false;
  double value = 0.0;
  std::vector<double> tail_increments;
};

struct ConditionDiagnostic {
  bool finite = false;            // both parts finite
  IntegralDiagnostic pair_part;   // the double integral (part i)
  IntegralDiagnostic diag_part;   // the K'(x,x) integral (part ii)
};

/// Evaluates both integrals of the requested condition by adaptive
/// quadrature on geometrically escalated truncation points. The part-ii
/// integrand uses the transformed kernel K' of the (kernel, survival) pair.
ConditionDiagnostic condition_check(const JointModel& joint,
                                    const std::shared_ptr<const Kernel>& kernel,
                                    ConditionSet which,
                                    const QuadratureOptions& opts = {});

}  // namespace kmstat

#endif  // KMSTAT_MODELS_HPP_
