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

#include "kmstat/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>

#include "kmstat/errors.hpp"
#include "kmstat/kernels.hpp"
#include "kmstat/operators.hpp"

namespace kmstat {
namespace {

std::string format_param(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  std::string s(buf);
  // Prefer the short form when it round-trips.
  std::snprintf(buf, sizeof(buf), "%g", value);
  if (std::strtod(buf, nullptr) == value) s = buf;
  return s;
}

}  // namespace

double SurvivalModel::density(double) const {
  throw ModelNotContinuous("model '" + describe() + "' has no density");
}

double SurvivalModel::quantile(double) const {
  throw ModelNotSamplable("model '" + describe() + "' has no quantile function");
}

double SurvivalModel::survival_quantile(double v) const {
  if (!(v >= 0.0 && v <= 1.0))
    throw InvalidParameter("survival_quantile level must lie in [0, 1]");
  return quantile(1.0 - v);
}

double SurvivalModel::hazard_density(double x) const {
  const double s = survival(x);
  if (!(s > 0.0))
    throw SingularSurvival("hazard density requested where S(x) = 0");
  return density(x) / s;
}

double SurvivalModel::mean() const {
  // E(T) = integral of the survivor function for positive variables.
  auto tail = integrate_improper([this](double x) { return survival(x); }, 0.0);
  if (!tail.finite) throw DivergentIntegral("model mean does not exist");
  return tail.value;
}

double CensoringModel::quantile(double) const {
  throw ModelNotSamplable("censoring model '" + describe() +
                          "' has no quantile function");
}

// ---------------------------------------------------------------------------
// Exponential survival model.
// ---------------------------------------------------------------------------

namespace {

class ExponentialModel final : public SurvivalModel {
 public:
  explicit ExponentialModel(double rate) : rate_(rate) {}

  double cdf(double x) const override {
    return x <= 0.0 ? 0.0 : -std::expm1(-rate_ * x);
  }
  double survival(double x) const override {
    return x <= 0.0 ? 1.0 : std::exp(-rate_ * x);
  }
  double cumulative_hazard(double x) const override {
    return x <= 0.0 ? 0.0 : rate_ * x;
  }
  bool has_density() const override { return true; }
  double density(double x) const override {
    return x < 0.0 ? 0.0 : rate_ * std::exp(-rate_ * x);
  }
  bool has_quantile() const override { return true; }
  double quantile(double p) const override {
    if (!(p >= 0.0 && p < 1.0)) {
      if (p == 1.0) return kInf;
      throw InvalidParameter("quantile level must lie in [0, 1]");
    }
    return -std::log1p(-p) / rate_;
  }
  double survival_quantile(double v) const override {
    if (!(v > 0.0 && v <= 1.0)) {
      if (v == 0.0) return kInf;
      throw InvalidParameter("survival_quantile level must lie in [0, 1]");
    }
    return -std::log(v) / rate_;
  }
  double mean() const override { return 1.0 / rate_; }
  std::optional<double> exponential_rate() const override { return rate_; }
  std::string describe() const override { return "exp:" + format_param(rate_); }

  double rate() const { return rate_; }

 private:
  double rate_;
};

// Proportional (Koziol-Green) censoring: 1 - G = S_base^gamma.
class PowerCensoring final : public CensoringModel {
 public:
  PowerCensoring(SurvivalModelPtr base, double gamma)
      : base_(std::move(base)), gamma_(gamma) {}

  double survivor(double x) const override {
    if (gamma_ == 0.0) return 1.0;
    return std::pow(base_->survival(x), gamma_);
  }
  double survivor_left(double x) const override {
    if (!base_->continuous())
      throw ModelNotContinuous("left limits need a continuous base model");
    return survivor(x);
  }
  bool has_quantile() const override {
    return gamma_ == 0.0 || base_->has_quantile();
  }
  double quantile(double p) const override {
    if (gamma_ == 0.0) return kInf;  // never censors
    if (!(p >= 0.0 && p < 1.0)) {
      if (p == 1.0) return support_upper();
      throw InvalidParameter("quantile level must lie in [0, 1]");
    }
    return base_->quantile(1.0 - std::pow(1.0 - p, 1.0 / gamma_));
  }
  bool continuous() const override { return base_->continuous(); }
  double support_upper() const override {
    return gamma_ == 0.0 ? kInf : base_->support_upper();
  }
  std::string describe() const override { return "kg:" + format_param(gamma_); }

 private:
  SurvivalModelPtr base_;
  double gamma_;
};

}  // namespace

SurvivalModelPtr exponential_model(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw InvalidParameter("exponential rate must be positive and finite");
  return std::make_shared<ExponentialModel>(rate);
}

JointModel koziol_green(SurvivalModelPtr base, double gamma) {
  if (!base) throw InvalidParameter("koziol_green: null base model");
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw InvalidParameter("koziol_green: gamma must be >= 0 and finite");
  return JointModel(base, std::make_shared<PowerCensoring>(base, gamma));
}

JointModel::JointModel(SurvivalModelPtr survival, CensoringModelPtr censoring)
    : survival_(std::move(survival)), censoring_(std::move(censoring)) {
  if (!survival_ || !censoring_)
    throw InvalidParameter("JointModel: null component");
  tau_ = std::min(survival_->support_upper(), censoring_->support_upper());
}

double JointModel::survival_left(double) const {
  throw ModelNotContinuous("left limits of a discrete survival model are unsupported");
}

std::string JointModel::describe() const {
  return survival_->describe() + "|" + censoring_->describe();
}

CensoredSample sample_censored(const JointModel& joint, std::size_t n,
                               Rng& rng) {
  if (n == 0) throw InvalidParameter("sample_censored: n must be >= 1");
  if (!joint.survival().has_quantile())
    throw ModelNotSamplable("survival model '" + joint.survival().describe() +
                            "' cannot be sampled");
  if (!joint.censoring().has_quantile())
    throw ModelNotSamplable("censoring model '" + joint.censoring().describe() +
                            "' cannot be sampled");
  std::vector<CensoredObservation> raw;
  raw.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = joint.survival().quantile(rng.uniform_open());
    const double c = joint.censoring().quantile(rng.uniform_open());
    raw.push_back({std::min(t, c), t <= c});
  }
  return sort_censored(std::move(raw));
}

SurvivalModelPtr parse_survival_model(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string family = spec.substr(0, colon);
  if (family == "exp") {
    if (colon == std::string::npos)
      throw ParseError("model spec '" + spec + "': expected exp:RATE");
    try {
      std::size_t used = 0;
      const double rate = std::stod(spec.substr(colon + 1), &used);
      if (used != spec.size() - colon - 1) throw std::invalid_argument(spec);
      return exponential_model(rate);
    } catch (const InvalidParameter&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("model spec '" + spec + "': cannot parse rate");
    }
  }
  throw ParseError("unknown model family in '" + spec + "' (supported: exp:RATE)");
}

JointModel parse_joint_model(SurvivalModelPtr base,
                             const std::string& censor_spec) {
  if (censor_spec.empty() || censor_spec == "none")
    return koziol_green(std::move(base), 0.0);
  const auto colon = censor_spec.find(':');
  if (censor_spec.substr(0, colon) == "kg" && colon != std::string::npos) {
    try {
      std::size_t used = 0;
      const double gamma = std::stod(censor_spec.substr(colon + 1), &used);
      if (used != censor_spec.size() - colon - 1)
        throw std::invalid_argument(censor_spec);
      return koziol_green(std::move(base), gamma);
    } catch (const InvalidParameter&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("censoring spec '" + censor_spec +
                       "': cannot parse gamma");
    }
  }
  throw ParseError("unknown censoring spec '" + censor_spec +
                   "' (supported: kg:GAMMA, none)");
}

// ---------------------------------------------------------------------------
// Condition diagnostics.
// ---------------------------------------------------------------------------

namespace {

double model_scale(const SurvivalModel& model) {
  if (model.has_quantile()) {
    const double q = model.quantile(0.9);
    if (std::isfinite(q) && q > 0.0) return std::max(1.0, q);
  }
  return 1.0;
}

// Improper integral of `g` against dF, reporting the tail verdict.
IntegralDiagnostic integrate_dF_checked(const SurvivalModel& model,
                                        const RealFn& g,
                                        const QuadratureOptions& opts) {
  IntegralDiagnostic out;
  const double tau = model.support_upper();
  auto integrand = [&](double x) { return g(x) * model.density(x); };
  if (std::isfinite(tau)) {
    out.value = integrate(integrand, 0.0, tau, opts);
    out.finite = true;
    return out;
  }
  const TailIntegral tail =
      integrate_improper(integrand, 0.0, opts, model_scale(model));
  out.finite = tail.finite;
  out.value = tail.value;
  out.tail_increments = tail.increments;
  return out;
}

}  // namespace

ConditionDiagnostic condition_check(const JointModel& joint,
                                    const std::shared_ptr<const Kernel>& kernel,
                                    ConditionSet which,
                                    const QuadratureOptions& opts) {
  if (!kernel) throw InvalidParameter("condition_check: null kernel");
  const SurvivalModel& model = joint.survival();
  if (!model.has_density() || !model.continuous())
    throw ModelNotContinuous(
        "condition diagnostics need a continuous survival model with density");

  // Inner integrals run a decade tighter so their noise stays below the
  // outer tolerance.
  QuadratureOptions inner_opts = opts;
  inner_opts.rel_tol = std::max(opts.rel_tol * 0.1, 1e-11);

  const bool condition2 = which == ConditionSet::kCondition2;

  // Part i: the double integral of K(x,y)^2 with censoring weights on one
  // (Condition 1) or both (Condition 2) coordinates.
  IntegralDiagnostic pair_part;
  bool inner_divergent = false;
  std::vector<double> inner_evidence;
  auto pair_weight_x = [&](double x) {
    const double gbar = joint.censoring().survivor_left(x);
    if (!(gbar > 0.0))
      throw SingularSurvival("1 - G(x-) vanished inside the diagnostics");
    return 1.0 / gbar;
  };
  auto inner_integral = [&](double x) {
    auto g = [&](double y) {
      const double k = (*kernel)(x, y);
      double w = k * k;
      if (condition2) w *= pair_weight_x(y);
      return w;
    };
    const IntegralDiagnostic inner = integrate_dF_checked(model, g, inner_opts);
    if (!inner.finite) {
      inner_divergent = true;
      inner_evidence = inner.tail_increments;
      throw DivergentIntegral("inner integral diverged");
    }
    return inner.value;
  };
  try {
    pair_part = integrate_dF_checked(
        model, [&](double x) { return pair_weight_x(x) * inner_integral(x); },
        opts);
  } catch (const DivergentIntegral&) {
    if (!inner_divergent) throw;
    pair_part.finite = false;
    pair_part.tail_increments = inner_evidence;
  }

  // Part ii: the diagonal integral of |K'(x,x)| with the regime's weight.
  const TransformedKernel kprime_fn = transformed_kernel(
      joint.survival_ptr(), kernel, inner_opts);
  auto diag_weight = [&](double x) {
    const double gbar = joint.censoring().survivor_left(x);
    if (!(gbar > 0.0))
      throw SingularSurvival("1 - G(x-) vanished inside the diagnostics");
    // S(x)/(1 - H(x-)) reduces to 1/(1 - G(x-)) for continuous F.
    if (condition2) return 1.0 / gbar;
    return std::sqrt(model.survival(x) / gbar);
  };
  const IntegralDiagnostic diag_part = integrate_dF_checked(
      model,
      [&](double x) { return diag_weight(x) * std::fabs(kprime_fn(x, x)); },
      opts);

  ConditionDiagnostic out;
  out.pair_part = pair_part;
  out.diag_part = diag_part;
  out.finite = pair_part.finite && diag_part.finite;
  return out;
}

}  // namespace kmstat
