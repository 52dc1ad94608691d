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

#include "kmstat/operators.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "kmstat/errors.hpp"

namespace kmstat {
namespace {

double model_cdf_at(const SurvivalModel& model, double tau) {
  if (!std::isfinite(tau) || tau >= model.support_upper()) {
    const double upper = model.support_upper();
    return std::isfinite(upper) ? model.cdf(upper) : 1.0;
  }
  return model.cdf(tau);
}

// integral_a^tau g dF on the survivor scale (v = S(t)) when an inverse
// survivor exists, falling back to the density representation. The survivor
// scale keeps deep-tail integrals well conditioned where F saturates at 1.
//
// `split_at` marks a known kink of g (kernels like the OU or CvM ones are
// only piecewise smooth across the diagonal). Panel-halving error estimates
// are blind to a kink that sits very close to a panel edge, so the integral
// is evaluated piecewise around it.
double integrate_tail_dF(const SurvivalModel& model, const RealFn& g, double a,
                         double tau, const QuadratureOptions& opts,
                         double split_at = -1.0) {
  if (model.has_quantile()) {
    const double v_hi = a <= 0.0 ? 1.0 : model.survival(a);
    const double v_lo =
        tau >= model.support_upper() ? 0.0 : model.survival(tau);
    if (v_lo >= v_hi) return 0.0;
    auto integrand = [&](double v) { return g(model.survival_quantile(v)); };
    const double v_split = split_at > 0.0 ? model.survival(split_at) : -1.0;
    if (v_split > v_lo && v_split < v_hi) {
      return integrate(integrand, v_lo, v_split, opts) +
             integrate(integrand, v_split, v_hi, opts);
    }
    return integrate(integrand, v_lo, v_hi, opts);
  }
  if (!model.has_density())
    throw QuadratureFailure("model '" + model.describe() +
                            "' supports neither quantile nor density integration");
  auto integrand = [&](double x) { return g(x) * model.density(x); };
  if (std::isfinite(tau)) {
    if (split_at > a && split_at < tau) {
      return integrate(integrand, a, split_at, opts) +
             integrate(integrand, split_at, tau, opts);
    }
    return integrate(integrand, a, tau, opts);
  }
  double head = 0.0;
  double lower = a;
  if (split_at > a && std::isfinite(split_at)) {
    head = integrate(integrand, a, split_at, opts);
    lower = split_at;
  }
  const TailIntegral tail = integrate_improper(integrand, lower, opts);
  if (!tail.finite)
    throw DivergentIntegral("tail integral against dF failed to settle");
  return head + tail.value;
}

}  // namespace

RealFn forward_operator(SurvivalModelPtr model, RealFn g,
                        const QuadratureOptions& opts) {
  if (!model) throw InvalidParameter("forward_operator: null model");
  return [model = std::move(model), g = std::move(g), opts](double x) {
    const double s = model->survival(x);
    if (!(s > 0.0))
      throw SingularSurvival("forward operator evaluated where S(x) = 0");
    const double tail =
        integrate_tail_dF(*model, g, x, model->support_upper(), opts);
    return g(x) - tail / s;
  };
}

RealFn projection(SurvivalModelPtr model, KernelPtr kernel, double tau,
                  const QuadratureOptions& opts) {
  if (!model || !kernel) throw InvalidParameter("projection: null argument");
  if (auto closed = kernel->projection_closed_form(*model, tau)) return *closed;
  return [model = std::move(model), kernel = std::move(kernel), tau,
          opts](double y) {
    // Split at the diagonal, where kernels are allowed a kink.
    return integrate_tail_dF(
        *model, [&](double x) { return (*kernel)(x, y); }, 0.0, tau, opts, y);
  };
}

TransformedKernel::TransformedKernel(SurvivalModelPtr model, KernelPtr kernel,
                                     const QuadratureOptions& opts)
    : model_(std::move(model)), kernel_(std::move(kernel)), opts_(opts) {
  if (!model_ || !kernel_)
    throw InvalidParameter("TransformedKernel: null argument");
  closed_ = kernel_->transformed_closed_form(*model_);
  inner_opts_ = opts_;
  inner_opts_.rel_tol = opts_.rel_tol * 0.1;  // inner integrals one decade tighter
  cache_ = std::make_shared<TailCache>();
}

double TransformedKernel::operator()(double x, double y) const {
  if (closed_) return (*closed_)(x, y);
  return quadrature_eval(x, y);
}

double TransformedKernel::tail_integral(double lower, double arg) const {
  return integrate_tail_dF(
      *model_, [&](double t) { return (*kernel_)(arg, t); }, lower,
      model_->support_upper(), inner_opts_, arg);
}

double TransformedKernel::cached_tail(double lower, double arg) const {
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto row = cache_->rows.find(lower);
    if (row != cache_->rows.end()) {
      auto hit = row->second.find(arg);
      if (hit != row->second.end()) return hit->second;
    }
  }
  const double value = tail_integral(lower, arg);
  std::lock_guard<std::mutex> lock(cache_->mu);
  auto& row = cache_->rows[lower];
  row.emplace(arg, value);
  // Keep the memo from growing without bound under random access patterns.
  if (cache_->rows.size() > 512) cache_->rows.erase(cache_->rows.begin());
  return value;
}

double TransformedKernel::quadrature_eval(double x, double y) const {
  const double sx = model_->survival(x);
  const double sy = model_->survival(y);
  if (!(sx > 0.0) || !(sy > 0.0))
    throw SingularSurvival("transformed kernel evaluated where S = 0");

  // By the symmetry of K, int_x K(s, y) dF(s) = int_x K(y, t) dF(t).
  const double t1 = cached_tail(x, y);
  const double t2 = cached_tail(y, x);
  // Double term int_x [ int_y K(s, t) dF(t) ] dF(s): one cache row (lower
  // limit y) serves every outer node s. The inner value is only piecewise
  // smooth across s = y, so the outer integral splits there too.
  const double t3 = integrate_tail_dF(
      *model_, [&](double s) { return cached_tail(y, s); }, x,
      model_->support_upper(), opts_, y);
  return (*kernel_)(x, y) - t1 / sx - t2 / sy + t3 / (sx * sy);
}

TransformedKernel transformed_kernel(SurvivalModelPtr model, KernelPtr kernel,
                                     const QuadratureOptions& opts) {
  return TransformedKernel(std::move(model), std::move(kernel), opts);
}

const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::kNonDegenerate:
      return "non-degenerate";
    case Regime::kDegenerateZero:
      return "degenerate-zero";
    case Regime::kDegenerateConstant:
      return "degenerate-constant";
  }
  return "unknown";
}

RegimeClassification classify_regime(SurvivalModelPtr model, KernelPtr kernel,
                                     double tau, double tol,
                                     const QuadratureOptions& opts) {
  if (!model || !kernel)
    throw InvalidParameter("classify_regime: null argument");
  if (!(tol > 0.0)) throw InvalidParameter("classify_regime: tol must be > 0");
  const RealFn phi = projection(model, kernel, tau, opts);

  const double mass = model_cdf_at(*model, tau);
  if (!(mass > 0.0))
    throw QuadratureFailure("classify_regime: no F-mass below tau");
  double m1 = 0.0, m2 = 0.0;
  if (model->has_quantile()) {
    m1 = integrate([&](double u) { return phi(model->quantile(u)); }, 0.0,
                   mass, opts) /
         mass;
    m2 = integrate(
             [&](double u) {
               const double v = phi(model->quantile(u));
               return v * v;
             },
             0.0, mass, opts) /
         mass;
  } else {
    const double upper = std::isfinite(tau) ? tau : model->support_upper();
    if (!std::isfinite(upper))
      throw QuadratureFailure(
          "classify_regime: model without quantile needs a finite tau");
    m1 = integrate([&](double x) { return phi(x) * model->density(x); }, 0.0,
                   upper, opts) /
         mass;
    m2 = integrate(
             [&](double x) {
               const double v = phi(x);
               return v * v * model->density(x);
             },
             0.0, upper, opts) /
         mass;
  }

  RegimeClassification out;
  out.phi_mean = m1;
  out.var_phi = std::max(0.0, m2 - m1 * m1);
  // The variance threshold is tol relative to E_F(phi^2), floored at tol^2
  // so quadrature noise around an exactly-zero projection stays degenerate.
  const double var_threshold = tol * std::max(m2, tol);
  const double mean_threshold = std::sqrt(var_threshold);
  if (out.var_phi > var_threshold) {
    out.regime = Regime::kNonDegenerate;
  } else if (std::fabs(m1) < mean_threshold) {
    out.regime = Regime::kDegenerateZero;
  } else {
    out.regime = Regime::kDegenerateConstant;
  }
  return out;
}

double sigma2(const JointModel& joint, KernelPtr kernel,
              const QuadratureOptions& opts) {
  if (!kernel) throw InvalidParameter("sigma2: null kernel");
  const SurvivalModelPtr& model = joint.survival_ptr();
  if (!model->has_density() || !model->continuous())
    throw QuadratureFailure(
        "sigma2 needs a continuous survival model with a density");
  const double tau = joint.tau();
  const RealFn phi = projection(model, kernel, tau, opts);
  const RealFn a_phi = forward_operator(model, phi, opts);

  // S(x)/(1 - H(x-)) reduces to 1/(1 - G(x-)) for continuous F.
  auto integrand = [&](double x) {
    const double g_bar = joint.censoring().survivor_left(x);
    if (!(g_bar > 0.0))
      throw SingularSurvival("sigma2 integrand evaluated where 1 - G(x-) = 0");
    const double v = a_phi(x);
    return v * v / g_bar * model->density(x);
  };
  if (std::isfinite(tau)) return integrate(integrand, 0.0, tau, opts);
  const TailIntegral tail = integrate_improper(integrand, 0.0, opts);
  if (!tail.finite)
    throw DivergentIntegral("sigma2: tail of the variance integral failed to settle");
  return tail.value;
}

}  // namespace kmstat
