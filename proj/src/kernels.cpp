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

#include "kmstat/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>

#include "kmstat/errors.hpp"

namespace kmstat {
namespace {

std::string short_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", value);
  if (std::strtod(buf, nullptr) == value) return buf;
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

// Does the truncation point capture (numerically) all of the model's mass?
bool full_mass(const SurvivalModel& model, double tau) {
  if (tau >= model.support_upper()) return true;
  return std::isfinite(tau) && model.cdf(tau) >= 1.0 - 1e-12;
}

class OrnsteinUhlenbeckKernel final : public Kernel {
 public:
  double operator()(double x, double y) const override {
    return std::exp(-std::fabs(x - y));
  }
  std::string name() const override { return "ou"; }
  bool positive_definite() const override { return true; }
  bool bounded() const override { return true; }

  std::optional<BivariateFn> transformed_closed_form(
      const SurvivalModel& model) const override {
    // Worked out for the unit exponential only; other models go through
    // quadrature.
    const auto rate = model.exponential_rate();
    if (!rate || *rate != 1.0) return std::nullopt;
    return BivariateFn([](double x, double y) {
      const double d = std::fabs(x - y);
      return 0.5 * (1.0 - d) * std::exp(-d);
    });
  }

  std::optional<RealFn> projection_closed_form(const SurvivalModel& model,
                                               double tau) const override {
    const auto rate = model.exponential_rate();
    if (!rate || !full_mass(model, tau)) return std::nullopt;
    const double r = *rate;
    if (r == 1.0)
      return RealFn([](double y) { return (y + 0.5) * std::exp(-y); });
    return RealFn([r](double y) {
      // r * (e^{-ry} - e^{-y}) / (1 - r) + r e^{-ry} / (1 + r)
      return r * (std::exp(-r * y) - std::exp(-y)) / (1.0 - r) +
             r * std::exp(-r * y) / (1.0 + r);
    });
  }
};

class GaussianKernel final : public Kernel {
 public:
  explicit GaussianKernel(double bandwidth) : bandwidth_(bandwidth) {}
  double operator()(double x, double y) const override {
    const double d = x - y;
    return std::exp(-d * d / (2.0 * bandwidth_ * bandwidth_));
  }
  std::string name() const override { return "gauss:" + short_number(bandwidth_); }
  bool positive_definite() const override { return true; }
  bool bounded() const override { return true; }

 private:
  double bandwidth_;
};

class ProductKernel final : public Kernel {
 public:
  explicit ProductKernel(double center) : center_(center) {}
  double operator()(double x, double y) const override {
    return (x - center_) * (y - center_);
  }
  std::string name() const override { return "prod:" + short_number(center_); }
  bool positive_definite() const override { return true; }  // rank one

  std::optional<BivariateFn> transformed_closed_form(
      const SurvivalModel& model) const override {
    // A applied to the identity under exp(r) is the constant -1/r, so
    // K' = A1 A2 (x - c)(y - c) = 1/r^2 for any center.
    const auto rate = model.exponential_rate();
    if (!rate) return std::nullopt;
    const double value = 1.0 / (*rate * *rate);
    return BivariateFn([value](double, double) { return value; });
  }

  std::optional<RealFn> projection_closed_form(const SurvivalModel& model,
                                               double tau) const override {
    if (!full_mass(model, tau)) return std::nullopt;
    if (!model.exponential_rate()) return std::nullopt;
    const double slope = model.mean() - center_;
    const double c = center_;
    return RealFn([slope, c](double y) { return slope * (y - c); });
  }

 private:
  double center_;
};

class CvmKernel final : public Kernel {
 public:
  explicit CvmKernel(SurvivalModelPtr null_model)
      : null_(std::move(null_model)) {
    if (!null_) throw InvalidParameter("cvm_kernel: null model required");
    if (!null_->continuous())
      throw ModelNotContinuous("the CvM kernel needs a continuous null model");
  }

  double operator()(double x, double y) const override {
    const double fx = null_->cdf(x);
    const double fy = null_->cdf(y);
    return null_->survival(std::max(x, y)) + 0.5 * (fx * fx + fy * fy) -
           2.0 / 3.0;
  }
  std::string name() const override { return "cvm[" + null_->describe() + "]"; }
  bool positive_definite() const override { return true; }
  bool bounded() const override { return true; }

  std::optional<BivariateFn> transformed_closed_form(
      const SurvivalModel& model) const override {
    // K' = S0(max)^3 / (3 S0(x) S0(y)) whenever the transform runs against
    // the kernel's own continuous null.
    if (model.describe() != null_->describe()) return std::nullopt;
    auto null_model = null_;
    return BivariateFn([null_model](double x, double y) {
      const double smax = null_model->survival(std::max(x, y));
      const double sx = null_model->survival(x);
      const double sy = null_model->survival(y);
      if (!(sx > 0.0) || !(sy > 0.0))
        throw SingularSurvival("CvM transformed kernel evaluated where S0 = 0");
      return smax * smax * smax / (3.0 * sx * sy);
    });
  }

  std::optional<RealFn> projection_closed_form(const SurvivalModel& model,
                                               double tau) const override {
    // The projection vanishes identically under the kernel's own null once
    // the truncation point carries full mass.
    if (model.describe() != null_->describe()) return std::nullopt;
    if (!full_mass(model, tau)) return std::nullopt;
    return RealFn([](double) { return 0.0; });
  }

  const SurvivalModelPtr& null_model() const { return null_; }

 private:
  SurvivalModelPtr null_;
};

}  // namespace

KernelPtr ou_kernel() { return std::make_shared<OrnsteinUhlenbeckKernel>(); }

KernelPtr gaussian_kernel(double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw InvalidParameter("gaussian_kernel: bandwidth must be positive");
  return std::make_shared<GaussianKernel>(bandwidth);
}

KernelPtr product_kernel(double center) {
  if (!std::isfinite(center))
    throw InvalidParameter("product_kernel: center must be finite");
  return std::make_shared<ProductKernel>(center);
}

KernelPtr cvm_kernel(SurvivalModelPtr null_model) {
  return std::make_shared<CvmKernel>(std::move(null_model));
}

double cvm_defining_integral(const SurvivalModel& null_model, double x,
                             double y, const QuadratureOptions& opts) {
  if (!null_model.continuous())
    throw ModelNotContinuous("CvM defining integral needs a continuous null");
  // Substituting u = F0(t) turns the integral into
  //   int_0^1 (1{u >= F0(x)} - u)(1{u >= F0(y)} - u) du,
  // split at the two kinks so every piece is smooth.
  const double a = null_model.cdf(x);
  const double b = null_model.cdf(y);
  auto integrand = [a, b](double u) {
    return ((u >= a ? 1.0 : 0.0) - u) * ((u >= b ? 1.0 : 0.0) - u);
  };
  double cuts[2] = {std::min(a, b), std::max(a, b)};
  double total = 0.0;
  double lo = 0.0;
  for (double cut : cuts) {
    if (cut > lo && cut < 1.0) {
      total += integrate(integrand, lo, cut, opts);
      lo = cut;
    }
  }
  total += integrate(integrand, lo, 1.0, opts);
  return total;
}

KernelPtr parse_kernel(const std::string& spec, SurvivalModelPtr null_model) {
  if (spec == "ou") return ou_kernel();
  if (spec == "cvm") {
    if (!null_model)
      throw ParseError("kernel 'cvm' needs a null model (--null exp:RATE)");
    return cvm_kernel(std::move(null_model));
  }
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string family = spec.substr(0, colon);
    const std::string arg = spec.substr(colon + 1);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::exception&) {
      throw ParseError("kernel spec '" + spec + "': cannot parse parameter");
    }
    if (family == "gauss") return gaussian_kernel(value);
    if (family == "prod") return product_kernel(value);
  }
  throw ParseError("unknown kernel spec '" + spec +
                   "' (supported: ou, gauss:BW, prod:CENTER, cvm)");
}

}  // namespace kmstat
