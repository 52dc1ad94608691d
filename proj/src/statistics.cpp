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

#include "kmstat/statistics.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "kmstat/errors.hpp"
#include "kmstat/operators.hpp"

namespace kmstat {
namespace {

struct EventView {
  std::vector<double> times;
  std::vector<double> weights;
};

// Distinct event times with their summed weights. Tied events sit next to
// each other in the sorted sample and the double sum is bilinear in the
// weights, so merging them is exact and makes vstat quadratic in the
// number of distinct event times.
EventView event_view(const KaplanMeierFit& fit) {
  EventView view;
  const auto& obs = fit.sample().observations();
  const auto& w = fit.weights();
  view.times.reserve(obs.size());
  view.weights.reserve(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (w[i] == 0.0) continue;
    if (!view.times.empty() && view.times.back() == obs[i].time) {
      view.weights.back() += w[i];
    } else {
      view.times.push_back(obs[i].time);
      view.weights.push_back(w[i]);
    }
  }
  return view;
}

}  // namespace

double vstat(const KaplanMeierFit& fit, const Kernel& kernel) {
  const EventView ev = event_view(fit);
  const std::size_t d = ev.times.size();
  double off_diag = 0.0;
  double diag = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    diag += ev.weights[i] * ev.weights[i] * kernel(ev.times[i], ev.times[i]);
    for (std::size_t j = i + 1; j < d; ++j) {
      off_diag += ev.weights[i] * ev.weights[j] * kernel(ev.times[i], ev.times[j]);
    }
  }
  return 2.0 * off_diag + diag;
}

double ustat(const KaplanMeierFit& fit, const Kernel& kernel,
             StatisticComponents& components) {
  const auto& w = fit.weights();
  double sum_sq = 0.0;
  for (double wi : w) sum_sq += wi * wi;
  const double total = fit.total_mass();
  const double pair_mass = total * total - sum_sq;
  if (fit.sample().event_count() < 2 || !(pair_mass > 0.0))
    throw DegenerateWeightMass(
        "ustat: off-diagonal weight mass vanishes (fewer than two events)");

  components.vstat = vstat(fit, kernel);
  components.diagonal = diagonal_term(fit, kernel);
  components.pair_mass = pair_mass;
  return (components.vstat - components.diagonal) / pair_mass;
}

double ustat(const KaplanMeierFit& fit, const Kernel& kernel) {
  StatisticComponents components;
  return ustat(fit, kernel, components);
}

namespace {

// theta(F0) cache keyed by (kernel spec, model spec); both strings are
// round-trippable so equal specs mean equal values.
double cached_theta(const SurvivalModelPtr& model, const KernelPtr& kernel,
                    const QuadratureOptions& opts) {
  static std::mutex mu;
  static std::map<std::pair<std::string, std::string>, double> cache;
  const auto key = std::make_pair(kernel->name(), model->describe());
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double value = theta_limit(model, kernel, kInf, opts);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, value);
  return value;
}

}  // namespace

double mmd2(const KaplanMeierFit& fit, const KernelPtr& kernel,
            const SurvivalModelPtr& null_model, const QuadratureOptions& opts) {
  if (!kernel || !null_model) throw InvalidParameter("mmd2: null argument");
  if (!null_model->continuous())
    throw ModelNotContinuous("mmd2 needs a continuous null model");

  const double vst = vstat(fit, *kernel);

  const RealFn phi0 = projection(null_model, kernel, kInf, opts);
  const auto& obs = fit.sample().observations();
  const auto& w = fit.weights();
  double cross = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (w[i] == 0.0) continue;
    cross += w[i] * phi0(obs[i].time);
  }

  const double theta0 = cached_theta(null_model, kernel, opts);
  return vst - 2.0 * cross + theta0;
}

double theta_limit(const SurvivalModelPtr& model, const KernelPtr& kernel,
                   double tau, const QuadratureOptions& opts) {
  if (!model || !kernel) throw InvalidParameter("theta_limit: null argument");
  QuadratureOptions inner = opts;
  inner.rel_tol = opts.rel_tol * 0.1;

  if (model->has_quantile()) {
    const double mass =
        std::isfinite(tau) && tau < model->support_upper() ? model->cdf(tau) : 1.0;
    auto inner_fn = [&](double u) {
      const double x = model->quantile(u);
      auto slice = [&](double v) { return (*kernel)(x, model->quantile(v)); };
      // Kernels may kink across the diagonal (v = u); integrate piecewise.
      if (u > 0.0 && u < mass)
        return integrate(slice, 0.0, u, inner) + integrate(slice, u, mass, inner);
      return integrate(slice, 0.0, mass, inner);
    };
    return integrate(inner_fn, 0.0, mass, opts);
  }

  if (!model->has_density())
    throw QuadratureFailure("theta_limit: model supports neither quantile nor density");
  const double upper = std::isfinite(tau) ? tau : model->support_upper();
  if (!std::isfinite(upper))
    throw QuadratureFailure("theta_limit: infinite tau needs a quantile function");
  auto inner_fn = [&](double x) {
    return model->density(x) *
           integrate(
               [&](double y) { return (*kernel)(x, y) * model->density(y); },
               0.0, upper, inner);
  };
  return integrate(inner_fn, 0.0, upper, opts);
}

}  // namespace kmstat
