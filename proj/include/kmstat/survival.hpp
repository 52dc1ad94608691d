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

#ifndef KMSTAT_SURVIVAL_HPP_
#define KMSTAT_SURVIVAL_HPP_

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace kmstat {

class Kernel;

/// One right-censored data point: the observed time X = min(T, C) and the
/// event indicator (true when the survival time itself was observed).
struct CensoredObservation {
  double time = 0.0;
  bool event = false;
};

/// An ordered right-censored sample.
///
/// Observations are sorted by time; at tied times uncensored entries come
/// first, and within each group the original input order is preserved.
/// This is the order-statistic layout the Kaplan-Meier weights act on.
class CensoredSample {
 public:
  const std::vector<CensoredObservation>& observations() const {
    return observations_;
  }
  std::size_t size() const { return observations_.size(); }
  double max_time() const { return observations_.back().time; }
  std::size_t event_count() const { return event_count_; }

 private:
  friend CensoredSample sort_censored(std::vector<CensoredObservation> raw);
  CensoredSample() = default;
  std::vector<CensoredObservation> observations_;
  std::size_t event_count_ = 0;
};

/// Orders raw observations by (time ascending, uncensored before censored at
/// ties). The sort is stable, so permuting tied groups in the input never
/// changes the resulting weights. Throws EmptySample / NonPositiveTime.
CensoredSample sort_censored(std::vector<CensoredObservation> raw);

/// Kaplan-Meier product-limit fit: per-observation weights W_i (the jumps of
/// the estimated distribution function), computed in a single left-to-right
/// pass of the running-product form. Censored observations carry zero weight
/// and the total mass equals the estimated CDF at the largest observation.
class KaplanMeierFit {
 public:
  explicit KaplanMeierFit(CensoredSample sample);

  const CensoredSample& sample() const { return sample_; }
  const std::vector<double>& weights() const { return weights_; }
  double tau_n() const { return sample_.max_time(); }
  double total_mass() const { return total_mass_; }

  /// Estimated CDF at t (right-continuous step function; flat at
  /// total_mass() beyond the largest observation).
  double cdf(double t) const;

 private:
  CensoredSample sample_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;  // running weight sums, aligned with sample
  double total_mass_ = 0.0;
};

inline KaplanMeierFit km_fit(CensoredSample sample) {
  return KaplanMeierFit(std::move(sample));
}

inline double km_eval(const KaplanMeierFit& fit, double t) {
  return fit.cdf(t);
}

/// Number of observations still at risk at time t, i.e. with X_i >= t.
std::size_t at_risk(const CensoredSample& sample, double t);

/// The diagonal statistic sum_i K(X_i, X_i) W_i^2 (unscaled; multiplying by
/// n gives the quantity whose limit is the integral of K(x,x)/(1-G(x-)) dF).
double diagonal_term(const KaplanMeierFit& fit, const Kernel& kernel);

/// Reads `time,event` CSV rows (header required, event in {0,1}) and returns
/// the tie-ordered sample. Parse errors report 1-based line numbers.
CensoredSample read_censored_csv(std::istream& in);
CensoredSample read_censored_csv(const std::string& path);

}  // namespace kmstat

#endif  // KMSTAT_SURVIVAL_HPP_
