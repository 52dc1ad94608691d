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

#ifndef KMSTAT_NULLDIST_HPP_
#define KMSTAT_NULLDIST_HPP_

#include <Eigen/Dense>
#include <vector>

#include "kmstat/models.hpp"
#include "kmstat/operators.hpp"
#include "kmstat/rng.hpp"

namespace kmstat {

/// One point of the (time, event) space the degenerate limit operator acts
/// on; the arguments of the J kernel.
struct MartingalePoint {
  double time = 0.0;
  bool event = false;
};

/// The canonical V-statistic kernel of the degenerate limit,
///   J((x,r),(x',r')) = double integral of
///     K'(s,t) / ((1-G(s-))(1-G(t-)))  against  dm_{x,r}(s) dm_{x',r'}(t),
/// where dm_{x,r}(s) = r delta_x(s) - 1{x >= s} dLambda(s). Expanding the
/// signed measures gives four terms: a point evaluation, two single hazard
/// integrals and one double hazard integral.
class JKernel {
 public:
  JKernel(JointModel joint, TransformedKernel kprime,
          const QuadratureOptions& opts = {});

  /// Pointwise evaluation by adaptive quadrature (symmetric in the pair).
  double operator()(const MartingalePoint& a, const MartingalePoint& b) const;

  /// K'(s,t) / ((1 - G(s-))(1 - G(t-))).
  double tilde(double s, double t) const;

  /// Symmetric matrix J(p_k, p_l) over sample nodes, built on a shared
  /// panel grid aligned with the sorted node times: the hazard integrals
  /// up to each node become prefix sums over panels, so the m x m build
  /// costs O(m^2) lookups after O(m^2 p^2) kernel evaluations.
  Eigen::MatrixXd node_matrix(const CensoredSample& nodes,
                              int points_per_panel = 4) const;

  const JointModel& joint() const { return joint_; }
  const TransformedKernel& kprime() const { return kprime_; }

 private:
  double hazard_integral(double kernel_arg, double upper) const;

  JointModel joint_;
  TransformedKernel kprime_;
  QuadratureOptions opts_;
};

/// Constant offset of the degenerate limit law:
/// integral_0^tau S(x)/(1 - H(x-)) K'(x,x) dF(x). Equals the trace
/// E J(p, p). Throws DivergentIntegral when the tail fails to settle.
double asymptotic_mean(const JointModel& joint, const TransformedKernel& kprime,
                       const QuadratureOptions& opts = {});

/// Variance of the degenerate limit law:
/// 2 * double integral of K'(x,y)^2 S(x) S(y) / ((1-H(x-))(1-H(y-))) dF dF.
double asymptotic_variance(const JointModel& joint,
                           const TransformedKernel& kprime,
                           const QuadratureOptions& opts = {});

/// Nystrom approximation of the spectrum of the integral operator with
/// kernel J: draws `nodes` points from the joint model, eigendecomposes
/// J(p_k, p_l)/nodes, and returns the `truncation` eigenvalues of largest
/// magnitude (signed; J is not positive definite).
std::vector<double> jkernel_eigenvalues(const JointModel& joint,
                                        const TransformedKernel& kprime,
                                        int truncation, int nodes, Rng& rng,
                                        const QuadratureOptions& opts = {},
                                        int points_per_panel = 4);

/// The limit law m + sum_i lambda_i (xi_i^2 - 1) with xi_i iid standard
/// normal, truncated to finitely many eigenvalues.
struct LimitDistribution {
  double mean_offset = 0.0;
  std::vector<double> eigenvalues;  // magnitude-sorted, signed
  double variance_closed = 0.0;     // the closed-form 2 int int ... value

  double variance_spectral() const;  // 2 sum lambda_i^2
};

/// Assembles mean offset, closed-form variance and truncated spectrum.
LimitDistribution limit_distribution(const JointModel& joint,
                                     const TransformedKernel& kprime,
                                     int truncation, int nodes, Rng& rng,
                                     const QuadratureOptions& opts = {});

/// i.i.d. draws of m + sum lambda_i (xi_i^2 - 1); deterministic given rng.
std::vector<double> sample_limit(const LimitDistribution& dist,
                                 std::size_t draws, Rng& rng);

/// Monte Carlo p-quantile of the limit law from `draws` samples.
double limit_quantile(const LimitDistribution& dist, double p,
                      std::size_t draws, Rng& rng);

/// Degenerate U-statistic limit: shifts the mean offset by
/// -integral K(x,x)/(1-G(x-)) dF and rescales mean and eigenvalues by
/// 1/F(tau)^2. Throws DivergentIntegral when the diagonal integral does
/// not exist.
LimitDistribution ustat_limit_adjust(const LimitDistribution& dist,
                                     const JointModel& joint,
                                     const KernelPtr& kernel,
                                     const QuadratureOptions& opts = {});

}  // namespace kmstat

#endif  // KMSTAT_NULLDIST_HPP_
