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

#include "kmstat/nulldist.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "kmstat/errors.hpp"
#include "parallel_for.hpp"

namespace kmstat {
namespace {

void require_continuous(const JointModel& joint, const char* what) {
  const SurvivalModel& surv = joint.survival();
  if (!surv.continuous() || !surv.has_density())
    throw ModelNotContinuous(std::string(what) +
                             " needs a continuous survival model with density");
}

double censor_weight(const JointModel& joint, double x) {
  const double gbar = joint.censoring().survivor_left(x);
  if (!(gbar > 0.0))
    throw SingularSurvival("1 - G(x-) vanished in a censoring weight");
  return 1.0 / gbar;
}

// Checked improper/finite integral of g against dF over (0, tau].
double integrate_dF_or_throw(const JointModel& joint, const RealFn& g,
                             const QuadratureOptions& opts, const char* what) {
  const SurvivalModel& model = joint.survival();
  auto integrand = [&](double x) { return g(x) * model.density(x); };
  const double tau = joint.tau();
  if (std::isfinite(tau)) return integrate(integrand, 0.0, tau, opts);
  const TailIntegral tail = integrate_improper(integrand, 0.0, opts);
  if (!tail.finite)
    throw DivergentIntegral(std::string(what) + ": tail failed to settle");
  return tail.value;
}

}  // namespace

JKernel::JKernel(JointModel joint, TransformedKernel kprime,
                 const QuadratureOptions& opts)
    : joint_(std::move(joint)), kprime_(std::move(kprime)), opts_(opts) {
  require_continuous(joint_, "the J kernel");
}

double JKernel::tilde(double s, double t) const {
  return kprime_(s, t) * censor_weight(joint_, s) * censor_weight(joint_, t);
}

double JKernel::hazard_integral(double kernel_arg, double upper) const {
  const SurvivalModel& surv = joint_.survival();
  return integrate(
      [&](double t) { return tilde(kernel_arg, t) * surv.hazard_density(t); },
      0.0, upper, opts_);
}

double JKernel::operator()(const MartingalePoint& a,
                           const MartingalePoint& b) const {
  const SurvivalModel& surv = joint_.survival();
  double value = 0.0;
  if (a.event && b.event) value += tilde(a.time, b.time);
  if (a.event) value -= hazard_integral(a.time, b.time);
  if (b.event) value -= hazard_integral(b.time, a.time);
  // Double hazard term: integrate s -> int_0^{x_b} Kt(s, t) dLambda(t)
  // against dLambda(s) up to x_a.
  value += integrate(
      [&](double s) {
        return hazard_integral(s, b.time) * surv.hazard_density(s);
      },
      0.0, a.time, opts_);
  return value;
}

Eigen::MatrixXd JKernel::node_matrix(const CensoredSample& nodes,
                                     int points_per_panel) const {
  if (points_per_panel < 1)
    throw InvalidParameter("node_matrix: points_per_panel must be >= 1");
  const auto& obs = nodes.observations();
  const int m = static_cast<int>(obs.size());
  const SurvivalModel& surv = joint_.survival();

  // Panels between consecutive distinct node times; integrals up to a node
  // are then exact prefix sums over panels.
  std::vector<double> brk;
  brk.reserve(m);
  std::vector<int> pidx(m);
  for (int k = 0; k < m; ++k) {
    if (brk.empty() || obs[k].time > brk.back()) brk.push_back(obs[k].time);
    pidx[k] = static_cast<int>(brk.size());
  }
  const int d = static_cast<int>(brk.size());
  const int ppp = points_per_panel;
  const int q_total = d * ppp;

  // Shared grid with hazard-weighted quadrature weights.
  const auto& rule = gauss_legendre_rule(ppp);
  std::vector<double> tq(q_total), wq(q_total), ginv_q(q_total);
  double lo = 0.0;
  for (int j = 0; j < d; ++j) {
    const double hi = brk[j];
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (int q = 0; q < ppp; ++q) {
      const double t = mid + half * rule[q].first;
      tq[j * ppp + q] = t;
      wq[j * ppp + q] = half * rule[q].second * surv.hazard_density(t);
      ginv_q[j * ppp + q] = censor_weight(joint_, t);
    }
    lo = hi;
  }
  std::vector<double> ginv_node(m);
  for (int k = 0; k < m; ++k) ginv_node[k] = censor_weight(joint_, obs[k].time);

  const TransformedKernel& kp = kprime_;

  // R(k, j) = int_0^{b_j} Kt(x_k, t) dLambda(t), prefix over panels.
  Eigen::MatrixXd R(m, d + 1);
  internal::parallel_for(static_cast<std::size_t>(m), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    const double xk = obs[k].time;
    const double gk = ginv_node[k];
    R(k, 0) = 0.0;
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      double panel_sum = 0.0;
      for (int q = 0; q < ppp; ++q) {
        const int idx = j * ppp + q;
        panel_sum += kp(xk, tq[idx]) * ginv_q[idx] * wq[idx];
      }
      acc += gk * panel_sum;
      R(k, j + 1) = acc;
    }
  });

  // P(i, j) = int over panels (1..i) x (1..j) of Kt dLambda dLambda.
  // Off-diagonal panel pairs use the tensor rule on the shared grid. The
  // squares on the diagonal straddle the s = t line, across which kernels
  // are allowed a kink, so they are integrated as two symmetric triangles
  // with a smooth integrand each.
  Eigen::MatrixXd P(d + 1, d + 1);
  P.row(0).setZero();
  P.col(0).setZero();
  internal::parallel_for(static_cast<std::size_t>(d), [&](std::size_t aa) {
    const int a = static_cast<int>(aa);
    const double panel_lo = a == 0 ? 0.0 : brk[a - 1];
    for (int b = 0; b < d; ++b) {
      double sum = 0.0;
      if (b == a) {
        for (int qa = 0; qa < ppp; ++qa) {
          const int ia = a * ppp + qa;
          const double s = tq[ia];
          const double outer = ginv_q[ia] * wq[ia];
          const double mid = 0.5 * (panel_lo + s);
          const double half = 0.5 * (s - panel_lo);
          double inner_sum = 0.0;
          for (const auto& [z, w] : rule) {
            const double t = mid + half * z;
            inner_sum += w * kp(s, t) *
                         censor_weight(joint_, t) * surv.hazard_density(t);
          }
          sum += 2.0 * outer * half * inner_sum;
        }
      } else {
        for (int qa = 0; qa < ppp; ++qa) {
          const int ia = a * ppp + qa;
          const double left = ginv_q[ia] * wq[ia];
          for (int qb = 0; qb < ppp; ++qb) {
            const int ib = b * ppp + qb;
            sum += left * kp(tq[ia], tq[ib]) * ginv_q[ib] * wq[ib];
          }
        }
      }
      P(a + 1, b + 1) = sum;
    }
  });
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j)
      P(i, j) += P(i - 1, j) + P(i, j - 1) - P(i - 1, j - 1);

  Eigen::MatrixXd J(m, m);
  internal::parallel_for(static_cast<std::size_t>(m), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    for (int l = k; l < m; ++l) {
      double v = P(pidx[k], pidx[l]);
      if (obs[k].event) v -= R(k, pidx[l]);
      if (obs[l].event) v -= R(l, pidx[k]);
      if (obs[k].event && obs[l].event)
        v += kp(obs[k].time, obs[l].time) * ginv_node[k] * ginv_node[l];
      J(k, l) = v;
      J(l, k) = v;
    }
  });
  return J;
}

// S(x)/(1 - H(x-)) for a continuous survival model. The survivor factors
// cancel structurally (1 - H(x-) = (1 - G(x-)) S(x-) and S(x-) = S(x)), so
// evaluating 1/(1 - G(x-)) directly avoids an underflowing ratio deep in
// the tail.
double survivor_weight(const JointModel& joint, double x) {
  return censor_weight(joint, x);
}

double asymptotic_mean(const JointModel& joint, const TransformedKernel& kprime,
                       const QuadratureOptions& opts) {
  require_continuous(joint, "asymptotic_mean");
  return integrate_dF_or_throw(
      joint,
      [&](double x) { return survivor_weight(joint, x) * kprime(x, x); },
      opts, "asymptotic_mean");
}

double asymptotic_variance(const JointModel& joint,
                           const TransformedKernel& kprime,
                           const QuadratureOptions& opts) {
  require_continuous(joint, "asymptotic_variance");
  QuadratureOptions inner_opts = opts;
  inner_opts.rel_tol = opts.rel_tol * 0.1;  // keep inner noise below outer tol
  auto weight = [&](double x) { return survivor_weight(joint, x); };
  auto inner = [&](double x) {
    return integrate_dF_or_throw(
        joint,
        [&](double y) {
          const double k = kprime(x, y);
          return k * k * weight(y);
        },
        inner_opts, "asymptotic_variance (inner)");
  };
  const double outer = integrate_dF_or_throw(
      joint, [&](double x) { return weight(x) * inner(x); }, opts,
      "asymptotic_variance");
  return 2.0 * outer;
}

std::vector<double> jkernel_eigenvalues(const JointModel& joint,
                                        const TransformedKernel& kprime,
                                        int truncation, int nodes, Rng& rng,
                                        const QuadratureOptions& opts,
                                        int points_per_panel) {
  if (truncation < 1) throw InvalidParameter("truncation must be >= 1");
  if (nodes < 2) throw InvalidParameter("need at least 2 Nystrom nodes");
  const CensoredSample sample =
      sample_censored(joint, static_cast<std::size_t>(nodes), rng);
  const JKernel jk(joint, kprime, opts);
  Eigen::MatrixXd M = jk.node_matrix(sample, points_per_panel);
  M /= static_cast<double>(nodes);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NonConvergedEigensolve("symmetric eigensolver did not converge");
  std::vector<double> lambdas(solver.eigenvalues().data(),
                              solver.eigenvalues().data() + nodes);
  std::sort(lambdas.begin(), lambdas.end(), [](double a, double b) {
    const double fa = std::fabs(a), fb = std::fabs(b);
    if (fa != fb) return fa > fb;
    return a > b;
  });
  lambdas.resize(std::min<std::size_t>(lambdas.size(),
                                       static_cast<std::size_t>(truncation)));
  return lambdas;
}

double LimitDistribution::variance_spectral() const {
  double sum = 0.0;
  for (double lam : eigenvalues) sum += lam * lam;
  return 2.0 * sum;
}

LimitDistribution limit_distribution(const JointModel& joint,
                                     const TransformedKernel& kprime,
                                     int truncation, int nodes, Rng& rng,
                                     const QuadratureOptions& opts) {
  LimitDistribution dist;
  dist.mean_offset = asymptotic_mean(joint, kprime, opts);
  dist.variance_closed = asymptotic_variance(joint, kprime, opts);
  dist.eigenvalues =
      jkernel_eigenvalues(joint, kprime, truncation, nodes, rng, opts);
  return dist;
}

std::vector<double> sample_limit(const LimitDistribution& dist,
                                 std::size_t draws, Rng& rng) {
  std::vector<double> out(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    double value = dist.mean_offset;
    for (double lam : dist.eigenvalues) {
      const double z = rng.normal();
      value += lam * (z * z - 1.0);
    }
    out[i] = value;
  }
  return out;
}

double limit_quantile(const LimitDistribution& dist, double p,
                      std::size_t draws, Rng& rng) {
  if (!(p > 0.0 && p < 1.0))
    throw InvalidParameter("quantile level must lie in (0, 1)");
  if (draws == 0) throw InvalidParameter("quantile needs at least one draw");
  std::vector<double> values = sample_limit(dist, draws, rng);
  const double pos = p * static_cast<double>(draws);
  std::size_t k = pos <= 1.0 ? 0 : static_cast<std::size_t>(std::ceil(pos)) - 1;
  k = std::min(k, draws - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<long>(k),
                   values.end());
  return values[k];
}

LimitDistribution ustat_limit_adjust(const LimitDistribution& dist,
                                     const JointModel& joint,
                                     const KernelPtr& kernel,
                                     const QuadratureOptions& opts) {
  if (!kernel) throw InvalidParameter("ustat_limit_adjust: null kernel");
  require_continuous(joint, "ustat_limit_adjust");
  const double diag_correction = integrate_dF_or_throw(
      joint,
      [&](double x) { return (*kernel)(x, x) * censor_weight(joint, x); },
      opts, "ustat_limit_adjust");

  const double tau = joint.tau();
  const double f_tau =
      std::isfinite(tau) ? joint.survival().cdf(tau) : 1.0;
  if (!(f_tau > 0.0))
    throw DegenerateWeightMass("ustat_limit_adjust: F(tau) = 0");
  const double scale = 1.0 / (f_tau * f_tau);

  LimitDistribution out;
  out.mean_offset = (dist.mean_offset - diag_correction) * scale;
  out.eigenvalues = dist.eigenvalues;
  for (double& lam : out.eigenvalues) lam *= scale;
  out.variance_closed = dist.variance_closed * scale * scale;
  return out;
}

}  // namespace kmstat
