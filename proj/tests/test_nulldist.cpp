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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kmstat/errors.hpp"
#include "kmstat/kernels.hpp"
#include "kmstat/models.hpp"
#include "kmstat/nulldist.hpp"
#include "kmstat/operators.hpp"
#include "kmstat/rng.hpp"

using namespace kmstat;

namespace {

class ZeroKernel final : public Kernel {
 public:
  double operator()(double, double) const override { return 0.0; }
  std::string name() const override { return "zero"; }
  std::optional<BivariateFn> transformed_closed_form(
      const SurvivalModel&) const override {
    return BivariateFn([](double, double) { return 0.0; });
  }
};

// K(x, y) = (x - y)^2 has a zero diagonal, so the U-statistic adjustment
// must leave the limit distribution untouched.
class SquaredDiffKernel final : public Kernel {
 public:
  double operator()(double x, double y) const override {
    return (x - y) * (x - y);
  }
  std::string name() const override { return "sqdiff"; }
};

QuadratureOptions loose() {
  QuadratureOptions opts;
  opts.rel_tol = 1e-7;
  return opts;
}

double ou_variance_formula(double gamma) {
  // 2 sum lambda_k^2 = (5 - 4g + g^2) / (2 (g-3)^3 (g-1)) for the OU kernel
  // under exp(1) with Koziol-Green censoring.
  return (5.0 - 4.0 * gamma + gamma * gamma) /
         (2.0 * std::pow(gamma - 3.0, 3) * (gamma - 1.0));
}

}  // namespace

TEST_CASE("J factorizes when the transformed kernel is constant") {
  // K' = 1 and gamma = 0 make Ktilde constant, so
  // J((x,r),(x',r')) = (r - Lambda(x))(r' - Lambda(x')) with Lambda(x) = x.
  const auto model = exponential_model(1.0);
  const JointModel joint = koziol_green(model, 0.0);
  const JKernel j(joint, transformed_kernel(model, product_kernel(1.0)),
                  loose());

  CHECK(j({1.0, true}, {2.0, false}) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(j({0.5, false}, {1.0, false}) == doctest::Approx(0.5).epsilon(1e-8));

  Rng rng = Rng::substream(55, 0);
  for (int i = 0; i < 10; ++i) {
    const MartingalePoint a{3.0 * rng.uniform_open(), rng.uniform() < 0.5};
    const MartingalePoint b{3.0 * rng.uniform_open(), rng.uniform() < 0.5};
    const double expected = ((a.event ? 1.0 : 0.0) - a.time) *
                            ((b.event ? 1.0 : 0.0) - b.time);
    CHECK(j(a, b) == doctest::Approx(expected).epsilon(1e-7));
  }
}

TEST_CASE("J is symmetric in its argument pairs") {
  const auto model = exponential_model(1.0);
  const JointModel joint = koziol_green(model, 0.3);
  const JKernel j(joint, transformed_kernel(model, ou_kernel()), loose());
  Rng rng = Rng::substream(55, 1);
  for (int i = 0; i < 8; ++i) {
    const MartingalePoint a{2.5 * rng.uniform_open(), rng.uniform() < 0.6};
    const MartingalePoint b{2.5 * rng.uniform_open(), rng.uniform() < 0.6};
    // Absolute tolerance: both evaluations carry O(rel_tol) quadrature noise
    // from terms of order one.
    CHECK(std::fabs(j(a, b) - j(b, a)) <= 2e-6);
  }
}

TEST_CASE("asymptotic mean closed forms") {
  const auto model = exponential_model(1.0);
  SUBCASE("CvM, gamma = 0.5: 1/(3(2-gamma)) = 2/9") {
    const JointModel joint = koziol_green(model, 0.5);
    const auto kp = transformed_kernel(model, cvm_kernel(model));
    CHECK(asymptotic_mean(joint, kp) ==
          doctest::Approx(2.0 / 9.0).epsilon(1e-7));
  }
  SUBCASE("OU, gamma = 0.5: 1/(2(1-gamma)) = 1") {
    const JointModel joint = koziol_green(model, 0.5);
    const auto kp = transformed_kernel(model, ou_kernel());
    CHECK(asymptotic_mean(joint, kp) == doctest::Approx(1.0).epsilon(1e-7));
  }
  SUBCASE("centered product kernel, gamma = 0.5: 1/(1-gamma) = 2") {
    const JointModel joint = koziol_green(model, 0.5);
    const auto kp = transformed_kernel(model, product_kernel(1.0));
    CHECK(asymptotic_mean(joint, kp) == doctest::Approx(2.0).epsilon(1e-7));
  }
}

TEST_CASE("asymptotic variance closed forms") {
  const auto model = exponential_model(1.0);
  SUBCASE("CvM, gamma = 0.5") {
    const JointModel joint = koziol_green(model, 0.5);
    const auto kp = transformed_kernel(model, cvm_kernel(model));
    CHECK(asymptotic_variance(joint, kp) ==
          doctest::Approx(2.0 / (9.0 * 4.5 * 1.5)).epsilon(1e-6));
  }
  SUBCASE("OU, gamma = 0: 5/54") {
    const JointModel joint = koziol_green(model, 0.0);
    const auto kp = transformed_kernel(model, ou_kernel());
    CHECK(asymptotic_variance(joint, kp) ==
          doctest::Approx(5.0 / 54.0).epsilon(1e-6));
    CHECK(ou_variance_formula(0.0) == doctest::Approx(5.0 / 54.0));
  }
  SUBCASE("OU, gamma = 0.25 matches the closed form") {
    const JointModel joint = koziol_green(model, 0.25);
    const auto kp = transformed_kernel(model, ou_kernel());
    CHECK(asymptotic_variance(joint, kp) ==
          doctest::Approx(ou_variance_formula(0.25)).epsilon(1e-6));
  }
  SUBCASE("zero transformed kernel has zero variance") {
    const JointModel joint = koziol_green(model, 0.5);
    const auto kp = transformed_kernel(model, std::make_shared<ZeroKernel>());
    CHECK(std::fabs(asymptotic_variance(joint, kp)) <= 1e-12);
  }
}

TEST_CASE("Nystrom spectrum") {
  const auto model = exponential_model(1.0);
  SUBCASE("zero kernel gives a zero spectrum") {
    const JointModel joint = koziol_green(model, 0.5);
    const auto kp = transformed_kernel(model, std::make_shared<ZeroKernel>());
    Rng rng = Rng::substream(55, 2);
    const auto lambdas = jkernel_eigenvalues(joint, kp, 10, 50, rng, loose());
    REQUIRE(lambdas.size() == 10);
    for (double lam : lambdas) CHECK(std::fabs(lam) <= 1e-12);
  }
  SUBCASE("smoke spectral consistency at small node counts") {
    const JointModel joint = koziol_green(model, 0.0);
    const auto kp = transformed_kernel(model, ou_kernel());
    Rng rng = Rng::substream(55, 3);
    const auto lambdas = jkernel_eigenvalues(joint, kp, 60, 500, rng, loose());
    double sum = 0.0, sum_sq = 0.0;
    for (double lam : lambdas) {
      sum += lam;
      sum_sq += lam * lam;
    }
    CHECK(2.0 * sum_sq == doctest::Approx(5.0 / 54.0).epsilon(0.25));
    CHECK(sum == doctest::Approx(0.5).epsilon(0.20));
  }
  SUBCASE("spectral mass grows with truncation, bounded by the closed form") {
    const JointModel joint = koziol_green(model, 0.0);
    const auto kp = transformed_kernel(model, ou_kernel());
    const double closed = asymptotic_variance(joint, kp);
    double previous = 0.0;
    for (int trunc : {5, 15, 40, 100}) {
      Rng rng = Rng::substream(55, 10);  // same nodes every time
      LimitDistribution dist;
      dist.eigenvalues =
          jkernel_eigenvalues(joint, kp, trunc, 400, rng, loose());
      const double mass = dist.variance_spectral();
      CHECK(mass >= previous);
      CHECK(mass <= closed * 1.10 + 1e-9);  // Nystrom tolerance
      previous = mass;
    }
  }
}

TEST_CASE("J moment identities (Monte Carlo smoke)") {
  const auto model = exponential_model(1.0);
  // gamma < 1/3 keeps the sampled moments at finite variance, so the
  // standard-error bands below are meaningful.
  const JointModel joint = koziol_green(model, 0.25);
  const auto kp = transformed_kernel(model, ou_kernel());
  const JKernel j(joint, kp, loose());
  const double mean_target = asymptotic_mean(joint, kp);
  const double var_target = asymptotic_variance(joint, kp);

  // Draw raw pairs directly so the list keeps i.i.d. order; a sorted sample
  // would make prefixes and adjacent pairs biased subsets.
  Rng rng = Rng::substream(55, 4);
  const std::size_t draws = 400;
  std::vector<MartingalePoint> obs;
  obs.reserve(2 * draws);
  for (std::size_t i = 0; i < 2 * draws; ++i) {
    const double t = joint.survival().quantile(rng.uniform_open());
    const double c = joint.censoring().quantile(rng.uniform_open());
    obs.push_back({std::min(t, c), t <= c});
  }

  SUBCASE("E J(p, p) equals the asymptotic mean") {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
      const MartingalePoint p = obs[2 * i];
      const double v = j(p, p);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / draws;
    const double se =
        std::sqrt((sum_sq / draws - mean * mean) / static_cast<double>(draws));
    CHECK(std::fabs(mean - mean_target) <= 6.0 * se);
  }

  SUBCASE("E J(p, q)^2 equals half the asymptotic variance") {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
      const MartingalePoint p = obs[2 * i];
      const MartingalePoint q = obs[2 * i + 1];
      const double v = j(p, q);
      sum += v * v;
      sum_sq += v * v * v * v;
    }
    const double mean = sum / draws;
    const double se =
        std::sqrt((sum_sq / draws - mean * mean) / static_cast<double>(draws));
    CHECK(std::fabs(mean - 0.5 * var_target) <= 6.0 * se);
  }

  SUBCASE("E J(p, probe) is centered at zero") {
    for (const MartingalePoint probe :
         {MartingalePoint{0.7, true}, MartingalePoint{1.8, false}}) {
      double sum = 0.0, sum_sq = 0.0;
      for (std::size_t i = 0; i < draws; ++i) {
        const MartingalePoint p = obs[i];
        const double v = j(p, probe);
        sum += v;
        sum_sq += v * v;
      }
      const double mean = sum / draws;
      const double se = std::sqrt(
          (sum_sq / draws - mean * mean) / static_cast<double>(draws));
      CHECK(std::fabs(mean) <= 6.0 * se);
    }
  }
}

TEST_CASE("limit sampling") {
  SUBCASE("zero spectrum collapses to the mean offset") {
    LimitDistribution dist;
    dist.mean_offset = 1.25;
    dist.eigenvalues = {0.0, 0.0};
    Rng rng = Rng::substream(55, 5);
    for (double v : sample_limit(dist, 100, rng)) CHECK(v == 1.25);
    Rng rng2 = Rng::substream(55, 6);
    CHECK(limit_quantile(dist, 0.31, 1000, rng2) == 1.25);
  }
  SUBCASE("moments of the chi-square combination") {
    LimitDistribution dist;
    dist.mean_offset = 0.4;
    dist.eigenvalues = {0.5, -0.25};
    const double variance = 2.0 * (0.25 + 0.0625);
    Rng rng = Rng::substream(55, 7);
    const auto draws = sample_limit(dist, 100000, rng);
    double sum = 0.0, sum_sq = 0.0;
    for (double v : draws) {
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / draws.size();
    const double var = sum_sq / draws.size() - mean * mean;
    const double se = std::sqrt(var / draws.size());
    CHECK(std::fabs(mean - 0.4) <= 4.0 * se);
    CHECK(var == doctest::Approx(variance).epsilon(0.05));
  }
  SUBCASE("median of a symmetric spectrum and quantile monotonicity") {
    LimitDistribution dist;
    dist.mean_offset = 2.0;
    dist.eigenvalues = {0.7, -0.7};
    Rng rng_a = Rng::substream(55, 8);
    const double median = limit_quantile(dist, 0.5, 200000, rng_a);
    CHECK(median == doctest::Approx(2.0).epsilon(0.01));
    Rng rng_b = Rng::substream(55, 9);
    Rng rng_c = Rng::substream(55, 9);
    const double q95 = limit_quantile(dist, 0.95, 50000, rng_b);
    const double q99 = limit_quantile(dist, 0.99, 50000, rng_c);
    CHECK(q99 >= q95);
    CHECK_THROWS_AS(limit_quantile(dist, 0.0, 100, rng_b), InvalidParameter);
    CHECK_THROWS_AS(limit_quantile(dist, 1.0, 100, rng_b), InvalidParameter);
  }
}

TEST_CASE("U-statistic limit adjustment") {
  const auto model = exponential_model(1.0);
  const JointModel joint = koziol_green(model, 0.5);
  SUBCASE("zero-diagonal kernel leaves the distribution unchanged") {
    LimitDistribution dist;
    dist.mean_offset = 0.9;
    dist.eigenvalues = {0.3, -0.1};
    dist.variance_closed = 0.2;
    const auto adjusted =
        ustat_limit_adjust(dist, joint, std::make_shared<SquaredDiffKernel>());
    CHECK(adjusted.mean_offset == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(adjusted.eigenvalues[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(adjusted.variance_closed == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("OU kernel shifts the mean by -1/(1-gamma)") {
    LimitDistribution dist;
    dist.mean_offset = 1.0;  // the OU gamma=0.5 asymptotic mean
    dist.eigenvalues = {0.25, 0.125};
    dist.variance_closed = 0.2;
    const auto adjusted = ustat_limit_adjust(dist, joint, ou_kernel());
    // F(tau) = 1 here, so eigenvalues are unchanged and the mean shifts by
    // -int e^{gamma x} e^{-x} dx = -2.
    CHECK(adjusted.mean_offset == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(adjusted.eigenvalues == dist.eigenvalues);
  }
}
