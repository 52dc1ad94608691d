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

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "kmstat/errors.hpp"
#include "kmstat/kernels.hpp"
#include "kmstat/models.hpp"
#include "kmstat/rng.hpp"
#include "kmstat/survival.hpp"

using namespace kmstat;

namespace {

class ConstKernel final : public Kernel {
 public:
  explicit ConstKernel(double value) : value_(value) {}
  double operator()(double, double) const override { return value_; }
  std::string name() const override { return "const"; }

 private:
  double value_;
};

// Independent oracle: the classic product-limit survival curve. Weights are
// the jumps of 1 - S(t), split evenly across tied events.
std::vector<double> product_limit_weights(
    const std::vector<CensoredObservation>& sorted) {
  const std::size_t n = sorted.size();
  std::vector<double> weights(n, 0.0);
  double s = 1.0;
  std::size_t i = 0;
  while (i < n) {
    const double t = sorted[i].time;
    std::size_t deaths = 0;
    std::size_t first_event = i;
    std::size_t at_risk_count = n - i;
    std::size_t j = i;
    while (j < n && sorted[j].time == t) {
      if (sorted[j].event) ++deaths;
      ++j;
    }
    if (deaths > 0) {
      const double s_after =
          s * (1.0 - static_cast<double>(deaths) / at_risk_count);
      const double jump = (s - s_after) / deaths;
      for (std::size_t k = first_event; k < j; ++k)
        if (sorted[k].event) weights[k] = jump;
      s = s_after;
    }
    i = j;
  }
  return weights;
}

std::vector<CensoredObservation> random_tied_sample(Rng& rng, std::size_t n) {
  std::vector<CensoredObservation> raw;
  raw.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Half-integer grid forces ties.
    const double t = 0.5 * (1.0 + std::floor(rng.uniform() * 10.0));
    raw.push_back({t, rng.uniform() < 0.6});
  }
  return raw;
}

}  // namespace

TEST_CASE("sort_censored applies the tie rule") {
  auto s = sort_censored({{2, true}, {1, false}, {1, true}});
  CHECK(s.observations()[0].time == 1);
  CHECK(s.observations()[0].event);
  CHECK(s.observations()[1].time == 1);
  CHECK_FALSE(s.observations()[1].event);
  CHECK(s.observations()[2].time == 2);

  auto unchanged = sort_censored({{1, true}, {2, true}});
  CHECK(unchanged.observations()[0].time == 1);
  CHECK(unchanged.observations()[1].time == 2);

  auto ties = sort_censored({{3, false}, {3, false}, {3, true}});
  CHECK(ties.observations()[0].event);
  CHECK_FALSE(ties.observations()[1].event);
  CHECK_FALSE(ties.observations()[2].event);
}

TEST_CASE("sort_censored rejects bad input") {
  CHECK_THROWS_AS(sort_censored({}), EmptySample);
  CHECK_THROWS_AS(sort_censored({{0.0, true}}), NonPositiveTime);
  CHECK_THROWS_AS(sort_censored({{-1.0, true}}), NonPositiveTime);
}

TEST_CASE("km_fit on worked samples") {
  SUBCASE("all uncensored gives 1/n") {
    const KaplanMeierFit fit(sort_censored({{1, true}, {2, true}, {3, true}}));
    for (double w : fit.weights()) CHECK(w == 1.0 / 3.0);
    CHECK(fit.total_mass() == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("censoring reweights later events") {
    const KaplanMeierFit fit(sort_censored({{1, true}, {2, false}, {3, true}}));
    CHECK(fit.weights()[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(fit.weights()[1] == 0.0);
    CHECK(fit.weights()[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(fit.total_mass() == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("no events means zero mass") {
    const KaplanMeierFit fit(sort_censored({{1, false}, {2, false}}));
    CHECK(fit.weights()[0] == 0.0);
    CHECK(fit.weights()[1] == 0.0);
    CHECK(fit.total_mass() == 0.0);
  }
}

TEST_CASE("km_eval step semantics") {
  const KaplanMeierFit fit(sort_censored({{1, true}, {2, false}, {3, true}}));
  CHECK(km_eval(fit, 0.0) == 0.0);
  CHECK(km_eval(fit, 1.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(km_eval(fit, 100.0) == doctest::Approx(1.0).epsilon(1e-15));
  // Right continuity at a jump point.
  CHECK(km_eval(fit, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(km_eval(fit, std::nextafter(1.0, 0.0)) == 0.0);
}

TEST_CASE("at_risk counts") {
  const auto sample = sort_censored({{1, true}, {2, false}, {3, true}});
  CHECK(at_risk(sample, 2.0) == 2);
  CHECK(at_risk(sample, std::nextafter(3.0, 4.0)) == 0);
  CHECK(at_risk(sample, 1e-12) == 3);
  CHECK_THROWS_AS(at_risk(sample, 0.0), NonPositiveTime);
}

TEST_CASE("diagonal_term worked examples") {
  SUBCASE("constant kernel, all uncensored") {
    const KaplanMeierFit fit(
        sort_censored({{1, true}, {2, true}, {3, true}, {4, true}}));
    CHECK(diagonal_term(fit, ConstKernel(1.0)) ==
          doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("product kernel on the worked 3-point sample") {
    const KaplanMeierFit fit(sort_censored({{1, true}, {2, false}, {3, true}}));
    const auto xy = product_kernel(0.0);
    CHECK(diagonal_term(fit, *xy) ==
          doctest::Approx(37.0 / 9.0).epsilon(1e-14));
  }
}

TEST_CASE("diagonal limit matches the censoring-weighted integral") {
  // n * sum K(X_i, X_i) W_i^2 -> int K(x,x)/(1-G(x-)) dF. For the OU kernel
  // (K(x,x) = 1) under exp(1) with Koziol-Green gamma = 0.5 the limit is
  // int e^{gamma x} e^{-x} dx = 1/(1 - gamma) = 2.
  const auto base = exponential_model(1.0);
  const JointModel joint = koziol_green(base, 0.5);
  Rng rng = Rng::substream(123, 0);
  const std::size_t n = 4000;
  const KaplanMeierFit fit(sample_censored(joint, n, rng));
  const double value = n * diagonal_term(fit, *ou_kernel());
  CHECK(value == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("km weights agree with the product-limit oracle") {
  Rng rng = Rng::substream(99, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 40);
    const auto sample = sort_censored(random_tied_sample(rng, n));
    const KaplanMeierFit fit(sample);
    const auto oracle = product_limit_weights(sample.observations());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(fit.weights()[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
  }
}

TEST_CASE("all-uncensored fit reproduces the empirical CDF") {
  Rng rng = Rng::substream(99, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 20);
    std::vector<CensoredObservation> raw;
    for (std::size_t i = 0; i < n; ++i)
      raw.push_back({rng.uniform_open() * 5.0, true});
    const auto sample = sort_censored(raw);
    const KaplanMeierFit fit(sample);
    for (double t : {0.1, 0.5, 1.0, 2.5, 4.9, 6.0}) {
      std::size_t count = 0;
      for (const auto& obs : raw)
        if (obs.time <= t) ++count;
      CHECK(km_eval(fit, t) ==
            doctest::Approx(static_cast<double>(count) / n).epsilon(1e-12));
    }
  }
}

TEST_CASE("km_eval is monotone and the tie rule is permutation invariant") {
  Rng rng = Rng::substream(99, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 30);
    auto raw = random_tied_sample(rng, n);
    const KaplanMeierFit fit(sort_censored(raw));

    double prev = -1.0;
    for (double t = 0.0; t < 6.0; t += 0.25) {
      const double v = km_eval(fit, t);
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(fit.total_mass() == doctest::Approx(km_eval(fit, fit.tau_n())));
    CHECK(fit.total_mass() <= 1.0 + 1e-12);

    // Shuffle and refit: (time, event) -> weight mapping must not change.
    auto shuffled = raw;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1],
                shuffled[static_cast<std::size_t>(rng.uniform() * i)]);
    const KaplanMeierFit refit(sort_censored(shuffled));
    std::map<std::pair<double, bool>, double> weight_sums;
    const auto& obs1 = fit.sample().observations();
    const auto& obs2 = refit.sample().observations();
    for (std::size_t i = 0; i < n; ++i) {
      weight_sums[{obs1[i].time, obs1[i].event}] += fit.weights()[i];
      weight_sums[{obs2[i].time, obs2[i].event}] -= refit.weights()[i];
    }
    for (const auto& [key, delta] : weight_sums)
      CHECK(std::fabs(delta) < 1e-14);
  }
}

TEST_CASE("csv ingestion") {
  SUBCASE("round trip") {
    std::istringstream in("time,event\n2.5,1\n1.0,0\n1.0,1\n");
    const auto sample = read_censored_csv(in);
    CHECK(sample.size() == 3);
    CHECK(sample.observations()[0].time == 1.0);
    CHECK(sample.observations()[0].event);
    CHECK_FALSE(sample.observations()[1].event);
  }
  SUBCASE("header required") {
    std::istringstream in("1.0,1\n");
    CHECK_THROWS_AS(read_censored_csv(in), ParseError);
  }
  SUBCASE("errors carry line numbers") {
    std::istringstream in("time,event\n1.0,1\nbad,1\n");
    try {
      read_censored_csv(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("event domain") {
    std::istringstream in("time,event\n1.0,2\n");
    CHECK_THROWS_AS(read_censored_csv(in), ParseError);
  }
  SUBCASE("positive times") {
    std::istringstream in("time,event\n-1.0,1\n");
    CHECK_THROWS_AS(read_censored_csv(in), ParseError);
  }
}
