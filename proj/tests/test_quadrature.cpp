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

#include "kmstat/errors.hpp"
#include "kmstat/quadrature.hpp"

using namespace kmstat;

TEST_CASE("fixed Gauss-Legendre is exact on polynomials") {
  auto cubic = [](double x) { return 3.0 * x * x * x - x + 2.0; };
  // 15 points integrate degree-29 polynomials exactly.
  CHECK(gauss_legendre(cubic, -1.0, 2.0, 15) ==
        doctest::Approx(0.75 * (16.0 - 1.0) - 0.5 * (4.0 - 1.0) + 2.0 * 3.0)
            .epsilon(1e-14));
}

TEST_CASE("adaptive integration on smooth and kinked integrands") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(integrate([](double x) { return std::exp(-x * x); }, -8.0, 8.0) ==
        doctest::Approx(std::sqrt(M_PI)).epsilon(1e-10));
  // |x - 1/3| has a kink that panel bisection must resolve; agreement is
  // bounded by the default relative tolerance.
  auto kink = [](double x) { return std::fabs(x - 1.0 / 3.0); };
  const double expected = (1.0 / 9.0 + 4.0 / 9.0) / 2.0;
  CHECK(integrate(kink, 0.0, 1.0) == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("integrable endpoint singularity") {
  // 1/sqrt(x) on (0, 1]: the panel tree concentrates toward zero.
  QuadratureOptions opts;
  opts.rel_tol = 1e-9;
  const double v =
      integrate([](double x) { return x > 0 ? 1.0 / std::sqrt(x) : 0.0; }, 0.0,
                1.0, opts);
  CHECK(v == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("non-finite integrand values raise QuadratureFailure") {
  CHECK_THROWS_AS(
      integrate([](double x) { return 1.0 / (x - 0.5); }, 0.0, 1.0),
      QuadratureFailure);
}

TEST_CASE("improper integrals settle on exponential tails") {
  auto tail = integrate_improper([](double x) { return std::exp(-x); }, 0.0);
  CHECK(tail.finite);
  CHECK(tail.value == doctest::Approx(1.0).epsilon(1e-9));

  tail = integrate_improper([](double x) { return x * std::exp(-x); }, 0.0);
  CHECK(tail.finite);
  CHECK(tail.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("improper integrals flag divergence with tail evidence") {
  auto harmonic =
      integrate_improper([](double x) { return 1.0 / (1.0 + x); }, 0.0);
  CHECK_FALSE(harmonic.finite);
  CHECK(harmonic.increments.size() >= 6);

  auto growing = integrate_improper([](double x) { return std::exp(0.5 * x); }, 0.0);
  CHECK_FALSE(growing.finite);
}

TEST_CASE("improper integral respects the lower limit") {
  auto tail = integrate_improper([](double x) { return std::exp(-x); }, 2.0);
  CHECK(tail.finite);
  CHECK(tail.value == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
}
