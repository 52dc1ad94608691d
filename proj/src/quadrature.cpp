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

#include "kmstat/quadrature.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "kmstat/errors.hpp"

namespace kmstat {
namespace {

// Gauss-Legendre nodes by Newton iteration on the Legendre recurrence.
std::vector<std::pair<double, double>> build_rule(int n) {
  std::vector<std::pair<double, double>> rule(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = -p1 / pp;
      z += dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule[i] = {-z, w};
    rule[n - 1 - i] = {z, w};
  }
  return rule;
}

double panel(const RealFn& f, double a, double b,
             const std::vector<std::pair<double, double>>& rule) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (const auto& [x, w] : rule) sum += w * f(mid + half * x);
  return half * sum;
}

// One panel of the globally adaptive scheme. `refined` is the two-half
// estimate and `err` the difference against the single-panel estimate; the
// halves are kept so a split does not re-evaluate them.
struct Segment {
  double a, b;
  double refined, err;
  double left_half, right_half;
  int depth;
};

Segment make_segment(const RealFn& f, double a, double b, double whole,
                     int depth,
                     const std::vector<std::pair<double, double>>& rule) {
  const double mid = 0.5 * (a + b);
  const double left = panel(f, a, mid, rule);
  const double right = panel(f, mid, b, rule);
  if (!std::isfinite(left) || !std::isfinite(right))
    throw QuadratureFailure("integrand produced a non-finite value");
  Segment seg;
  seg.a = a;
  seg.b = b;
  seg.refined = left + right;
  seg.err = std::fabs(seg.refined - whole);
  seg.left_half = left;
  seg.right_half = right;
  seg.depth = depth;
  return seg;
}

}  // namespace

const std::vector<std::pair<double, double>>& gauss_legendre_rule(int points) {
  if (points < 1) throw InvalidParameter("Gauss-Legendre order must be >= 1");
  static std::mutex mu;
  static std::map<int, std::vector<std::pair<double, double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(points);
  if (it == cache.end()) it = cache.emplace(points, build_rule(points)).first;
  return it->second;
}

double gauss_legendre(const RealFn& f, double a, double b, int points) {
  return panel(f, a, b, gauss_legendre_rule(points));
}

double integrate(const RealFn& f, double a, double b,
                 const QuadratureOptions& opts) {
  if (!(a <= b)) throw InvalidParameter("integrate: requires a <= b");
  if (a == b) return 0.0;
  const auto& rule = gauss_legendre_rule(15);
  constexpr std::size_t kMaxPanels = 20000;

  const double whole = panel(f, a, b, rule);
  if (!std::isfinite(whole))
    throw QuadratureFailure("integrand produced a non-finite value");

  // Worst-panel-first refinement: keep bisecting the largest error term
  // until the summed error estimate meets the tolerance. Panels that hit
  // the depth limit keep contributing their error, so an integrand the
  // scheme cannot resolve fails loudly instead of returning garbage.
  auto by_err = [](const Segment& lhs, const Segment& rhs) {
    return lhs.err < rhs.err;
  };
  std::vector<Segment> heap;
  heap.push_back(make_segment(f, a, b, whole, 0, rule));
  std::push_heap(heap.begin(), heap.end(), by_err);
  double total = heap.front().refined;
  double total_err = heap.front().err;
  double frozen_err = 0.0;

  while (total_err + frozen_err >
         std::max(opts.abs_tol, opts.rel_tol * std::fabs(total))) {
    if (heap.empty() || heap.size() >= kMaxPanels ||
        frozen_err > std::max(opts.abs_tol, opts.rel_tol * std::fabs(total)))
      throw QuadratureFailure("adaptive quadrature failed to settle");
    std::pop_heap(heap.begin(), heap.end(), by_err);
    const Segment seg = heap.back();
    heap.pop_back();
    total_err -= seg.err;

    const double mid = 0.5 * (seg.a + seg.b);
    if (seg.depth >= opts.max_depth || mid <= seg.a || mid >= seg.b) {
      frozen_err += seg.err;
      continue;
    }
    const Segment left =
        make_segment(f, seg.a, mid, seg.left_half, seg.depth + 1, rule);
    const Segment right =
        make_segment(f, mid, seg.b, seg.right_half, seg.depth + 1, rule);
    total += left.refined + right.refined - seg.refined;
    total_err += left.err + right.err;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), by_err);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_err);
  }
  return total;
}

TailIntegral integrate_improper(const RealFn& f, double a,
                                const QuadratureOptions& opts,
                                double initial_span, int max_doublings,
                                int nondecay_limit) {
  if (initial_span <= 0.0)
    throw InvalidParameter("integrate_improper: initial span must be > 0");
  constexpr double kOverflowGuard = 1e100;

  TailIntegral out;
  double upper = a + initial_span;
  out.value = integrate(f, a, upper, opts);

  // Cheap probe so windows whose integrand has already exploded are judged
  // divergent without handing the adaptive scheme an ill-conditioned panel.
  auto window_explodes = [&](double lo, double hi) {
    for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double v = f(lo + frac * (hi - lo));
      if (!std::isfinite(v) || std::fabs(v) > kOverflowGuard) return true;
    }
    return false;
  };

  // The base window participates in the decay comparison, so divergence is
  // declared after `nondecay_limit` doublings.
  double prev_increment = std::fabs(out.value);
  int nondecay = 0;
  for (int k = 0; k < max_doublings; ++k) {
    const double next_upper = a + 2.0 * (upper - a);
    if (window_explodes(upper, next_upper)) {
      out.finite = false;
      return out;
    }
    const double inc = integrate(f, upper, next_upper, opts);
    upper = next_upper;
    out.value += inc;
    out.increments.push_back(inc);

    if (std::fabs(out.value) > kOverflowGuard ||
        std::fabs(inc) > kOverflowGuard) {
      out.finite = false;
      return out;
    }
    const double scale = std::max(std::fabs(out.value), opts.abs_tol);
    if (std::fabs(inc) <= opts.rel_tol * scale) {
      // For a geometrically decaying tail the remaining mass is of the
      // same order as this increment, i.e. already within tolerance.
      out.finite = true;
      return out;
    }
    // An increment that keeps at least 95% of its predecessor's magnitude
    // counts as non-decaying; six in a row is the divergence verdict.
    if (std::fabs(inc) >= 0.95 * std::fabs(prev_increment)) {
      if (++nondecay >= nondecay_limit) {
        out.finite = false;
        return out;
      }
    } else {
      nondecay = 0;
    }
    prev_increment = inc;
  }
  // Ran out of doublings without settling: treat as non-finite evidence.
  out.finite = false;
  return out;
}

}  // namespace kmstat
