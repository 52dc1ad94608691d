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

#include "kmstat/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "kmstat/errors.hpp"
#include "kmstat/kernels.hpp"
#include "kmstat/nulldist.hpp"
#include "kmstat/operators.hpp"
#include "kmstat/rng.hpp"
#include "kmstat/statistics.hpp"
#include "kmstat/version.hpp"
#include "parallel_for.hpp"

namespace kmstat {
namespace {

std::string csv_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ULL;
  }
  return hash;
}

}  // namespace

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kCvmFig1:
      return "cvm";
    case ExperimentKind::kMmdFig2:
      return "mmd";
    case ExperimentKind::kCltNondegenerate:
      return "clt";
  }
  return "unknown";
}

void ExperimentConfig::apply_defaults() {
  if (replications <= 0) {
    if (paper_scale || kind == ExperimentKind::kCltNondegenerate)
      replications = 1000;
    else
      replications = 500;
  }
  if (sample_sizes.empty()) {
    switch (kind) {
      case ExperimentKind::kCvmFig1:
        sample_sizes = {paper_scale ? 3000 : 1000};
        break;
      case ExperimentKind::kMmdFig2:
        sample_sizes = {paper_scale ? 3000 : 2000};
        break;
      case ExperimentKind::kCltNondegenerate:
        sample_sizes = {2000};
        break;
    }
  }
}

std::uint64_t ExperimentConfig::config_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  const int k = static_cast<int>(kind);
  h = fnv1a(h, &k, sizeof(k));
  h = fnv1a(h, &rate, sizeof(rate));
  h = fnv1a(h, &gamma, sizeof(gamma));
  for (int n : sample_sizes) h = fnv1a(h, &n, sizeof(n));
  h = fnv1a(h, &replications, sizeof(replications));
  h = fnv1a(h, &seed, sizeof(seed));
  return h;
}

ExperimentResult run_experiment(const ExperimentConfig& config_in) {
  ExperimentConfig config = config_in;
  config.apply_defaults();
  if (config.replications < 1)
    throw InvalidParameter("run_experiment: replications must be >= 1");
  for (int n : config.sample_sizes)
    if (n < 2) throw InvalidParameter("run_experiment: sample sizes must be >= 2");

  const SurvivalModelPtr model = exponential_model(config.rate);
  const JointModel joint = koziol_green(model, config.gamma);

  KernelPtr kernel;
  switch (config.kind) {
    case ExperimentKind::kCvmFig1:
      kernel = cvm_kernel(model);
      break;
    case ExperimentKind::kMmdFig2:
      kernel = ou_kernel();
      break;
    case ExperimentKind::kCltNondegenerate:
      kernel = product_kernel(0.0);
      break;
  }

  // The scaling must match the regime: the CvM statistic is n-scaled only
  // under degeneracy, the CLT experiment is sqrt(n)-scaled only without it.
  // The MMD statistic is the second-order term beta, which is n-scaled
  // regardless of the regime, so it needs no check.
  const RegimeClassification regime =
      classify_regime(model, kernel, joint.tau());
  if (config.kind == ExperimentKind::kCvmFig1 &&
      regime.regime == Regime::kNonDegenerate)
    throw RegimeMismatch(
        "cvm experiment expects a degenerate projection; classified non-degenerate");
  if (config.kind == ExperimentKind::kCltNondegenerate &&
      regime.regime != Regime::kNonDegenerate)
    throw RegimeMismatch(
        "clt experiment expects a non-degenerate projection");

  const double theta_inf =
      config.kind == ExperimentKind::kCltNondegenerate
          ? theta_limit(model, kernel, joint.tau())
          : 0.0;

  ExperimentResult result;
  result.config = config;

  // Asymptotic reference.
  if (config.kind == ExperimentKind::kCltNondegenerate) {
    result.asymptotic_mean = 0.0;
    result.asymptotic_variance = 4.0 * sigma2(joint, kernel);
  } else {
    const TransformedKernel kprime = transformed_kernel(model, kernel);
    result.asymptotic_mean = asymptotic_mean(joint, kprime);
    result.asymptotic_variance = asymptotic_variance(joint, kprime);
  }

  const int reps = config.replications;
  for (std::size_t size_index = 0; size_index < config.sample_sizes.size();
       ++size_index) {
    const int n = config.sample_sizes[size_index];
    SizeResult series;
    series.n = n;
    series.values.assign(static_cast<std::size_t>(reps), 0.0);

    internal::parallel_for(
        static_cast<std::size_t>(reps),
        [&](std::size_t rep) {
          Rng rng = Rng::substream(
              config.seed,
              static_cast<std::uint64_t>(size_index) *
                      static_cast<std::uint64_t>(reps) +
                  rep);
          const CensoredSample sample =
              sample_censored(joint, static_cast<std::size_t>(n), rng);
          const KaplanMeierFit fit(sample);
          double value = 0.0;
          switch (config.kind) {
            case ExperimentKind::kCvmFig1:
              value = n * vstat(fit, *kernel);
              break;
            case ExperimentKind::kMmdFig2:
              value = n * mmd2(fit, kernel, model);
              break;
            case ExperimentKind::kCltNondegenerate:
              value = std::sqrt(static_cast<double>(n)) *
                      (vstat(fit, *kernel) - theta_inf);
              break;
          }
          series.values[rep] = value;
        },
        config.threads);

    // Aggregate in replication order so the result is scheduling-free.
    double sum = 0.0;
    for (double v : series.values) sum += v;
    series.mean = sum / reps;
    double ss = 0.0;
    for (double v : series.values) ss += (v - series.mean) * (v - series.mean);
    series.variance = reps > 1 ? ss / (reps - 1) : 0.0;
    result.per_size.push_back(std::move(series));
  }

  // Shared ECDF grid: degenerate statistics live on the positive axis,
  // the CLT one is centred at zero.
  const double spread = std::sqrt(std::max(result.asymptotic_variance, 1e-12));
  const int grid_points = 201;
  double lo = 0.0, hi = 1.0;
  if (config.kind == ExperimentKind::kCltNondegenerate) {
    lo = -5.0 * spread;
    hi = 5.0 * spread;
  } else {
    lo = 0.0;
    hi = result.asymptotic_mean + 8.0 * spread;
  }
  result.ecdf_grid.resize(grid_points);
  for (int i = 0; i < grid_points; ++i)
    result.ecdf_grid[i] = lo + (hi - lo) * i / (grid_points - 1);

  if (!config.out_dir.empty()) write_result_files(result);
  return result;
}

std::vector<std::pair<double, double>> ecdf_export(
    const std::vector<double>& values, const std::vector<double>& grid) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1])
      throw UnsortedGrid("ecdf_export: grid must be nondecreasing");
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(grid.size());
  const double n = static_cast<double>(sorted.size());
  for (double g : grid) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), g);
    const double count = static_cast<double>(it - sorted.begin());
    out.emplace_back(g, sorted.empty() ? 0.0 : count / n);
  }
  return out;
}

AsymptoticsReport compare_asymptotics(const SizeResult& size_result,
                                      double asymptotic_mean,
                                      double asymptotic_variance) {
  AsymptoticsReport report;
  report.mu = asymptotic_mean;
  report.sigma = std::sqrt(std::max(asymptotic_variance, 0.0));
  report.mu_hat = size_result.mean;
  report.sigma_hat = std::sqrt(std::max(size_result.variance, 0.0));
  const double reps = static_cast<double>(size_result.values.size());
  const double se = reps > 0 ? report.sigma_hat / std::sqrt(reps) : 0.0;
  report.z_score =
      se > 0.0 ? (report.mu_hat - report.mu) / se
               : (report.mu_hat == report.mu ? 0.0 : kInf);
  report.variance_ratio = asymptotic_variance > 0.0
                              ? size_result.variance / asymptotic_variance
                              : kInf;
  if (std::fabs(report.z_score) > 4.0) {
    report.flagged = true;
    report.note = "empirical mean far from the asymptotic value";
  } else if (report.variance_ratio < 0.5 || report.variance_ratio > 2.0) {
    report.flagged = true;
    report.note = "empirical variance far from the asymptotic value";
  }
  return report;
}

void write_result_files(const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir(result.config.out_dir);
  fs::create_directories(dir);

  char provenance[128];
  std::snprintf(provenance, sizeof(provenance),
                "# kmstat %s config_hash=%016llx seed=%llu\n", kVersion,
                static_cast<unsigned long long>(result.config.config_hash()),
                static_cast<unsigned long long>(result.config.seed));

  {
    std::ofstream values(dir / "values.csv", std::ios::binary);
    values << provenance << "n,replication,value\n";
    for (const auto& series : result.per_size)
      for (std::size_t rep = 0; rep < series.values.size(); ++rep)
        values << series.n << ',' << rep << ','
               << csv_number(series.values[rep]) << '\n';
  }
  {
    std::ofstream ecdf(dir / "ecdf.csv", std::ios::binary);
    ecdf << provenance << "n,grid,fraction\n";
    for (const auto& series : result.per_size) {
      const auto table = ecdf_export(series.values, result.ecdf_grid);
      for (const auto& [g, frac] : table)
        ecdf << series.n << ',' << csv_number(g) << ',' << csv_number(frac)
             << '\n';
    }
  }
  {
    nlohmann::json summary;
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(result.config.config_hash()));
    summary["experiment"] = experiment_name(result.config.kind);
    summary["model"] = "exp:" + csv_number(result.config.rate);
    summary["gamma"] = result.config.gamma;
    summary["replications"] = result.config.replications;
    summary["seed"] = result.config.seed;
    summary["config_hash"] = hash_hex;
    summary["version"] = kVersion;
    summary["asymptotic"] = {{"mean", result.asymptotic_mean},
                             {"variance", result.asymptotic_variance}};
    nlohmann::json sizes = nlohmann::json::array();
    for (const auto& series : result.per_size) {
      const AsymptoticsReport report = compare_asymptotics(
          series, result.asymptotic_mean, result.asymptotic_variance);
      sizes.push_back({{"n", series.n},
                       {"mean", series.mean},
                       {"variance", series.variance},
                       {"z_score", report.z_score},
                       {"variance_ratio", report.variance_ratio},
                       {"flagged", report.flagged},
                       {"note", report.note}});
    }
    summary["per_size"] = sizes;
    std::ofstream out(dir / "summary.json", std::ios::binary);
    out << summary.dump(2) << '\n';
  }
}

}  // namespace kmstat
