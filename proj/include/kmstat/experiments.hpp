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

#ifndef KMSTAT_EXPERIMENTS_HPP_
#define KMSTAT_EXPERIMENTS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "kmstat/models.hpp"

namespace kmstat {

enum class ExperimentKind {
  kCvmFig1,           // n * theta(F_hat) under the CvM kernel (degenerate)
  kMmdFig2,           // n * MMD^2 against the null (OU kernel)
  kCltNondegenerate,  // sqrt(n) (theta(F_hat) - theta(F; tau)), K = xy
};

const char* experiment_name(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kCvmFig1;
  double rate = 1.0;    // base exponential survival model
  double gamma = 0.5;   // Koziol-Green censoring exponent
  std::vector<int> sample_sizes;  // empty = experiment default
  int replications = 0;           // 0 = experiment default
  std::uint64_t seed = 7;
  unsigned threads = 0;  // 0 = hardware concurrency
  bool paper_scale = false;  // restore the paper's n=3000 x 1000-rep design
  std::string out_dir;       // empty = no files written

  /// Fills sample_sizes/replications with the experiment's defaults when
  /// they were not set, honouring paper_scale.
  void apply_defaults();

  /// Stable hash of the experiment-defining fields (not the output path).
  std::uint64_t config_hash() const;
};

/// Per-sample-size series of scaled per-replication statistic values.
struct SizeResult {
  int n = 0;
  std::vector<double> values;  // one per replication, ordered by index
  double mean = 0.0;
  double variance = 0.0;       // unbiased
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SizeResult> per_size;
  double asymptotic_mean = 0.0;
  double asymptotic_variance = 0.0;
  std::vector<double> ecdf_grid;  // shared grid for all sizes
};

/// Runs the configured Monte Carlo experiment. Each replication draws its
/// own RNG substream keyed by (seed, global replication index), so results
/// are byte-identical for any worker count. Throws RegimeMismatch when the
/// classification of (kernel, model) contradicts the experiment's scaling.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// ECDF of `values` on `grid` (fractions of values <= grid point).
/// Throws UnsortedGrid when the grid is not nondecreasing.
std::vector<std::pair<double, double>> ecdf_export(
    const std::vector<double>& values, const std::vector<double>& grid);

struct AsymptoticsReport {
  double z_score = 0.0;         // (empirical mean - mu) / SE(mean)
  double variance_ratio = 0.0;  // empirical variance / sigma^2
  double mu = 0.0, sigma = 0.0;
  double mu_hat = 0.0, sigma_hat = 0.0;
  bool flagged = false;  // far from the asymptotic reference; not a failure
  std::string note;
};

/// Compares one size's empirical mean/variance against the asymptotic
/// reference, reporting the z-score, the variance ratio and the two
/// one-sigma intervals [mu +- sigma], [mu_hat +- sigma_hat].
AsymptoticsReport compare_asymptotics(const SizeResult& size_result,
                                      double asymptotic_mean,
                                      double asymptotic_variance);

/// Writes values.csv, ecdf.csv and summary.json into config.out_dir.
void write_result_files(const ExperimentResult& result);

}  // namespace kmstat

#endif  // KMSTAT_EXPERIMENTS_HPP_
