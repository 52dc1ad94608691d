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

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kmstat/errors.hpp"
#include "kmstat/experiments.hpp"
#include "kmstat/kernels.hpp"
#include "kmstat/models.hpp"
#include "kmstat/nulldist.hpp"
#include "kmstat/operators.hpp"
#include "kmstat/rng.hpp"
#include "kmstat/statistics.hpp"
#include "kmstat/survival.hpp"
#include "kmstat/version.hpp"

namespace {

using nlohmann::json;
using namespace kmstat;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct StatArgs {
  std::string input;
  std::string kernel_spec;
  std::string null_spec;
};

json statistic_json(const std::string& which, const StatArgs& args) {
  const CensoredSample sample = read_censored_csv(args.input);
  SurvivalModelPtr null_model;
  if (!args.null_spec.empty()) null_model = parse_survival_model(args.null_spec);
  const KernelPtr kernel = parse_kernel(args.kernel_spec, null_model);
  const KaplanMeierFit fit(sample);

  StatisticResult result;
  result.n = sample.size();
  result.n_events = sample.event_count();

  StatisticComponents components;
  components.vstat = vstat(fit, *kernel);
  components.diagonal = diagonal_term(fit, *kernel);
  double sum_sq = 0.0;
  for (double w : fit.weights()) sum_sq += w * w;
  components.pair_mass = fit.total_mass() * fit.total_mass() - sum_sq;
  result.components = components;

  if (which == "vstat") {
    result.value = components.vstat;
  } else if (which == "ustat") {
    result.value = ustat(fit, *kernel);
  } else {
    if (!null_model)
      throw InvalidParameter("mmd needs a null model (--null exp:RATE)");
    result.value = mmd2(fit, kernel, null_model);
  }

  json out;
  out["value"] = result.value;
  out["n"] = result.n;
  out["n_events"] = result.n_events;
  out["kernel"] = kernel->name();
  out["components"] = {{"vstat", components.vstat},
                       {"diagonal", components.diagonal},
                       {"pair_mass", components.pair_mass}};
  if (null_model) {
    if (which == "mmd") out["null"] = null_model->describe();
    const RegimeClassification regime = classify_regime(null_model, kernel);
    result.scaling_hint = regime.regime == Regime::kNonDegenerate
                              ? ScalingHint::kSqrtN
                              : ScalingHint::kN;
    out["regime"] = regime_name(regime.regime);
    out["scaling_hint"] =
        result.scaling_hint == ScalingHint::kSqrtN ? "sqrt_n" : "n";
  }
  return out;
}

json diagnostic_json(const IntegralDiagnostic& diag) {
  json j;
  j["finite"] = diag.finite;
  if (diag.finite)
    j["value"] = diag.value;
  else
    j["tail_increments"] = diag.tail_increments;
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"Kaplan-Meier V- and U-statistics for right-censored data"};
  app.set_version_flag("--version", std::string("kmstat ") + kVersion);
  app.require_subcommand(1);

  // --- vstat / ustat / mmd -------------------------------------------------
  StatArgs stat_args;
  std::vector<CLI::App*> stat_cmds;
  for (const char* name : {"vstat", "ustat", "mmd"}) {
    CLI::App* cmd = app.add_subcommand(
        name, std::string("Compute the ") + name + " statistic from a CSV file");
    cmd->add_option("--input", stat_args.input, "CSV file with time,event columns")
        ->required();
    cmd->add_option("--kernel", stat_args.kernel_spec,
                    "Kernel spec: ou | gauss:BW | prod:CENTER | cvm")
        ->required();
    cmd->add_option("--null", stat_args.null_spec,
                    "Null model spec (exp:RATE); required for cvm and mmd");
    stat_cmds.push_back(cmd);
  }

  // --- analyze ---------------------------------------------------------------
  auto* analyze = app.add_subcommand(
      "analyze", "Classify the degeneracy regime and report sigma^2");
  std::string an_model = "exp:1", an_censor = "none", an_kernel;
  double an_tau = kInf, an_tol = 1e-8;
  bool an_conditions = false;
  analyze->add_option("--model", an_model, "Survival model (exp:RATE)");
  analyze->add_option("--censor", an_censor, "Censoring model (kg:GAMMA | none)");
  analyze->add_option("--kernel", an_kernel, "Kernel spec")->required();
  analyze->add_option("--tau", an_tau, "Upper limit of the projection integral");
  analyze->add_option("--tol", an_tol,
                      "Degeneracy tolerance relative to E_F(phi^2)");
  analyze->add_flag("--conditions", an_conditions,
                    "Also run the Condition 1/2 integrability diagnostics");

  // --- nulldist ----------------------------------------------------------------
  auto* nd = app.add_subcommand(
      "nulldist", "Degenerate limit law: mean, variance and spectrum");
  std::string nd_model = "exp:1", nd_censor = "kg:0.5", nd_kernel = "ou";
  int nd_trunc = 100, nd_nodes = 2000;
  std::uint64_t nd_seed = 7;
  bool nd_ustat = false;
  nd->add_option("--model", nd_model, "Survival model (exp:RATE)");
  nd->add_option("--censor", nd_censor, "Censoring model (kg:GAMMA | none)");
  nd->add_option("--kernel", nd_kernel, "Kernel spec");
  nd->add_option("--trunc", nd_trunc, "Spectrum truncation length");
  nd->add_option("--nodes", nd_nodes, "Nystrom node count");
  nd->add_option("--seed", nd_seed, "Node-sampling seed");
  nd->add_flag("--ustat-adjust", nd_ustat,
               "Also report the U-statistic limit adjustment");

  // --- simulate -----------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate",
                                 "Monte Carlo experiments (paper figures)");
  std::string sim_experiment, sim_model = "exp:1", sim_out;
  double sim_gamma = 0.5;
  std::vector<int> sim_sizes;
  int sim_reps = 0;
  std::uint64_t sim_seed = 7;
  unsigned sim_threads = 0;
  bool sim_paper = false;
  sim->add_option("--experiment", sim_experiment, "cvm | mmd | clt")->required();
  sim->add_option("--model", sim_model, "Survival model (exp:RATE)");
  sim->add_option("--gamma", sim_gamma, "Koziol-Green gamma (or 'a' for clt)");
  sim->add_option("--n", sim_sizes, "Sample sizes")->delimiter(',');
  sim->add_option("--reps", sim_reps, "Replications (0 = experiment default)");
  sim->add_option("--seed", sim_seed, "Master seed");
  sim->add_option("--threads", sim_threads, "Worker threads (0 = hardware)");
  sim->add_option("--out", sim_out, "Output directory for CSV/JSON files");
  sim->add_flag("--paper-scale", sim_paper,
                "Use the paper's n=3000 x 1000-replication design");

  // --- test ------------------------------------------------------------------
  auto* gof = app.add_subcommand(
      "test", "Goodness-of-fit test with the Monte Carlo null quantile");
  std::string gof_kind, gof_input, gof_null = "exp:1", gof_censor = "kg:0.5";
  double gof_alpha = 0.05;
  int gof_trunc = 100, gof_nodes = 2000;
  std::uint64_t gof_seed = 7;
  std::size_t gof_draws = 200000;
  gof->add_option("statistic", gof_kind, "cvm | mmd")->required();
  gof->add_option("--input", gof_input, "CSV file with time,event columns")
      ->required();
  gof->add_option("--null", gof_null, "Null model (exp:RATE)");
  gof->add_option("--censor", gof_censor,
                  "Assumed censoring model for the null distribution");
  gof->add_option("--alpha", gof_alpha, "Test level");
  gof->add_option("--draws", gof_draws, "Monte Carlo draws for the p-value");
  gof->add_option("--nodes", gof_nodes, "Nystrom node count");
  gof->add_option("--trunc", gof_trunc, "Spectrum truncation length");
  gof->add_option("--seed", gof_seed, "Seed for nodes and limit draws");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    for (std::size_t i = 0; i < stat_cmds.size(); ++i) {
      if (stat_cmds[i]->parsed()) {
        const char* names[] = {"vstat", "ustat", "mmd"};
        std::cout << statistic_json(names[i], stat_args).dump(2) << "\n";
        return kExitOk;
      }
    }

    if (analyze->parsed()) {
      const SurvivalModelPtr model = parse_survival_model(an_model);
      const JointModel joint = parse_joint_model(model, an_censor);
      const KernelPtr kernel = parse_kernel(an_kernel, model);
      const RegimeClassification regime =
          classify_regime(model, kernel, an_tau, an_tol);
      json out;
      out["model"] = model->describe();
      out["censoring"] = joint.censoring().describe();
      out["kernel"] = kernel->name();
      out["regime"] = regime_name(regime.regime);
      out["var_phi"] = regime.var_phi;
      out["phi_mean"] = regime.phi_mean;
      out["scaling_hint"] =
          regime.regime == Regime::kNonDegenerate ? "sqrt_n" : "n";
      if (regime.regime == Regime::kNonDegenerate) {
        const double s2 = sigma2(joint, kernel);
        out["sigma2"] = s2;
        out["clt_variance"] = 4.0 * s2;
      }
      if (an_conditions) {
        for (auto which : {ConditionSet::kCondition1, ConditionSet::kCondition2}) {
          const ConditionDiagnostic diag = condition_check(joint, kernel, which);
          const char* label =
              which == ConditionSet::kCondition1 ? "condition1" : "condition2";
          out[label] = {{"finite", diag.finite},
                        {"pair_part", diagnostic_json(diag.pair_part)},
                        {"diag_part", diagnostic_json(diag.diag_part)}};
        }
      }
      std::cout << out.dump(2) << "\n";
      return kExitOk;
    }

    if (nd->parsed()) {
      const SurvivalModelPtr model = parse_survival_model(nd_model);
      const JointModel joint = parse_joint_model(model, nd_censor);
      const KernelPtr kernel = parse_kernel(nd_kernel, model);
      const TransformedKernel kprime = transformed_kernel(model, kernel);
      Rng rng = Rng::substream(nd_seed, 0);
      const LimitDistribution dist =
          limit_distribution(joint, kprime, nd_trunc, nd_nodes, rng);
      json out;
      out["model"] = model->describe();
      out["censoring"] = joint.censoring().describe();
      out["kernel"] = kernel->name();
      out["nodes"] = nd_nodes;
      out["truncation"] = nd_trunc;
      out["seed"] = nd_seed;
      out["mean"] = dist.mean_offset;
      out["variance_closed"] = dist.variance_closed;
      out["variance_spectral"] = dist.variance_spectral();
      out["eigenvalues"] = dist.eigenvalues;
      if (nd_ustat) {
        const LimitDistribution adjusted =
            ustat_limit_adjust(dist, joint, kernel);
        out["ustat_adjusted"] = {
            {"mean", adjusted.mean_offset},
            {"variance_spectral", adjusted.variance_spectral()},
            {"eigenvalues", adjusted.eigenvalues}};
      }
      std::cout << out.dump(2) << "\n";
      return kExitOk;
    }

    if (sim->parsed()) {
      ExperimentConfig config;
      if (sim_experiment == "cvm") {
        config.kind = ExperimentKind::kCvmFig1;
      } else if (sim_experiment == "mmd") {
        config.kind = ExperimentKind::kMmdFig2;
      } else if (sim_experiment == "clt") {
        config.kind = ExperimentKind::kCltNondegenerate;
      } else {
        throw InvalidParameter("unknown experiment '" + sim_experiment +
                               "' (expected cvm, mmd or clt)");
      }
      const SurvivalModelPtr model = parse_survival_model(sim_model);
      const auto rate = model->exponential_rate();
      if (!rate)
        throw InvalidParameter("simulate currently supports exp:RATE models");
      config.rate = *rate;
      config.gamma = sim_gamma;
      config.sample_sizes = sim_sizes;
      config.replications = sim_reps;
      config.seed = sim_seed;
      config.threads = sim_threads;
      config.paper_scale = sim_paper;
      config.out_dir = sim_out;

      const ExperimentResult result = run_experiment(config);
      json out;
      out["experiment"] = experiment_name(result.config.kind);
      out["gamma"] = result.config.gamma;
      out["replications"] = result.config.replications;
      out["seed"] = result.config.seed;
      out["asymptotic"] = {{"mean", result.asymptotic_mean},
                           {"variance", result.asymptotic_variance}};
      json sizes = json::array();
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
      out["per_size"] = sizes;
      if (!sim_out.empty()) out["out_dir"] = sim_out;
      std::cout << out.dump(2) << "\n";
      return kExitOk;
    }

    if (gof->parsed()) {
      if (gof_kind != "cvm" && gof_kind != "mmd")
        throw InvalidParameter("test statistic must be cvm or mmd");
      const CensoredSample sample = read_censored_csv(gof_input);
      const SurvivalModelPtr model = parse_survival_model(gof_null);
      const JointModel joint = parse_joint_model(model, gof_censor);
      const KernelPtr kernel =
          gof_kind == "cvm" ? cvm_kernel(model) : ou_kernel();
      const KaplanMeierFit fit(sample);
      const double n = static_cast<double>(sample.size());

      const double statistic = gof_kind == "cvm"
                                   ? vstat(fit, *kernel)
                                   : mmd2(fit, kernel, model);
      const double scaled = n * statistic;

      const TransformedKernel kprime = transformed_kernel(model, kernel);
      Rng node_rng = Rng::substream(gof_seed, 0);
      const LimitDistribution dist =
          limit_distribution(joint, kprime, gof_trunc, gof_nodes, node_rng);
      Rng draw_rng = Rng::substream(gof_seed, 1);
      const std::vector<double> draws = sample_limit(dist, gof_draws, draw_rng);
      std::size_t at_least = 0;
      for (double v : draws)
        if (v >= scaled) ++at_least;
      const double p_value = (1.0 + static_cast<double>(at_least)) /
                             (static_cast<double>(draws.size()) + 1.0);

      json out;
      out["statistic"] = statistic;
      out["scaled_statistic"] = scaled;
      out["n"] = sample.size();
      out["n_events"] = sample.event_count();
      out["null"] = model->describe();
      out["censoring"] = joint.censoring().describe();
      out["kernel"] = kernel->name();
      out["limit_mean"] = dist.mean_offset;
      out["limit_variance"] = dist.variance_spectral();
      out["mc_draws"] = draws.size();
      out["p_value"] = p_value;
      out["alpha"] = gof_alpha;
      out["decision"] = p_value < gof_alpha ? "reject" : "fail_to_reject";
      std::cout << out.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const QuadratureFailure& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DivergentIntegral& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const SingularSurvival& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DegenerateWeightMass& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NonConvergedEigensolve& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
