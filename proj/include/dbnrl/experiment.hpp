// Copyright 2026 The dbnrl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DBNRL_EXPERIMENT_HPP_
#define DBNRL_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dbnrl/dataset.hpp"
#include "dbnrl/gibbs.hpp"
#include "dbnrl/model_io.hpp"
#include "dbnrl/optimizer.hpp"

namespace dbnrl {

// ---------------------------------------------------------------------------
// Fermentation case study.

inline constexpr int kLabBatchCount = 8;
inline constexpr double kReferenceFeedAmplitude = 0.0045;  // L/h at the peak

Vec case_study_s1();
std::vector<std::string> network_state_names();

// Feed schedule of one of the synthetic lab batches, `steps` entries with the
// final entry zero.
std::vector<double> lab_feed_profile(int batch, int steps);
Dataset simulate_lab_batches(const SimulationSetup& setup);
// Mean and max of the lab batches per step.
FeedSchedule human_schedule(const SimulationSetup& setup);

KineticRun deterministic_run(const SimulationSetup& setup,
                             const std::vector<double>& feed);
// sigma(s_t) = reference_t / kappa where the reference is a deterministic
// run under mean feeding.
NoiseSpec case_noise(const KineticRun& reference, double kappa);

struct RewardCoefficients {
  double feed_cost = 534.52;
  double titer_gain = 1.29;
  double terminal_offset = -15.0;
  double purification_cost = 0.05;
  double log_product_gain = 1.3;
  double log_impurity_gain = 1.0;
  double m_c = -1000.0;
};

RewardSpec fermentation_reward(int H, const RewardCoefficients& coef);
// Rows X_f, C, S, N, V of every gain matrix share one interval.
Box fermentation_box(int H);

// Linearization of the kinetic drift along a reference run (lipid held on
// the reference path).
ModelParams fermentation_anchor(const SimulationSetup& setup,
                                const KineticRun& reference);
PriorHyper anchor_priors(const ModelParams& anchor,
                         const std::vector<Vec>& anchor_states);

// Posterior-mean reference schedule plus gains, clamped to action bounds.
DeployablePolicy make_deployable(const PolicyParams& params,
                                 const std::vector<ModelParams>& draws,
                                 const Vec& action_lower,
                                 const Vec& action_upper);

// ---------------------------------------------------------------------------
// Configuration.

struct ExperimentConfig {
  std::string scenario = "fermentation";  // or "integrated"
  int replications = 50;
  double kappa = 10.0;  // +inf for the deterministic simulator
  std::uint64_t seed = 1;
  GibbsSettings gibbs{20, 500, 5};
  OptimizerConfig optimizer;
  bool fresh_draws = true;
  // Box bounds apply to gains in data-standardized units.
  bool standardized_gains = true;
  RewardCoefficients reward;
  int macro_replications = 30;
  int rollouts = 20;
  std::string kinetics_path;
  bool timing = false;
  std::vector<int> benchmark_horizons{8, 15, 36};
  int benchmark_repeats = 20;
  int shapley_h = 15;
  int shapley_t = 35;

  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  std::string to_json() const;
  std::uint64_t hash() const;  // of the canonical JSON form
  void validate() const;
  SimulationSetup setup() const;
};

// ---------------------------------------------------------------------------
// Pipelines.

struct FitResult {
  PosteriorDraws draws;  // raw units
  PriorHyper priors;     // raw-unit centers
  ModelParams structure;
  Scaling scaling;
  ModelParams chain_state;  // last chain state, scaled units

  // Continues the chain for fresh draws during optimization.
  GibbsDrawSource continuation(const TrajectoryData& data, int thinning) const;
};

FitResult fit_scaled(const TrajectoryData& data, const ModelParams& structure,
                     const PriorHyper& priors, const GibbsSettings& settings,
                     std::uint64_t seed);

struct Reference {
  SimulationSetup setup;
  FeedSchedule human;
  KineticRun mean_run;
  NoiseSpec noise;
  ModelParams anchor;
};

Reference build_reference(const ExperimentConfig& config);

Dataset simulate_dataset(const ExperimentConfig& config, const Reference& ref,
                         std::uint64_t seed);
FitResult fit_fermentation(const ExperimentConfig& config,
                           const Reference& ref, const Dataset& data,
                           std::uint64_t seed);
OptimizationResult optimize_fermentation(const ExperimentConfig& config,
                                         const Reference& ref,
                                         const FitResult& fit,
                                         const Dataset& data,
                                         std::uint64_t seed);

struct RolloutOutcome {
  double reward = 0.0;
  double titer = 0.0;
  double yield = 0.0;
  double purity = 0.0;
  std::vector<double> actions;
};

using StepPolicy = std::function<double(int step, const KineticState& s)>;

RolloutOutcome rollout_fermentation(const Reference& ref,
                                    const RewardCoefficients& coef,
                                    const StepPolicy& policy,
                                    std::uint64_t seed);
StepPolicy policy_feed(const DeployablePolicy& policy);
StepPolicy schedule_feed(const std::vector<double>& schedule);

struct MetricSummary {
  double mean = 0.0;
  double se = 0.0;
};

MetricSummary summarize(const std::vector<double>& values);

struct PolicyRow {
  std::string policy;
  std::vector<std::string> metrics;
  std::vector<MetricSummary> values;
  std::vector<std::vector<double>> per_macro;  // per metric
};

struct EvaluationReport {
  std::vector<PolicyRow> rows;
  int macro_replications = 0;
  int failed = 0;  // replications excluded as degenerate

  const PolicyRow& row(const std::string& policy) const;
  MetricSummary metric(const std::string& policy,
                       const std::string& name) const;
};

std::string evaluation_csv(const EvaluationReport& report);

// Trains a policy per macro-replication and evaluates it, the initial
// (zero-gain) policy and the reference schedule on shared seeds.
EvaluationReport evaluate_pipeline(const ExperimentConfig& config);

// Evaluates fixed policy documents (plus the reference schedule).
EvaluationReport evaluate_policies(const ExperimentConfig& config,
                                   const std::vector<DeployablePolicy>& policies,
                                   const std::vector<std::string>& names);

struct ProfileRow {
  double time_h = 0.0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

std::vector<ProfileRow> feeding_profile(const ExperimentConfig& config,
                                        const DeployablePolicy& policy,
                                        int rollouts);
std::string profiles_csv(const std::vector<ProfileRow>& rows);

struct BenchmarkRow {
  int H = 0;
  int n = 0;
  int m = 0;
  std::string method;
  double mean_seconds = 0.0;
  double stderr_seconds = 0.0;
};

std::vector<BenchmarkRow> benchmark_gradients(const std::vector<int>& horizons,
                                              int n, int m, int repeats,
                                              std::uint64_t seed);
std::string benchmark_csv(const std::vector<BenchmarkRow>& rows);

// Random model with contractive dynamics, used by tests and benchmarks.
ModelParams random_model(int n, int m, int H, Rng& rng);
PolicyParams random_policy(int n, int m, int H, Rng& rng);
RewardSpec random_reward(int n, int m, int H, Rng& rng);

// ---------------------------------------------------------------------------
// Integrated fermentation + purification.

inline constexpr int kPurificationSteps = 3;  // states after centrifuge, P1, P2

struct IntegratedModel {
  ModelParams fermentation;
  ModelParams purification;
};

struct IntegratedPolicy {
  PolicyParams fermentation;
  PolicyParams purification;
};

// Linearized centrifuge map at a fermentation mean state.
struct Bridge {
  Vec offset;  // centrifuge(mean)
  Mat jacobian;  // 2 x 5
};

Bridge linearize_centrifuge(const Vec& fermentation_state);

double integrated_value(const IntegratedModel& w, const IntegratedPolicy& p,
                        const RewardSpec& ferm_reward,
                        const RewardSpec& pur_reward, const Vec& s1);
Vec integrated_gradient(const IntegratedModel& w, const IntegratedPolicy& p,
                        const RewardSpec& ferm_reward,
                        const RewardSpec& pur_reward, const Vec& s1);

RewardSpec integrated_fermentation_reward(int H, const RewardCoefficients& c);
RewardSpec purification_reward(const RewardCoefficients& c);

// Human log-saturation schedule for the two precipitation steps.
Vec purification_reference();

struct IntegratedRollout {
  bool failed = false;
  double reward = 0.0;
  double titer = 0.0;
  double yield = 0.0;
  double purity = 0.0;
  KineticRun fermentation;
  std::vector<Vec> purification_states;  // 3 entries
  std::vector<double> log_saturation;     // 2 entries
};

using PurificationPolicy = std::function<double(int step, const Vec& s)>;

IntegratedRollout rollout_integrated(const Reference& ref,
                                     const RewardCoefficients& coef,
                                     const StepPolicy& feed,
                                     const PurificationPolicy& purify,
                                     std::uint64_t seed);

EvaluationReport run_integrated(const ExperimentConfig& config);

}  // namespace dbnrl

#endif  // DBNRL_EXPERIMENT_HPP_
