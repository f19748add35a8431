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

#ifndef DBNRL_OPTIMIZER_HPP_
#define DBNRL_OPTIMIZER_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dbnrl/gibbs.hpp"
#include "dbnrl/model.hpp"

namespace dbnrl {

Vec project_box(const Vec& theta, const Box& box);

Vec generalized_gradient(const Vec& theta, const Vec& grad, double eta,
                         const Box& box);

struct OptimizerConfig {
  int iterations = 300;  // K
  int draws = 20;        // B per iteration
  double eta0 = 0.05;
  double exponent = 0.6;  // eta_k = eta0 * k^-exponent
  std::uint64_t seed = 0;
  double window_fraction = 0.1;
  bool record_time = false;
  bool record_iterates = false;  // keep every theta_k in the trace
  std::optional<Vec> theta0;  // defaults to zero gains

  void validate() const;
  double eta(int k) const;  // k is 1-based
  // Upper bound eta0^2 * zeta(2 p) on the sum of squared steps.
  double step_square_bound() const;
};

struct TraceRow {
  int iteration = 0;
  double j_hat = 0.0;
  double grad_norm_sq = 0.0;
  bool projected = false;
  double eta = 0.0;
  double seconds = 0.0;
  std::uint64_t theta_hash = 0;
};

struct OptimizationTrace {
  std::vector<TraceRow> rows;
  std::vector<Vec> iterates;  // theta after each step, when requested
};

std::string trace_csv(const OptimizationTrace& trace);

// Supplies the posterior draws used at each iteration.
class DrawSource {
 public:
  virtual ~DrawSource() = default;
  virtual std::vector<ModelParams> next(int iteration, int count,
                                        Rng& rng) = 0;
};

// Reuses one pool for every iteration (deterministic CI runs).
class FixedDrawPool : public DrawSource {
 public:
  explicit FixedDrawPool(std::vector<ModelParams> pool);
  std::vector<ModelParams> next(int iteration, int count, Rng& rng) override;

 private:
  std::vector<ModelParams> pool_;
};

// Continues a Gibbs chain, collecting fresh thinned draws each iteration.
class GibbsDrawSource : public DrawSource {
 public:
  // data, priors and start are in the scaled space; emitted draws are mapped
  // back through scaling.
  GibbsDrawSource(TrajectoryData data, PriorHyper priors, ModelParams start,
                  int thinning, Scaling scaling);
  std::vector<ModelParams> next(int iteration, int count, Rng& rng) override;

 private:
  TrajectoryData data_;
  PriorHyper priors_;
  ModelParams state_;
  int thinning_;
  Scaling scaling_;
};

struct OptimizationResult {
  PolicyParams policy;
  OptimizationTrace trace;
};

// Generic projected ascent on theta using a stochastic gradient oracle.
// value may be empty, in which case j_hat is reported as NaN.
using GradientOracle = std::function<Vec(const Vec& theta, int k, Rng& rng,
                                         double* value)>;
Vec projected_ascent(const GradientOracle& oracle, const Vec& theta0,
                     const Box& box, const OptimizerConfig& config,
                     OptimizationTrace* trace);

// With a non-empty gain_scale the ascent runs on theta~ where
// theta = gain_scale .* theta~, and initial.box bounds theta~. The returned
// policy is in raw units with its box mapped the same way.
OptimizationResult dbn_rl_optimize(DrawSource& source,
                                   const PolicyParams& initial,
                                   const RewardSpec& reward, const Vec& s1,
                                   const OptimizerConfig& config,
                                   const Vec& gain_scale = Vec());

// Flattened per-entry factors sd(a_t^i) / sd(s_t^k) in PolicyParams order.
Vec gain_scale(const Scaling& scaling, int n, int m, int H);

// Raw-unit box for bounds stated on standardized gains.
Box scale_box(const Box& box, const Vec& gain_scale);

struct ConvergenceReport {
  double first_window_mean = 0.0;
  double last_window_mean = 0.0;
  double projected_fraction = 0.0;
  std::vector<double> running_mean;  // of grad_norm_sq
  int window = 0;
};

ConvergenceReport convergence_diagnostics(const OptimizationTrace& trace,
                                          double window_fraction = 0.1);

}  // namespace dbnrl

#endif  // DBNRL_OPTIMIZER_HPP_
