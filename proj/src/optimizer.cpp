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

#include "dbnrl/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#include "dbnrl/dbn.hpp"
#include "dbnrl/gradient.hpp"

namespace dbnrl {

Vec project_box(const Vec& theta, const Box& box) {
  box.check(theta.size());
  return theta.cwiseMax(box.lower).cwiseMin(box.upper);
}

Vec generalized_gradient(const Vec& theta, const Vec& grad, double eta,
                         const Box& box) {
  if (!(eta > 0)) throw ConfigError("stepsize must be positive");
  return (project_box(theta + eta * grad, box) - theta) / eta;
}

void OptimizerConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (draws < 1) throw ConfigError("draws per iteration must be >= 1");
  if (!(eta0 > 0)) throw ConfigError("eta0 must be positive");
  if (!(exponent > 0.5)) {
    throw ConfigError("stepsize exponent must exceed 0.5 for square summability");
  }
  if (exponent > 1.0) {
    throw ConfigError("stepsize exponent above 1 makes the steps summable");
  }
  if (!(window_fraction > 0) || window_fraction > 0.5) {
    throw ConfigError("window fraction must lie in (0, 0.5]");
  }
}

double OptimizerConfig::eta(int k) const {
  return eta0 * std::pow(static_cast<double>(k), -exponent);
}

double OptimizerConfig::step_square_bound() const {
  // zeta(s) <= 1 + 1/(s-1) for s > 1.
  const double s = 2.0 * exponent;
  return eta0 * eta0 * (1.0 + 1.0 / (s - 1.0));
}

namespace {

std::uint64_t hash_vector(const Vec& x) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::uint64_t bits = 0;
    const double v = x(i);
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace

std::string trace_csv(const OptimizationTrace& trace) {
  std::ostringstream out;
  out << "iteration,J_hat,grad_norm_sq,projected,eta,seconds\n";
  for (const TraceRow& r : trace.rows) {
    out << r.iteration << ',' << format_double(r.j_hat) << ','
        << format_double(r.grad_norm_sq) << ',' << (r.projected ? 1 : 0) << ','
        << format_double(r.eta) << ',' << format_double(r.seconds) << '\n';
  }
  return out.str();
}

FixedDrawPool::FixedDrawPool(std::vector<ModelParams> pool)
    : pool_(std::move(pool)) {
  if (pool_.empty()) throw ConfigError("draw pool is empty");
}

std::vector<ModelParams> FixedDrawPool::next(int, int, Rng&) { return pool_; }

GibbsDrawSource::GibbsDrawSource(TrajectoryData data, PriorHyper priors,
                                 ModelParams start, int thinning,
                                 Scaling scaling)
    : data_(std::move(data)),
      priors_(std::move(priors)),
      state_(std::move(start)),
      thinning_(thinning),
      scaling_(std::move(scaling)) {
  if (thinning_ < 1) throw ConfigError("thinning must be >= 1");
  data_.check(state_);
  priors_.check(state_);
}

std::vector<ModelParams> GibbsDrawSource::next(int, int count, Rng& rng) {
  std::vector<ModelParams> out;
  out.reserve(count);
  for (int b = 0; b < count; ++b) {
    for (int i = 0; i < thinning_; ++i) {
      state_ = gibbs_sweep(state_, data_, priors_, rng);
    }
    out.push_back(scaling_.to_raw(state_));
  }
  return out;
}

Vec projected_ascent(const GradientOracle& oracle, const Vec& theta0,
                     const Box& box, const OptimizerConfig& config,
                     OptimizationTrace* trace) {
  config.validate();
  box.check(theta0.size());
  if (!box.contains(theta0)) {
    throw ConfigError("initial policy lies outside the feasible box");
  }
  Rng rng = make_rng(config.seed, 1);
  Vec theta = theta0;
  for (int k = 1; k <= config.iterations; ++k) {
    const auto start = std::chrono::steady_clock::now();
    double value = std::numeric_limits<double>::quiet_NaN();
    const Vec grad = oracle(theta, k, rng, &value);
    if (!grad.allFinite()) {
      throw NumericError("non-finite gradient at iteration " +
                         std::to_string(k));
    }
    const double eta = config.eta(k);
    const Vec raw = theta + eta * grad;
    const Vec next = project_box(raw, box);
    const Vec g_hat = (next - theta) / eta;
    theta = next;
    if (trace != nullptr) {
      TraceRow row;
      row.iteration = k;
      row.j_hat = value;
      row.grad_norm_sq = g_hat.squaredNorm();
      row.projected = (raw.array() != next.array()).any();
      row.eta = eta;
      row.theta_hash = hash_vector(theta);
      if (config.record_time) {
        row.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
      }
      trace->rows.push_back(row);
      if (config.record_iterates) trace->iterates.push_back(theta);
    }
  }
  return theta;
}

OptimizationResult dbn_rl_optimize(DrawSource& source,
                                   const PolicyParams& initial,
                                   const RewardSpec& reward, const Vec& s1,
                                   const OptimizerConfig& config,
                                   const Vec& gain_scale) {
  initial.check_dimensions();
  const bool scaled = gain_scale.size() > 0;
  if (scaled && (gain_scale.size() != initial.size() ||
                 !(gain_scale.array() > 0.0).all())) {
    throw ConfigError("gain scale must be positive with one entry per gain");
  }
  const Vec unit = Vec::Ones(initial.size());
  const Vec& d = scaled ? gain_scale : unit;
  OptimizationResult result;
  result.policy = initial;
  const Vec theta0 = config.theta0 ? *config.theta0
                                   : Vec(initial.flatten().cwiseQuotient(d));
  PolicyParams work = initial;
  const GradientOracle oracle = [&](const Vec& theta, int k, Rng& rng,
                                    double* value) {
    work.assign(theta.cwiseProduct(d));
    const std::vector<ModelParams> draws = source.next(k, config.draws, rng);
    if (value != nullptr) {
      double total = 0.0;
      for (const ModelParams& w : draws) {
        total += policy_value(w, work, reward, s1);
      }
      *value = total / static_cast<double>(draws.size());
    }
    return Vec(saa_gradient(work, draws, reward, s1).cwiseProduct(d));
  };
  const Vec theta =
      projected_ascent(oracle, theta0, initial.box, config, &result.trace);
  result.policy.assign(theta.cwiseProduct(d));
  if (scaled) result.policy.box = scale_box(initial.box, d);
  return result;
}

Vec gain_scale(const Scaling& scaling, int n, int m, int H) {
  Vec out(static_cast<Eigen::Index>(n) * m * (H - 1));
  Eigen::Index i = 0;
  for (int t = 0; t + 1 < H; ++t) {
    for (int a = 0; a < m; ++a) {
      for (int k = 0; k < n; ++k) {
        out(i++) = scaling.action.at(t)(a) / scaling.state.at(t)(k);
      }
    }
  }
  return out;
}

Box scale_box(const Box& box, const Vec& gain_scale) {
  return Box{box.lower.cwiseProduct(gain_scale),
             box.upper.cwiseProduct(gain_scale)};
}

ConvergenceReport convergence_diagnostics(const OptimizationTrace& trace,
                                          double window_fraction) {
  if (trace.rows.empty()) throw ConfigError("empty optimization trace");
  const int n = static_cast<int>(trace.rows.size());
  ConvergenceReport report;
  report.window = std::max(1, static_cast<int>(std::floor(n * window_fraction)));
  double running = 0.0;
  int projected = 0;
  for (int i = 0; i < n; ++i) {
    running += trace.rows[i].grad_norm_sq;
    report.running_mean.push_back(running / (i + 1));
    if (trace.rows[i].projected) ++projected;
  }
  for (int i = 0; i < report.window; ++i) {
    report.first_window_mean += trace.rows[i].grad_norm_sq;
    report.last_window_mean += trace.rows[n - 1 - i].grad_norm_sq;
  }
  report.first_window_mean /= report.window;
  report.last_window_mean /= report.window;
  report.projected_fraction = static_cast<double>(projected) / n;
  return report;
}

}  // namespace dbnrl
