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

#include <gtest/gtest.h>

#include <cmath>

#include "dbnrl/experiment.hpp"
#include "dbnrl/gradient.hpp"
#include "dbnrl/optimizer.hpp"
#include "test_util.hpp"

namespace dbnrl {
namespace {

Box unit_box(Eigen::Index size) {
  return Box{Vec::Constant(size, -1.0), Vec::Constant(size, 1.0)};
}

TEST(ProjectionTest, ClampsAndIsIdempotent) {
  const Box box = unit_box(4);
  Vec x(4);
  x << -3.0, -0.5, 0.25, 7.0;
  const Vec p = project_box(x, box);
  EXPECT_EQ(p, (Vec(4) << -1.0, -0.5, 0.25, 1.0).finished());
  EXPECT_EQ(project_box(p, box), p);
  EXPECT_TRUE(box.contains(p));
}

TEST(ProjectionTest, GeneralizedGradientIdentities) {
  const Box box = unit_box(3);
  const Vec theta = Vec::Zero(3);
  const Vec grad = (Vec(3) << 1.0, -2.0, 0.5).finished();
  // Interior step: the mapping equals the gradient.
  EXPECT_TRUE(generalized_gradient(theta, grad, 0.1, box).isApprox(grad));
  // At the upper face an outward gradient is cancelled.
  const Vec corner = Vec::Ones(3);
  const Vec out = generalized_gradient(corner, Vec::Ones(3), 0.1, box);
  EXPECT_TRUE(out.isZero(0.0));
  // Unbounded box: always the raw gradient.
  EXPECT_TRUE(generalized_gradient(corner, grad, 10.0, Box::unbounded(3))
                  .isApprox(grad));
}

TEST(OptimizerConfigTest, RejectsBadSchedules) {
  OptimizerConfig c;
  c.exponent = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.exponent = 1.2;
  EXPECT_THROW(c.validate(), ConfigError);
  c.exponent = 0.6;
  c.draws = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.draws = 1;
  c.iterations = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.iterations = 0;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.eta(1), c.eta0);
  EXPECT_LT(c.eta(10), c.eta(9));
}

TEST(ProjectedAscentTest, ZeroIterationsReturnsStart) {
  OptimizerConfig c;
  c.iterations = 0;
  OptimizationTrace trace;
  const Vec theta0 = Vec::Constant(2, 0.3);
  const GradientOracle oracle = [](const Vec& t, int, Rng&, double*) {
    return Vec(Vec::Ones(t.size()));
  };
  EXPECT_EQ(projected_ascent(oracle, theta0, unit_box(2), c, &trace), theta0);
  EXPECT_TRUE(trace.rows.empty());
  EXPECT_THROW(projected_ascent(oracle, Vec::Constant(2, 2.0), unit_box(2), c,
                                &trace),
               ConfigError);
}

TEST(ProjectedAscentTest, ConcaveQuadraticInterior) {
  const double target = 0.3;
  const GradientOracle oracle = [&](const Vec& t, int, Rng&, double* value) {
    if (value != nullptr) *value = -(t(0) - target) * (t(0) - target);
    return Vec(Vec::Constant(1, -2.0 * (t(0) - target)));
  };
  OptimizerConfig c;
  c.iterations = 500;
  c.eta0 = 0.25;
  OptimizationTrace trace;
  const Vec theta =
      projected_ascent(oracle, Vec::Constant(1, -0.9), unit_box(1), c, &trace);
  EXPECT_NEAR(theta(0), target, 1e-4);
}

TEST(ProjectedAscentTest, ConcaveQuadraticOutsideBoxStopsAtFace) {
  const GradientOracle oracle = [](const Vec& t, int, Rng&, double*) {
    return Vec(-2.0 * (t.array() - 3.0).matrix());
  };
  OptimizerConfig c;
  c.iterations = 200;
  c.eta0 = 0.25;
  const Vec theta =
      projected_ascent(oracle, Vec::Zero(2), unit_box(2), c, nullptr);
  EXPECT_EQ(theta, Vec::Ones(2));
}

TEST(DbnRlTest, TwoStepLinearRewardReachesVertex) {
  ModelParams w = ModelParams::zeros(1, 1, 2);
  w.beta_s[0](0, 0) = 0.8;
  w.beta_a[0](0, 0) = 1.5;
  w.v[0](0) = w.v[1](0) = 1.0;
  w.sigma[0](0) = w.sigma[1](0) = 1.0;
  RewardSpec r = RewardSpec::zeros(1, 1, 2);
  r.b[0](0) = -0.5;
  r.c[1](0) = 1.0;
  const Vec s1 = Vec::Constant(1, 2.0);
  // dJ/dtheta = (s1 - mu1) (b1 + c2 beta_a) = 2 * 1.0 > 0.
  PolicyParams initial = PolicyParams::zeros(1, 1, 2);
  initial.box = unit_box(1);
  FixedDrawPool pool({w});
  OptimizerConfig c;
  c.iterations = 100;
  c.draws = 1;
  const OptimizationResult res = dbn_rl_optimize(pool, initial, r, s1, c);
  EXPECT_DOUBLE_EQ(res.policy.vartheta[0](0, 0), 1.0);
  EXPECT_NEAR(policy_value(w, res.policy, r, s1),
              policy_value(w, initial, r, s1) + 2.0, 1e-12);
}

TEST(DbnRlTest, FixedPoolIsDeterministicAndFeasible) {
  Rng rng(41);
  std::vector<ModelParams> draws;
  for (int i = 0; i < 3; ++i) draws.push_back(random_model(3, 2, 6, rng));
  const RewardSpec r = random_reward(3, 2, 6, rng);
  PolicyParams initial = PolicyParams::zeros(3, 2, 6);
  initial.box = unit_box(initial.size());
  OptimizerConfig c;
  c.iterations = 60;
  c.seed = 3;
  FixedDrawPool a(draws), b(draws);
  const Vec s1 = Vec::Ones(3);
  const auto x = dbn_rl_optimize(a, initial, r, s1, c);
  const auto y = dbn_rl_optimize(b, initial, r, s1, c);
  ASSERT_EQ(x.trace.rows.size(), 60u);
  for (std::size_t i = 0; i < x.trace.rows.size(); ++i) {
    EXPECT_EQ(x.trace.rows[i].theta_hash, y.trace.rows[i].theta_hash);
    EXPECT_EQ(x.trace.rows[i].grad_norm_sq, y.trace.rows[i].grad_norm_sq);
  }
  EXPECT_EQ(x.policy.flatten(), y.policy.flatten());
  EXPECT_TRUE(initial.box.contains(x.policy.flatten()));
  EXPECT_GE(policy_value(draws[0], x.policy, r, s1) +
                policy_value(draws[1], x.policy, r, s1) +
                policy_value(draws[2], x.policy, r, s1),
            policy_value(draws[0], initial, r, s1) +
                policy_value(draws[1], initial, r, s1) +
                policy_value(draws[2], initial, r, s1));
}

TEST(DbnRlTest, StandardizedGainsRespectScaledBox) {
  Rng rng(42);
  const ModelParams w = random_model(2, 1, 4, rng);
  const RewardSpec r = random_reward(2, 1, 4, rng);
  PolicyParams initial = PolicyParams::zeros(2, 1, 4);
  initial.box = unit_box(initial.size());
  const Vec d = (Vec(6) << 0.1, 2.0, 0.5, 4.0, 1.0, 0.01).finished();
  FixedDrawPool pool({w});
  OptimizerConfig c;
  c.iterations = 50;
  const auto res = dbn_rl_optimize(pool, initial, r, Vec::Ones(2), c, d);
  EXPECT_TRUE(res.policy.box.lower.isApprox(-d));
  EXPECT_TRUE(res.policy.box.contains(res.policy.flatten()));
  EXPECT_THROW(dbn_rl_optimize(pool, initial, r, Vec::Ones(2), c, -d),
               ConfigError);
}

TEST(DbnRlTest, GainScaleFollowsFlattenOrder) {
  Scaling s = Scaling::identity(2, 1, 3);
  s.state[0] << 2.0, 4.0;
  s.action[0] << 8.0;
  s.state[1] << 1.0, 0.5;
  s.action[1] << 3.0;
  const Vec d = gain_scale(s, 2, 1, 3);
  EXPECT_EQ(d, (Vec(4) << 4.0, 2.0, 3.0, 6.0).finished());
}

TEST(DiagnosticsTest, WindowsAndProjectionFraction) {
  OptimizationTrace trace;
  for (int k = 1; k <= 20; ++k) {
    TraceRow row;
    row.iteration = k;
    row.grad_norm_sq = 21.0 - k;
    row.projected = k % 4 == 0;
    trace.rows.push_back(row);
  }
  const ConvergenceReport rep = convergence_diagnostics(trace, 0.1);
  EXPECT_EQ(rep.window, 2);
  EXPECT_DOUBLE_EQ(rep.first_window_mean, 19.5);
  EXPECT_DOUBLE_EQ(rep.last_window_mean, 1.5);
  EXPECT_DOUBLE_EQ(rep.projected_fraction, 0.25);
  EXPECT_DOUBLE_EQ(rep.running_mean.back(), 10.5);
  EXPECT_THROW(convergence_diagnostics(OptimizationTrace{}, 0.1), ConfigError);
}

TEST(DiagnosticsTest, TraceCsvHasHeaderAndRows) {
  OptimizationTrace trace;
  trace.rows.resize(3);
  const std::string csv = trace_csv(trace);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

}  // namespace
}  // namespace dbnrl
