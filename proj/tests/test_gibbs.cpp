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

#include "dbnrl/dbn.hpp"
#include "dbnrl/experiment.hpp"
#include "dbnrl/gibbs.hpp"
#include "test_util.hpp"

namespace dbnrl {
namespace {

PriorHyper zero_priors(const ModelParams& structure) {
  return PriorHyper::centered_at(ModelParams::zeros(structure.n, structure.m,
                                                     structure.H));
}

TrajectoryData single_node_data(const Vec& y) {
  TrajectoryData d = TrajectoryData::empty(1, 0, 1);
  d.states[0] = y;
  return d;
}

TEST(GibbsConditionalTest, EmptyDataReturnsPriors) {
  Rng rng(31);
  ModelParams w = random_model(2, 1, 3, rng);
  PriorHyper pr = PriorHyper::centered_at(random_model(2, 1, 3, rng));
  pr.beta_sd = 0.7;
  pr.mu_sd = 3.0;
  pr.lambda_sd = 4.0;
  const TrajectoryData d = TrajectoryData::empty(2, 1, 3);
  for (int t = 0; t < 3; ++t) {
    for (int k = 0; k < 2; ++k) {
      const NormalParams mu = mu_conditional(w, d, pr, t, k);
      EXPECT_DOUBLE_EQ(mu.mean, pr.mu_mean[t](k));
      EXPECT_DOUBLE_EQ(mu.var, 9.0);
      const InvGammaParams v = v_conditional(w, d, pr, t, k);
      EXPECT_DOUBLE_EQ(v.shape, pr.v.kappa / 2.0);
      EXPECT_DOUBLE_EQ(v.scale, pr.v.rho / 2.0);
    }
    const NormalParams lambda = lambda_conditional(w, d, pr, t, 0);
    EXPECT_DOUBLE_EQ(lambda.mean, pr.lambda_mean[t](0));
    EXPECT_DOUBLE_EQ(lambda.var, 16.0);
    if (t + 1 < 3) {
      const NormalParams b = beta_conditional(w, d, pr, t, 1, 0, false);
      EXPECT_DOUBLE_EQ(b.mean, pr.beta_s_mean[t](1, 0));
      EXPECT_DOUBLE_EQ(b.var, 0.49);
    }
  }
}

TEST(GibbsConditionalTest, SingleNodeNormalNormal) {
  Vec y(5);
  y << 1.2, 0.4, 2.2, 1.9, 0.7;
  ModelParams w = ModelParams::zeros(1, 0, 1);
  w.v[0](0) = 0.8;
  PriorHyper pr = zero_priors(w);
  pr.mu_mean[0](0) = -0.5;
  pr.mu_sd = 2.0;
  const NormalParams post = mu_conditional(w, single_node_data(y), pr, 0, 0);
  const double precision = 1.0 / 4.0 + 5.0 / 0.64;
  const double mean = (-0.5 / 4.0 + y.sum() / 0.64) / precision;
  EXPECT_NEAR(post.mean, mean, 1e-12);
  EXPECT_NEAR(post.var, 1.0 / precision, 1e-12);
}

TEST(GibbsConditionalTest, SingleNodeInverseGamma) {
  Vec y(4);
  y << 0.3, -0.2, 1.1, 0.5;
  ModelParams w = ModelParams::zeros(1, 0, 1);
  w.mu_s[0](0) = 0.25;
  const PriorHyper pr = zero_priors(w);
  const InvGammaParams post = v_conditional(w, single_node_data(y), pr, 0, 0);
  const double ss = (y.array() - 0.25).square().sum();
  EXPECT_NEAR(post.shape, (pr.v.kappa + 4.0) / 2.0, 1e-12);
  EXPECT_NEAR(post.scale, (pr.v.rho + ss) / 2.0, 1e-12);
}

TEST(GibbsConditionalTest, PerfectFitKeepsPriorScale) {
  const Vec y = Vec::Constant(6, 2.5);
  ModelParams w = ModelParams::zeros(1, 0, 1);
  w.mu_s[0](0) = 2.5;
  const PriorHyper pr = zero_priors(w);
  const InvGammaParams post = v_conditional(w, single_node_data(y), pr, 0, 0);
  EXPECT_DOUBLE_EQ(post.scale, pr.v.rho / 2.0);
}

TEST(GibbsConditionalTest, BetaRegressionClosedForm) {
  // n = 1, H = 2: s2 - mu2 = beta (s1 - mu1) + e.
  ModelParams w = ModelParams::zeros(1, 0, 2);
  w.v[1](0) = 0.5;
  TrajectoryData d = TrajectoryData::empty(1, 0, 2);
  Vec x(4), z(4);
  x << 1.0, -1.0, 2.0, 0.5;
  z << 1.9, -2.2, 4.1, 1.1;
  d.states[0] = x;
  d.states[1] = z;
  PriorHyper pr = zero_priors(w);
  pr.beta_s_mean[0](0, 0) = 1.0;
  pr.beta_sd = 1.5;
  const NormalParams post = beta_conditional(w, d, pr, 0, 0, 0, false);
  const double precision = 1.0 / 2.25 + x.squaredNorm() / 0.25;
  EXPECT_NEAR(post.var, 1.0 / precision, 1e-12);
  EXPECT_NEAR(post.mean, (1.0 / 2.25 + x.dot(z) / 0.25) / precision, 1e-12);
}

TEST(GibbsConditionalTest, DegeneratePriorConcentrates) {
  Rng rng(32);
  const ModelParams truth = random_model(2, 1, 4, rng);
  std::vector<Trajectory> runs;
  for (int i = 0; i < 30; ++i) {
    runs.push_back(sample_trajectory(truth, PolicyParams::zeros(2, 1, 4),
                                     Vec::Random(2), rng));
  }
  const TrajectoryData d = from_trajectories(runs, 2, 1, 4);
  PriorHyper pr = PriorHyper::centered_at(random_model(2, 1, 4, rng));
  pr.beta_sd = 1e-8;
  ModelParams w = truth;
  update_beta(w, d, pr, 1, 0, 1, false, rng);
  EXPECT_NEAR(w.beta_s[1](0, 1), pr.beta_s_mean[1](0, 1), 1e-6);
  update_beta(w, d, pr, 2, 0, 0, true, rng);
  EXPECT_NEAR(w.beta_a[2](0, 0), pr.beta_a_mean[2](0, 0), 1e-6);
}

TEST(GibbsSweepTest, EmptyDataSamplesPrior) {
  // Two nodes s1 -> s2 with no data: every sweep is a prior draw.
  ModelParams w = ModelParams::zeros(1, 0, 2);
  PriorHyper pr = zero_priors(w);
  pr.beta_s_mean[0](0, 0) = 0.4;
  pr.mu_mean[1](0) = -1.0;
  pr.beta_sd = 0.5;
  pr.mu_sd = 2.0;
  const TrajectoryData d = TrajectoryData::empty(1, 0, 2);
  w = prior_center(w, pr);
  Rng rng(33);
  const int sweeps = 10000;
  double b_sum = 0, b_sq = 0, m_sum = 0, m_sq = 0, p_sum = 0, p_sq = 0;
  for (int i = 0; i < sweeps; ++i) {
    w = gibbs_sweep(w, d, pr, rng);
    const double b = w.beta_s[0](0, 0), m = w.mu_s[1](0);
    const double prec = 1.0 / (w.v[1](0) * w.v[1](0));
    b_sum += b, b_sq += b * b, m_sum += m, m_sq += m * m;
    p_sum += prec, p_sq += prec * prec;
  }
  const auto check = [&](double sum, double sq, double mean, double var) {
    const double est = sum / sweeps;
    const double est_var = sq / sweeps - est * est;
    EXPECT_NEAR(est, mean, 3.0 * std::sqrt(var / sweeps));
    EXPECT_NEAR(est_var, var, 0.1 * var);
  };
  check(b_sum, b_sq, 0.4, 0.25);
  check(m_sum, m_sq, -1.0, 4.0);
  // 1/v^2 ~ Gamma(kappa/2, rate rho/2).
  const double shape = pr.v.kappa / 2.0, rate = pr.v.rho / 2.0;
  check(p_sum, p_sq, shape / rate, shape / (rate * rate));
}

TEST(GibbsSweepTest, MaskedCoefficientsStayZero) {
  Rng rng(34);
  ModelParams truth = random_model(3, 1, 4, rng);
  truth.mask_s[1](2, 0) = false;
  truth.mask_a[0](0, 1) = false;
  truth.apply_masks();
  std::vector<Trajectory> runs;
  for (int i = 0; i < 20; ++i) {
    runs.push_back(sample_trajectory(truth, random_policy(3, 1, 4, rng),
                                     Vec::Random(3), rng));
  }
  const TrajectoryData d = from_trajectories(runs, 3, 1, 4);
  const PriorHyper pr = PriorHyper::centered_at(truth);
  const PosteriorDraws draws =
      sample_posterior(d, truth, pr, GibbsSettings{10, 20, 2}, 5);
  ASSERT_EQ(draws.draws.size(), 10u);
  for (const ModelParams& w : draws.draws) {
    EXPECT_EQ(w.beta_s[1](2, 0), 0.0);
    EXPECT_EQ(w.beta_a[0](0, 1), 0.0);
  }
  EXPECT_EQ(draws.sweeps, 40);
}

TEST(GibbsSweepTest, SeededChainIsReproducible) {
  Rng rng(35);
  const ModelParams truth = random_model(2, 1, 3, rng);
  std::vector<Trajectory> runs;
  for (int i = 0; i < 10; ++i) {
    runs.push_back(sample_trajectory(truth, PolicyParams::zeros(2, 1, 3),
                                     Vec::Zero(2), rng));
  }
  const TrajectoryData d = from_trajectories(runs, 2, 1, 3);
  const PriorHyper pr = PriorHyper::centered_at(truth);
  const GibbsSettings settings{3, 5, 1};
  const auto a = sample_posterior(d, truth, pr, settings, 9);
  const auto b = sample_posterior(d, truth, pr, settings, 9);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a.draws[i].beta_s[0], b.draws[i].beta_s[0]);
    EXPECT_EQ(a.draws[i].mu_s[2], b.draws[i].mu_s[2]);
  }
  EXPECT_THROW(sample_posterior(TrajectoryData::empty(2, 1, 3), truth, pr,
                                settings, 9),
               ConfigError);
}

TEST(ScalingTest, RoundTripAndPrediction) {
  Rng rng(36);
  const ModelParams w = random_model(3, 1, 5, rng);
  Scaling s = Scaling::identity(3, 1, 5);
  for (int t = 0; t < 5; ++t) {
    s.state[t] = (Vec::Random(3).array().abs() + 0.1).matrix();
    s.action[t] = (Vec::Random(1).array().abs() + 0.1).matrix();
  }
  const ModelParams back = s.to_raw(s.to_scaled(w));
  for (int t = 0; t < 4; ++t) {
    EXPECT_TRUE(back.beta_s[t].isApprox(w.beta_s[t], 1e-12));
    EXPECT_TRUE(back.beta_a[t].isApprox(w.beta_a[t], 1e-12));
  }
  // Scaled zero-gain means map back to raw means coordinatewise.
  const ModelParams scaled = s.to_scaled(w);
  const Vec s1 = Vec::Random(3);
  const PolicyParams zero = PolicyParams::zeros(3, 1, 5);
  const auto raw = predict_means(w, zero, s1);
  const auto small =
      predict_means(scaled, zero, s1.cwiseQuotient(s.state[0]));
  for (int t = 0; t < 5; ++t) {
    EXPECT_LT((small[t].cwiseProduct(s.state[t]) - raw[t]).cwiseAbs().maxCoeff(),
              1e-10);
  }
}

TEST(ScalingTest, FromDataFloorsConstantColumns) {
  TrajectoryData d = TrajectoryData::empty(2, 1, 2);
  d.states[0] = Mat(3, 2);
  d.states[0] << 1, 5, 2, 5, 3, 5;
  d.states[1] = Mat(3, 2);
  d.states[1] << 2, 5, 4, 5, 6, 5;
  d.actions[0] = Mat(3, 1);
  d.actions[0] << 0.1, 0.2, 0.3;
  const Scaling s = Scaling::from_data(d);
  EXPECT_NEAR(s.state[0](0), 1.0, 1e-12);
  EXPECT_NEAR(s.state[1](0), 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.state[0](1), 1.0);
  EXPECT_NEAR(s.action[0](0), 0.1, 1e-12);
}

TEST(DrawStorageTest, SaveLoadRoundTrip) {
  Rng rng(37);
  PosteriorDraws draws;
  draws.seed = 77;
  draws.burn_in = 3;
  draws.thinning = 2;
  draws.sweeps = 9;
  for (int i = 0; i < 3; ++i) draws.draws.push_back(random_model(2, 1, 4, rng));
  const std::string dir = testing::scratch_dir("draws");
  save_draws(draws, dir);
  const PosteriorDraws back = load_draws(dir);
  ASSERT_EQ(back.draws.size(), 3u);
  EXPECT_EQ(back.seed, 77u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(back.draws[i].beta_s[2], draws.draws[i].beta_s[2]);
    EXPECT_EQ(back.draws[i].v[1], draws.draws[i].v[1]);
  }
  EXPECT_THROW(load_draws(dir + "/missing"), IoError);
}

}  // namespace
}  // namespace dbnrl
