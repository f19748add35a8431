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

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "dbnrl/dataset.hpp"
#include "dbnrl/experiment.hpp"
#include "dbnrl/kinetics.hpp"

namespace dbnrl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Final citrate of the deterministic mean-feeding run, integrated with a
// 0.01 h noise step and a 1e-4 h drift grid.
constexpr double kGoldenFinalCitrate = 101.37529;

SimulationSetup deterministic_setup() {
  ExperimentConfig config;
  config.kappa = kInf;
  return config.setup();
}

KineticRun mean_run(const SimulationSetup& setup) {
  return deterministic_run(setup, human_schedule(setup).mean);
}

TEST(KineticParamsTest, DefaultsAndParsing) {
  const KineticParams p;
  EXPECT_DOUBLE_EQ(p.mu_max, 0.3845);
  EXPECT_DOUBLE_EQ(p.C_max, 130.90);
  const KineticParams q = KineticParams::parse("# comment\nmu_max = 0.5\n");
  EXPECT_DOUBLE_EQ(q.mu_max, 0.5);
  EXPECT_DOUBLE_EQ(q.K_S, p.K_S);
  EXPECT_THROW(KineticParams::parse("mu_maximum = 1"), ConfigError);
  EXPECT_THROW(KineticParams::parse("K_S = -1"), ConfigError);
  EXPECT_EQ(KineticParams::parse(p.to_text()).to_text(), p.to_text());
}

TEST(FermentationTest, GoldenDeterministicRun) {
  const SimulationSetup setup = deterministic_setup();
  const KineticRun run = mean_run(setup);
  ASSERT_EQ(run.states.size(), 36u);
  EXPECT_DOUBLE_EQ(run.states.back().t, 140.0);
  const double c = run.states.back().C;
  EXPECT_NEAR(c, kGoldenFinalCitrate, 5e-3 * kGoldenFinalCitrate);
  EXPECT_GE(c, 90.0);
  EXPECT_LE(c, 120.0);
}

TEST(FermentationTest, FineReferenceMatchesGolden) {
  SimulationSetup setup = deterministic_setup();
  setup.ops.substep_h = 0.01;
  setup.ops.drift_step_h = 1e-4;
  EXPECT_NEAR(mean_run(setup).states.back().C, kGoldenFinalCitrate, 1e-4);
}

TEST(FermentationTest, DeterministicStepIsBitwiseRepeatable) {
  const SimulationSetup setup = deterministic_setup();
  Rng a(1), b(2);
  const KineticState x = step_fermentation(setup.initial, 0.004, 4.0,
                                           setup.params, NoiseSpec::none(), a,
                                           setup.ops);
  const KineticState y = step_fermentation(setup.initial, 0.004, 4.0,
                                           setup.params, NoiseSpec::none(), b,
                                           setup.ops);
  EXPECT_EQ(x.values(), y.values());
}

TEST(FermentationTest, HalvingSubstepChangesEndpointLittle) {
  SimulationSetup coarse = deterministic_setup();
  SimulationSetup fine = coarse;
  fine.ops.substep_h /= 2.0;
  fine.ops.drift_step_h /= 2.0;
  const auto a = mean_run(coarse).states.back().values();
  const auto b = mean_run(fine).states.back().values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(b[i]), 1e-3);
    EXPECT_LT(std::abs(a[i] - b[i]) / scale, 5e-3) << kKineticVariableNames[i];
  }
}

TEST(FermentationTest, VolumeAccountingWithoutGrowth) {
  SimulationSetup setup = deterministic_setup();
  KineticState s = setup.initial;
  s.X_f = 0.0;
  const double feed = 0.003;
  Rng rng(0);
  const KineticState end = step_fermentation(s, feed, 4.0, setup.params,
                                             NoiseSpec::none(), rng, setup.ops);
  EXPECT_NEAR(end.V, s.V + (feed - setup.params.V_evap) * 4.0, 1e-12);
}

TEST(FermentationTest, VolumeAccountingWithGrowth) {
  const KineticRun run = mean_run(deterministic_setup());
  // Independent accumulation of (F_B + F - V_evap) dt along a finer path.
  SimulationSetup fine = deterministic_setup();
  fine.ops.drift_step_h = 1e-4;
  const auto feed = human_schedule(fine).mean;
  KineticState s = fine.initial;
  double volume_in = 0.0;
  for (int step = 0; step + 1 < fine.horizon_steps; ++step) {
    for (int k = 0; k < 40000; ++k) {
      const KineticRates r =
          kinetic_rates(s, feed[step], fine.params, fine.ops);
      auto x = s.values();
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::max(0.0, x[i] + r.drift[i] * 1e-4);
      }
      x[1] = std::min(x[1], fine.params.C_max);
      s.set_values(x);
      volume_in += (r.F_B + feed[step] - fine.params.V_evap) * 1e-4;
    }
  }
  const double dv = run.states.back().V - run.states.front().V;
  EXPECT_NEAR(dv, volume_in, 1e-3 * std::abs(volume_in) + 1e-4);
}

TEST(FermentationTest, NoisyRunsStayPhysical) {
  ExperimentConfig config;
  config.kappa = 2.0;
  const Reference ref = build_reference(config);
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const KineticRun run = simulate_run(
        ref.setup, ref.noise, ref.setup.initial,
        [&](int step, const KineticState&, Rng&) { return ref.human.mean[step]; },
        rng);
    for (const KineticState& s : run.states) {
      for (double x : s.values()) {
        EXPECT_TRUE(std::isfinite(x));
        EXPECT_GE(x, 0.0);
      }
      EXPECT_LE(s.C, ref.setup.params.C_max);
      EXPECT_GE(s.V, ref.setup.ops.min_volume_L);
    }
  }
}

TEST(FermentationTest, NegativeFeedRejected) {
  const SimulationSetup setup = deterministic_setup();
  Rng rng(0);
  EXPECT_THROW(step_fermentation(setup.initial, -1.0, 4.0, setup.params,
                                 NoiseSpec::none(), rng, setup.ops),
               ConfigError);
}

TEST(FermentationTest, EpsilonGreedyBranchFrequency) {
  ExperimentConfig config;
  const Reference ref = build_reference(config);
  GenerationOptions options;
  options.reference = ref.human;
  const Dataset data = generate_dataset(60, options, ref.setup, ref.noise, 11);
  const double total =
      static_cast<double>(data.exploit_draws + data.explore_draws);
  ASSERT_GT(total, 1000.0);
  const double freq = data.exploit_draws / total;
  EXPECT_NEAR(freq, 0.7, 3.0 * std::sqrt(0.7 * 0.3 / total));
}

TEST(FermentationTest, AnchorIsStable) {
  ExperimentConfig config;
  const Reference ref = build_reference(config);
  for (int t = 0; t + 1 < ref.anchor.H; ++t) {
    const auto& beta = ref.anchor.beta_s[static_cast<std::size_t>(t)];
    ASSERT_TRUE(beta.allFinite());
    Eigen::EigenSolver<Mat> solver(beta);
    EXPECT_LT(solver.eigenvalues().cwiseAbs().maxCoeff(), 10.0) << "step " << t;
  }
}

TEST(PurificationTest, PurityStaysInUnitInterval) {
  ExperimentConfig config;
  const Reference ref = build_reference(config);
  const PurificationState start = centrifuge(ref.mean_run.states.back());
  const double p0 = purity(start);
  EXPECT_GT(p0, 0.0);
  EXPECT_LT(p0, 1.0);
  Rng rng(3);
  NoiseSpec noise;
  noise.kappa = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double z1 = std::log(20.0) + uniform01(rng) * std::log(5.0);
    const double z2 = std::log(20.0) + uniform01(rng) * std::log(5.0);
    const PurificationState s1 =
        step_purification(start, z1, PrecipitationStage::kP1, noise, rng);
    const PurificationState s2 =
        step_purification(s1, z2, PrecipitationStage::kP2, noise, rng);
    for (const auto& s : {s1, s2}) {
      EXPECT_GT(purity(s), 0.0);
      EXPECT_LT(purity(s), 1.0);
    }
  }
}

TEST(PurificationTest, SaturationCapEnforced) {
  Rng rng(0);
  const PurificationState s{0.0, 0.0};
  EXPECT_NO_THROW(step_purification(s, std::log(100.0),
                                    PrecipitationStage::kP1, NoiseSpec(), rng));
  EXPECT_THROW(step_purification(s, std::log(120.0), PrecipitationStage::kP1,
                                 NoiseSpec(), rng),
               ConfigError);
}

TEST(PurificationTest, SolubilityCurveIsMonotone) {
  double last = 1.0;
  for (double z = 10.0; z <= 100.0; z += 5.0) {
    const double f = kProductSolubility.fraction(z);
    EXPECT_GT(f, 0.0);
    EXPECT_LE(f, last);
    last = f;
  }
}

}  // namespace
}  // namespace dbnrl
