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
#include "test_util.hpp"

namespace dbnrl {
namespace {

using testing::finite_difference_gradient;
using testing::max_rel_diff;

struct Instance {
  ModelParams w;
  PolicyParams p;
  RewardSpec r;
  Vec s1;
};

Instance make_instance(int n, int m, int H, Rng& rng) {
  Instance in{random_model(n, m, H, rng), random_policy(n, m, H, rng),
              random_reward(n, m, H, rng), Vec(n)};
  for (int k = 0; k < n; ++k) in.s1(k) = standard_normal(rng);
  return in;
}

TEST(GradientTest, NbpMatchesBruteForce) {
  Rng rng(21);
  for (int n = 1; n <= 6; ++n) {
    for (int m = 1; m <= 3; ++m) {
      for (int H : {2, 5, 17, 40}) {
        const Instance in = make_instance(n, m, H, rng);
        const Vec nbp = nbp_gradient(in.w, in.p, in.r, in.s1);
        const Vec brute = brute_force_gradient(in.w, in.p, in.r, in.s1);
        ASSERT_EQ(nbp.size(), in.p.size());
        EXPECT_LT(max_rel_diff(nbp, brute), 1e-10)
            << "n=" << n << " m=" << m << " H=" << H;
      }
    }
  }
}

TEST(GradientTest, CaseStudyShapeMatchesBruteForce) {
  Rng rng(22);
  const Instance in = make_instance(5, 1, 36, rng);
  EXPECT_LT(max_rel_diff(nbp_gradient(in.w, in.p, in.r, in.s1),
                         brute_force_gradient(in.w, in.p, in.r, in.s1)),
            1e-10);
}

TEST(GradientTest, MatchesFiniteDifferences) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = make_instance(1 + trial % 4, 1 + trial % 3,
                                      2 + trial % 7, rng);
    const Vec nbp = nbp_gradient(in.w, in.p, in.r, in.s1);
    const Vec fd = finite_difference_gradient(in.w, in.p, in.r, in.s1);
    for (Eigen::Index i = 0; i < nbp.size(); ++i) {
      if (std::abs(nbp(i)) <= 1e-8) continue;
      EXPECT_LT(std::abs(nbp(i) - fd(i)) / std::max(1.0, std::abs(nbp(i))),
                1e-5);
    }
  }
}

TEST(GradientTest, PartialTermsSumToGradient) {
  Rng rng(24);
  const Instance in = make_instance(3, 2, 6, rng);
  const GradientTape tape = build_tape(in.w, in.p, in.s1);
  PolicyParams total = PolicyParams::zeros(3, 2, 6);
  for (int t = 1; t <= 6; ++t) {
    for (int h = 1; h < t && h <= 5; ++h) {
      total.vartheta[h - 1] += partial_reward_gradient(tape, in.r, t, h);
    }
    if (t <= 5) total.vartheta[t - 1] += partial_reward_gradient(tape, in.r, t, t);
  }
  EXPECT_LT(max_rel_diff(total.flatten(),
                         nbp_gradient(in.w, in.p, in.r, in.s1)),
            1e-10);
}

TEST(GradientTest, SaaAveragesDraws) {
  Rng rng(25);
  std::vector<ModelParams> draws;
  for (int b = 0; b < 4; ++b) draws.push_back(random_model(2, 1, 5, rng));
  const PolicyParams p = random_policy(2, 1, 5, rng);
  const RewardSpec r = random_reward(2, 1, 5, rng);
  const Vec s1 = Vec::Zero(2);
  Vec mean = Vec::Zero(p.size());
  for (const auto& w : draws) mean += nbp_gradient(w, p, r, s1);
  mean /= 4.0;
  EXPECT_LT(max_rel_diff(saa_gradient(p, draws, r, s1), mean), 1e-12);
}

TEST(GradientTest, InvalidDrawContributesZero) {
  Rng rng(26);
  ModelParams bad = random_model(2, 1, 5, rng);
  bad.beta_s[0](0, 0) = 1e11;
  const ModelParams good = random_model(2, 1, 5, rng);
  const PolicyParams p = random_policy(2, 1, 5, rng);
  const RewardSpec r = random_reward(2, 1, 5, rng);
  const Vec s1 = Vec::Zero(2);
  EXPECT_FALSE(validate_model(bad));
  EXPECT_TRUE(saa_gradient(p, {bad, bad}, r, s1).isZero(0.0));
  EXPECT_LT(max_rel_diff(saa_gradient(p, {good, bad}, r, s1),
                         0.5 * nbp_gradient(good, p, r, s1)),
            1e-12);
}

}  // namespace
}  // namespace dbnrl
