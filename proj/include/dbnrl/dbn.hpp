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

#ifndef DBNRL_DBN_HPP_
#define DBNRL_DBN_HPP_

#include <functional>
#include <vector>

#include "dbnrl/model.hpp"

namespace dbnrl {

// ds/dt = f(t, s, a); t is the 1-based step whose anchor is being expanded.
using VectorField = std::function<Vec(int t, const Vec& s, const Vec& a)>;

// First-order Taylor expansion around anchor means. Returns a model with
// mu_{t+1} = anchor_t + dt f(anchor_t), beta_s[t] = (I + dt J_s)^T and
// beta_a[t] = (dt J_a)^T, Jacobians by central differences. Residual and
// action std-devs are left at 1.
ModelParams linearize_ode(const VectorField& f,
                          const std::vector<Vec>& anchor_states,
                          const std::vector<Vec>& anchor_actions, double dt);

// s_{t+1} = g(t, s_t, a_t), a discrete transition such as one observation
// interval of a simulator.
using TransitionMap = std::function<Vec(int t, const Vec& s, const Vec& a)>;

// Same output layout as linearize_ode but expands the transition map itself:
// mu_{t+1} = g(anchor_t), beta_s[t] = J_s^T, beta_a[t] = J_a^T. Differences
// are one-sided where a nonnegative anchor coordinate would be stepped below
// zero.
ModelParams linearize_transition(const TransitionMap& g,
                                 const std::vector<Vec>& anchor_states,
                                 const std::vector<Vec>& anchor_actions);

// M_t = beta_s[t]^T + beta_a[t]^T vartheta_t^T, the closed-loop map taking
// s_t - mu_t to the mean of s_{t+1} - mu_{t+1}.
Mat closed_loop_matrix(const ModelParams& w, const PolicyParams& policy, int t);

// R_{h,t} = M_t M_{t-1} ... M_h, identity when h = t+1.
// Requires 1 <= h <= t+1 <= H.
Mat pathway_product(const ModelParams& w, const PolicyParams& policy, int h,
                    int t);

Trajectory sample_trajectory(const ModelParams& w, const PolicyParams& policy,
                             const Vec& s1, Rng& rng);

struct Prediction {
  Vec mean;
  Mat covariance;
};

enum class InitialState {
  kObserved,  // s_1 is known exactly
  kRandom,    // s_1 ~ N(mu_1, V_1); the mean argument is still s_1
};

// Mean and covariance of s_{t+1} for 0 <= t <= H-1.
Prediction predict_mean_var(const ModelParams& w, const PolicyParams& policy,
                            const Vec& s1, int t,
                            InitialState initial = InitialState::kObserved);

// Expected states s-bar_1..s-bar_H under the policy.
std::vector<Vec> predict_means(const ModelParams& w, const PolicyParams& policy,
                               const Vec& s1);

// Closed-form expected cumulative reward; H * m_c when w is not valid.
double policy_value(const ModelParams& w, const PolicyParams& policy,
                    const RewardSpec& reward, const Vec& s1);

}  // namespace dbnrl

#endif  // DBNRL_DBN_HPP_
