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

#include "dbnrl/gradient.hpp"

#include "dbnrl/dbn.hpp"

namespace dbnrl {

namespace {

void check_inputs(const ModelParams& w, const PolicyParams& policy,
                  const RewardSpec& reward, const Vec& s1) {
  w.check_dimensions();
  policy.check_dimensions();
  if (policy.n != w.n || policy.m != w.m || policy.H != w.H) {
    throw ConfigError("policy dimensions do not match the model");
  }
  reward.check(w.n, w.m, w.H);
  if (s1.size() != w.n) throw ConfigError("initial state has the wrong size");
}

// u_t = c_t + vartheta_t b_t, the sensitivity of r_t to the state deviation.
Vec reward_sensitivity(const PolicyParams& policy, const RewardSpec& reward,
                       int t) {
  const auto i = static_cast<std::size_t>(t - 1);
  Vec u = reward.c[i];
  if (t < policy.H && policy.m > 0) u += policy.vartheta[i] * reward.b[i];
  return u;
}

void add_block(Vec& flat, const PolicyParams& policy, int h, const Mat& g) {
  const Eigen::Index block = static_cast<Eigen::Index>(policy.n) * policy.m;
  flat.segment((h - 1) * block, block) += g.reshaped();
}

}  // namespace

GradientTape build_tape(const ModelParams& w, const PolicyParams& policy,
                        const Vec& s1) {
  GradientTape tape;
  tape.model = &w;
  tape.policy = &policy;
  tape.closed_loop.reserve(w.H > 0 ? w.H - 1 : 0);
  for (int t = 1; t < w.H; ++t) {
    tape.closed_loop.push_back(closed_loop_matrix(w, policy, t));
  }
  Vec dev = s1 - w.mu_s[0];
  for (int t = 1; t <= w.H; ++t) {
    if (t > 1) dev = tape.M(t - 1) * dev;
    tape.deviation.push_back(dev);
    tape.mean.push_back(w.mu_s[t - 1] + dev);
  }
  return tape;
}

Mat partial_reward_gradient(const GradientTape& tape, const RewardSpec& reward,
                            int t, int h) {
  const ModelParams& w = *tape.model;
  const PolicyParams& policy = *tape.policy;
  if (h < 1 || h > t || t > w.H || h >= w.H) {
    throw ConfigError("partial gradient index out of range");
  }
  const auto ti = static_cast<std::size_t>(t - 1);
  if (h == t) return tape.d(h) * reward.b[ti].transpose();
  Mat path = Mat::Identity(w.n, w.n);
  for (int j = h + 1; j <= t - 1; ++j) path = tape.M(j) * path;
  const Mat delta = path * w.beta_a[h - 1].transpose();
  const Vec u = reward_sensitivity(policy, reward, t);
  return tape.d(h) * (u.transpose() * delta);
}

Vec nbp_gradient(const ModelParams& w, const PolicyParams& policy,
                 const RewardSpec& reward, const Vec& s1) {
  check_inputs(w, policy, reward, s1);
  Vec grad = Vec::Zero(policy.size());
  if (w.H < 2 || w.m == 0) return grad;
  const GradientTape tape = build_tape(w, policy, s1);
  // Backward pass: q_h = u_{h+1}^T + q_{h+1} M_{h+1}, with q_{H-1} = u_H^T.
  Eigen::RowVectorXd q = Eigen::RowVectorXd::Zero(w.n);
  for (int h = w.H - 1; h >= 1; --h) {
    const auto hi = static_cast<std::size_t>(h - 1);
    if (h < w.H - 1) q = q * tape.M(h + 1);
    q += reward_sensitivity(policy, reward, h + 1).transpose();
    const Eigen::RowVectorXd back = q * w.beta_a[hi].transpose();
    add_block(grad, policy, h,
              tape.d(h) * (reward.b[hi].transpose() + back));
  }
  return grad;
}

Vec brute_force_gradient(const ModelParams& w, const PolicyParams& policy,
                         const RewardSpec& reward, const Vec& s1) {
  check_inputs(w, policy, reward, s1);
  Vec grad = Vec::Zero(policy.size());
  if (w.H < 2 || w.m == 0) return grad;
  for (int t = 1; t <= w.H; ++t) {
    const auto ti = static_cast<std::size_t>(t - 1);
    const Vec u = reward_sensitivity(policy, reward, t);
    for (int h = 1; h <= std::min(t, w.H - 1); ++h) {
      const Vec d = pathway_product(w, policy, 1, h - 1) * (s1 - w.mu_s[0]);
      if (h == t) {
        add_block(grad, policy, h, d * reward.b[ti].transpose());
        continue;
      }
      const Mat delta =
          pathway_product(w, policy, h + 1, t - 1) * w.beta_a[h - 1].transpose();
      add_block(grad, policy, h, d * (u.transpose() * delta));
    }
  }
  return grad;
}

Vec saa_gradient(const PolicyParams& policy,
                 const std::vector<ModelParams>& draws,
                 const RewardSpec& reward, const Vec& s1) {
  if (draws.empty()) throw ConfigError("SAA gradient needs at least one draw");
  Vec total = Vec::Zero(policy.size());
  for (const ModelParams& w : draws) {
    if (!validate_model(w)) continue;
    total += nbp_gradient(w, policy, reward, s1);
  }
  return total / static_cast<double>(draws.size());
}

}  // namespace dbnrl
