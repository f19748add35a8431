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

#ifndef DBNRL_GRADIENT_HPP_
#define DBNRL_GRADIENT_HPP_

#include <vector>

#include "dbnrl/model.hpp"

namespace dbnrl {

// Forward-pass quantities for one (w, theta, s1). Steps are 1-based in the
// accessor arguments.
struct GradientTape {
  const ModelParams* model = nullptr;
  const PolicyParams* policy = nullptr;
  std::vector<Mat> closed_loop;  // M_t for t = 1..H-1
  std::vector<Vec> mean;         // predicted mean state, t = 1..H
  std::vector<Vec> deviation;    // mean - mu_s

  const Mat& M(int t) const { return closed_loop.at(t - 1); }
  const Vec& d(int t) const { return deviation.at(t - 1); }
};

// The tape keeps pointers to w and policy; both must outlive it.
GradientTape build_tape(const ModelParams& w, const PolicyParams& policy,
                        const Vec& s1);

// Derivative of the expected reward at step t with respect to vartheta_h,
// an n x m matrix. Requires 1 <= h <= t <= H and h < H.
Mat partial_reward_gradient(const GradientTape& tape, const RewardSpec& reward,
                            int t, int h);

// Gradient of policy_value in PolicyParams::flatten order.
Vec nbp_gradient(const ModelParams& w, const PolicyParams& policy,
                 const RewardSpec& reward, const Vec& s1);

// Same contract, every pathway product rebuilt from scratch.
Vec brute_force_gradient(const ModelParams& w, const PolicyParams& policy,
                         const RewardSpec& reward, const Vec& s1);

// Average of per-draw gradients; invalid draws contribute zero.
Vec saa_gradient(const PolicyParams& policy,
                 const std::vector<ModelParams>& draws,
                 const RewardSpec& reward, const Vec& s1);

}  // namespace dbnrl

#endif  // DBNRL_GRADIENT_HPP_
