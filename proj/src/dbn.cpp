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

#include "dbnrl/dbn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dbnrl {

namespace {

void check_compatible(const ModelParams& w, const PolicyParams& policy) {
  if (policy.n != w.n || policy.m != w.m || policy.H != w.H) {
    throw ConfigError("policy dimensions do not match the model");
  }
}

Vec central_difference(const VectorField& f, int t, const Vec& s, const Vec& a,
                       bool wrt_state, Eigen::Index j, double* step_out) {
  Vec sp = s, sm = s, ap = a, am = a;
  double& xp = wrt_state ? sp(j) : ap(j);
  double& xm = wrt_state ? sm(j) : am(j);
  const double x = wrt_state ? s(j) : a(j);
  const double h = 1e-6 * std::max(1.0, std::abs(x));
  xp = x + h;
  xm = x - h;
  *step_out = (x + h) - (x - h);
  return (f(t, sp, ap) - f(t, sm, am)) / *step_out;
}

Vec safe_difference(const TransitionMap& g, int t, const Vec& s, const Vec& a,
                    bool wrt_state, Eigen::Index j) {
  Vec sp = s, sm = s, ap = a, am = a;
  double& xp = wrt_state ? sp(j) : ap(j);
  double& xm = wrt_state ? sm(j) : am(j);
  const double x = wrt_state ? s(j) : a(j);
  const double h = 1e-6 * std::max(1.0, std::abs(x));
  xp = x + h;
  xm = (x >= 0.0 && x - h < 0.0) ? x : x - h;
  return (g(t, sp, ap) - g(t, sm, am)) / (xp - xm);
}

}  // namespace

ModelParams linearize_transition(const TransitionMap& g,
                                 const std::vector<Vec>& anchor_states,
                                 const std::vector<Vec>& anchor_actions) {
  if (anchor_states.empty()) throw ConfigError("no anchor states supplied");
  if (anchor_actions.size() + 1 < anchor_states.size()) {
    throw ConfigError("anchor actions must cover every transition");
  }
  const int H = static_cast<int>(anchor_states.size());
  const int n = static_cast<int>(anchor_states.front().size());
  const int m = static_cast<int>(anchor_actions.empty()
                                     ? 0
                                     : anchor_actions.front().size());
  ModelParams w = ModelParams::zeros(n, m, H);
  w.mu_s[0] = anchor_states[0];
  for (int t = 0; t < H && static_cast<std::size_t>(t) < anchor_actions.size();
       ++t) {
    w.mu_a[t] = anchor_actions[t];
  }
  for (int t = 0; t + 1 < H; ++t) {
    const Vec& s = anchor_states[t];
    const Vec& a = anchor_actions[t];
    w.mu_s[t + 1] = g(t + 1, s, a);
    Mat js(n, n);
    Mat ja(n, m);
    for (int j = 0; j < n; ++j) js.col(j) = safe_difference(g, t + 1, s, a, true, j);
    for (int j = 0; j < m; ++j) ja.col(j) = safe_difference(g, t + 1, s, a, false, j);
    if (!js.allFinite() || !ja.allFinite() || !w.mu_s[t + 1].allFinite()) {
      throw NumericError("linearization produced a non-finite Jacobian at step " +
                         std::to_string(t + 1));
    }
    w.beta_s[t] = js.transpose();
    w.beta_a[t] = ja.transpose();
  }
  return w;
}

ModelParams linearize_ode(const VectorField& f,
                          const std::vector<Vec>& anchor_states,
                          const std::vector<Vec>& anchor_actions, double dt) {
  if (anchor_states.empty()) throw ConfigError("no anchor states supplied");
  if (anchor_actions.size() + 1 < anchor_states.size()) {
    throw ConfigError("anchor actions must cover every transition");
  }
  if (!(dt > 0.0)) throw ConfigError("linearization dt must be positive");
  const int H = static_cast<int>(anchor_states.size());
  const int n = static_cast<int>(anchor_states.front().size());
  const int m = static_cast<int>(anchor_actions.empty()
                                     ? 0
                                     : anchor_actions.front().size());
  ModelParams w = ModelParams::zeros(n, m, H);
  w.mu_s[0] = anchor_states[0];
  for (int t = 0; t < H; ++t) {
    if (static_cast<std::size_t>(t) < anchor_actions.size()) {
      w.mu_a[t] = anchor_actions[t];
    }
  }
  for (int t = 0; t + 1 < H; ++t) {
    const Vec& s = anchor_states[t];
    const Vec& a = anchor_actions[t];
    const Vec drift = f(t + 1, s, a);
    w.mu_s[t + 1] = s + dt * drift;
    Mat js(n, n);
    Mat ja(n, m);
    double step = 0.0;
    for (int j = 0; j < n; ++j) js.col(j) = central_difference(f, t + 1, s, a, true, j, &step);
    for (int j = 0; j < m; ++j) ja.col(j) = central_difference(f, t + 1, s, a, false, j, &step);
    if (!js.allFinite() || !ja.allFinite() || !drift.allFinite()) {
      throw NumericError("linearization produced a non-finite Jacobian at step " +
                         std::to_string(t + 1));
    }
    w.beta_s[t] = (Mat::Identity(n, n) + dt * js).transpose();
    w.beta_a[t] = (dt * ja).transpose();
  }
  return w;
}

Mat closed_loop_matrix(const ModelParams& w, const PolicyParams& policy,
                       int t) {
  if (t < 1 || t > w.H - 1) {
    throw ConfigError("closed-loop step out of range: " + std::to_string(t));
  }
  const auto i = static_cast<std::size_t>(t - 1);
  return w.beta_s[i].transpose() +
         w.beta_a[i].transpose() * policy.vartheta[i].transpose();
}

Mat pathway_product(const ModelParams& w, const PolicyParams& policy, int h,
                    int t) {
  check_compatible(w, policy);
  if (h < 1 || h > t + 1 || t + 1 > w.H) {
    throw ConfigError("pathway indices out of range: h=" + std::to_string(h) +
                      ", t=" + std::to_string(t));
  }
  Mat product = Mat::Identity(w.n, w.n);
  for (int j = h; j <= t; ++j) {
    product = closed_loop_matrix(w, policy, j) * product;
  }
  return product;
}

Trajectory sample_trajectory(const ModelParams& w, const PolicyParams& policy,
                             const Vec& s1, Rng& rng) {
  check_compatible(w, policy);
  if (s1.size() != w.n || !s1.allFinite()) {
    throw ConfigError("initial state must be a finite n-vector");
  }
  Trajectory traj;
  traj.states.reserve(w.H);
  traj.actions.reserve(w.H - 1);
  traj.states.push_back(s1);
  for (int t = 0; t + 1 < w.H; ++t) {
    const Vec dev = traj.states[t] - w.mu_s[t];
    const Vec action = w.mu_a[t] + policy.vartheta[t].transpose() * dev;
    Vec z(w.n);
    for (int k = 0; k < w.n; ++k) z(k) = standard_normal(rng);
    Vec next = w.mu_s[t + 1] + w.beta_s[t].transpose() * dev +
               w.beta_a[t].transpose() * (action - w.mu_a[t]) +
               w.v[t + 1].cwiseProduct(z);
    traj.actions.push_back(action);
    traj.states.push_back(std::move(next));
  }
  return traj;
}

std::vector<Vec> predict_means(const ModelParams& w, const PolicyParams& policy,
                               const Vec& s1) {
  check_compatible(w, policy);
  std::vector<Vec> means;
  means.reserve(w.H);
  Vec dev = s1 - w.mu_s[0];
  means.push_back(s1);
  for (int t = 1; t < w.H; ++t) {
    dev = closed_loop_matrix(w, policy, t) * dev;
    means.push_back(w.mu_s[t] + dev);
  }
  return means;
}

Prediction predict_mean_var(const ModelParams& w, const PolicyParams& policy,
                            const Vec& s1, int t, InitialState initial) {
  check_compatible(w, policy);
  if (t < 0 || t + 1 > w.H) {
    throw ConfigError("prediction step out of range: " + std::to_string(t));
  }
  Prediction out;
  out.mean = w.mu_s[t] + pathway_product(w, policy, 1, t) * (s1 - w.mu_s[0]);
  // Accumulate Var[s_{t+1}] = sum_h R_{h,t} V_h R_{h,t}^T + V_{t+1}, walking
  // h downward so each R_{h,t} = R_{h+1,t} M_h reuses the previous product.
  Mat cov = w.v[t].array().square().matrix().asDiagonal();
  const int first = initial == InitialState::kObserved ? 2 : 1;
  if (t == 0 && initial == InitialState::kObserved) cov.setZero();
  Mat path = Mat::Identity(w.n, w.n);
  for (int h = t; h >= first; --h) {
    path = path * closed_loop_matrix(w, policy, h);
    const Vec var_h = w.v[h - 1].array().square();
    cov.noalias() += path * var_h.asDiagonal() * path.transpose();
  }
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

double policy_value(const ModelParams& w, const PolicyParams& policy,
                    const RewardSpec& reward, const Vec& s1) {
  check_compatible(w, policy);
  reward.check(w.n, w.m, w.H);
  if (!validate_model(w)) return w.H * reward.m_c;
  double total = 0.0;
  Vec dev = s1 - w.mu_s[0];
  for (int t = 0; t < w.H; ++t) {
    if (t > 0) dev = closed_loop_matrix(w, policy, t) * dev;
    const auto i = static_cast<std::size_t>(t);
    total += reward.m[i] + reward.b[i].dot(w.mu_a[i]) +
             reward.c[i].dot(w.mu_s[i]) + reward.c[i].dot(dev);
    if (t + 1 < w.H) {
      total += reward.b[i].dot(policy.vartheta[i].transpose() * dev);
    }
  }
  return total;
}

}  // namespace dbnrl
