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

#ifndef DBNRL_MODEL_HPP_
#define DBNRL_MODEL_HPP_

#include <vector>

#include "dbnrl/common.hpp"

namespace dbnrl {

// Every parameter of a model in the validity region is bounded by this.
inline constexpr double kValidityBound = 1e10;

// Linear-Gaussian DBN parameters. Time indices in the public API are 1-based
// (t = 1..H); storage is 0-based.
//
// beta_s[t](j, k) is the effect of s_t^j on s_{t+1}^k and beta_a[t](j, k) the
// effect of a_t^j on s_{t+1}^k, so a transition applies the transposes:
//   s_{t+1} = mu_{t+1} + beta_s[t]^T (s_t - mu_t) + beta_a[t]^T (a_t - lambda_t)
//             + diag(v_{t+1}) z.
struct ModelParams {
  int n = 0;
  int m = 0;
  int H = 0;
  std::vector<Vec> mu_s;    // H entries of size n
  std::vector<Vec> mu_a;    // H entries of size m
  std::vector<Mat> beta_s;  // H-1 entries, n x n
  std::vector<Mat> beta_a;  // H-1 entries, m x n
  std::vector<Vec> v;       // H entries of size n, residual std-devs
  std::vector<Vec> sigma;   // H entries of size m, action std-devs
  std::vector<BoolMat> mask_s;  // parent masks, same shapes as beta_s
  std::vector<BoolMat> mask_a;

  // Zero means and coefficients, unit std-devs, dense masks.
  static ModelParams zeros(int n, int m, int H);

  // Throws ConfigError on any size inconsistency.
  void check_dimensions() const;
  // Forces masked-out coefficients to exactly zero.
  void apply_masks();
  std::size_t parameter_count() const;
};

// True iff every parameter magnitude is <= kValidityBound (and finite) and
// every v, sigma entry is strictly positive.
bool validate_model(const ModelParams& w);

// Axis-aligned feasible set for the flattened policy vector.
struct Box {
  Vec lower;
  Vec upper;

  static Box unbounded(Eigen::Index size);
  void check(Eigen::Index size) const;
  bool contains(const Vec& x) const;
};

// Linear policy a_t = lambda_t + vartheta_t^T (s_t - mu_t) for t = 1..H-1.
// The flattened vector stacks vec(vartheta_1), ..., vec(vartheta_{H-1}),
// each column-major.
struct PolicyParams {
  int n = 0;
  int m = 0;
  int H = 0;
  std::vector<Mat> vartheta;  // H-1 entries, n x m
  Box box;

  static PolicyParams zeros(int n, int m, int H);
  Eigen::Index size() const {
    return static_cast<Eigen::Index>(H > 0 ? H - 1 : 0) * n * m;
  }
  Vec flatten() const;
  void assign(const Vec& flat);
  void check_dimensions() const;
  // Gain matrix at 1-based step t; zero for t = H.
  Mat gain(int t) const;
};

// Box whose bounds depend only on the state coordinate a coefficient reads.
Box state_row_box(int n, int m, int H, const Vec& lower_per_state,
                  const Vec& upper_per_state);

// r_t(s, a) = m_t + b_t^T a + c_t^T s inside the validity region; m_c outside.
struct RewardSpec {
  std::vector<double> m;  // H entries
  std::vector<Vec> b;     // H entries of size m (b_H defaults to zero)
  std::vector<Vec> c;     // H entries of size n
  double m_c = -1000.0;

  static RewardSpec zeros(int n, int m, int H);
  void check(int n, int m, int H) const;
  RewardSpec scaled(double alpha) const;
};

struct Trajectory {
  int replication_id = 0;
  std::vector<Vec> states;   // H entries
  std::vector<Vec> actions;  // H-1 entries
};

}  // namespace dbnrl

#endif  // DBNRL_MODEL_HPP_
