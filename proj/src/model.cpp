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

#include "dbnrl/model.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dbnrl {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool bounded(double x) {
  return std::isfinite(x) && std::abs(x) <= kValidityBound;
}

template <typename Derived>
bool all_bounded(const Eigen::DenseBase<Derived>& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!bounded(x.reshaped()(i))) return false;
  }
  return true;
}

}  // namespace

ModelParams ModelParams::zeros(int n, int m, int H) {
  require(n >= 1 && m >= 0 && H >= 1, "model dimensions must be n>=1, m>=0, H>=1");
  ModelParams w;
  w.n = n;
  w.m = m;
  w.H = H;
  w.mu_s.assign(H, Vec::Zero(n));
  w.mu_a.assign(H, Vec::Zero(m));
  w.v.assign(H, Vec::Ones(n));
  w.sigma.assign(H, Vec::Ones(m));
  w.beta_s.assign(H - 1, Mat::Zero(n, n));
  w.beta_a.assign(H - 1, Mat::Zero(m, n));
  w.mask_s.assign(H - 1, BoolMat::Constant(n, n, true));
  w.mask_a.assign(H - 1, BoolMat::Constant(m, n, true));
  return w;
}

void ModelParams::check_dimensions() const {
  require(n >= 1 && m >= 0 && H >= 1, "invalid model dimensions");
  const auto steps = static_cast<std::size_t>(H);
  require(mu_s.size() == steps && mu_a.size() == steps && v.size() == steps &&
              sigma.size() == steps,
          "per-step vectors must have H entries");
  require(beta_s.size() == steps - 1 && beta_a.size() == steps - 1 &&
              mask_s.size() == steps - 1 && mask_a.size() == steps - 1,
          "per-transition matrices must have H-1 entries");
  for (std::size_t t = 0; t < steps; ++t) {
    require(mu_s[t].size() == n && v[t].size() == n, "state vector size");
    require(mu_a[t].size() == m && sigma[t].size() == m, "action vector size");
  }
  for (std::size_t t = 0; t + 1 < steps; ++t) {
    require(beta_s[t].rows() == n && beta_s[t].cols() == n, "beta_s shape");
    require(beta_a[t].rows() == m && beta_a[t].cols() == n, "beta_a shape");
    require(mask_s[t].rows() == n && mask_s[t].cols() == n, "mask_s shape");
    require(mask_a[t].rows() == m && mask_a[t].cols() == n, "mask_a shape");
  }
}

void ModelParams::apply_masks() {
  for (std::size_t t = 0; t < beta_s.size(); ++t) {
    beta_s[t] = mask_s[t].select(beta_s[t], 0.0);
    beta_a[t] = mask_a[t].select(beta_a[t], 0.0);
  }
}

std::size_t ModelParams::parameter_count() const {
  std::size_t count = static_cast<std::size_t>(H) * (2 * n + 2 * m);
  for (std::size_t t = 0; t < beta_s.size(); ++t) {
    count += static_cast<std::size_t>(mask_s[t].count() + mask_a[t].count());
  }
  return count;
}

bool validate_model(const ModelParams& w) {
  for (int t = 0; t < w.H; ++t) {
    if (!all_bounded(w.mu_s[t]) || !all_bounded(w.mu_a[t]) ||
        !all_bounded(w.v[t]) || !all_bounded(w.sigma[t])) {
      return false;
    }
    if ((w.v[t].array() <= 0.0).any() || (w.sigma[t].array() <= 0.0).any()) {
      return false;
    }
  }
  for (int t = 0; t + 1 < w.H; ++t) {
    if (!all_bounded(w.beta_s[t]) || !all_bounded(w.beta_a[t])) return false;
  }
  return true;
}

Box Box::unbounded(Eigen::Index size) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Vec::Constant(size, -inf), Vec::Constant(size, inf)};
}

void Box::check(Eigen::Index size) const {
  require(lower.size() == size && upper.size() == size,
          "box size does not match the policy");
  for (Eigen::Index i = 0; i < size; ++i) {
    require(!std::isnan(lower(i)) && !std::isnan(upper(i)) &&
                lower(i) <= upper(i),
            "box bounds must satisfy lower <= upper");
  }
}

bool Box::contains(const Vec& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

PolicyParams PolicyParams::zeros(int n, int m, int H) {
  PolicyParams p;
  p.n = n;
  p.m = m;
  p.H = H;
  p.vartheta.assign(H > 0 ? H - 1 : 0, Mat::Zero(n, m));
  p.box = Box::unbounded(p.size());
  return p;
}

Vec PolicyParams::flatten() const {
  Vec flat(size());
  Eigen::Index offset = 0;
  const Eigen::Index block = static_cast<Eigen::Index>(n) * m;
  for (const Mat& g : vartheta) {
    flat.segment(offset, block) = g.reshaped();
    offset += block;
  }
  return flat;
}

void PolicyParams::assign(const Vec& flat) {
  require(flat.size() == size(), "flattened policy has the wrong length");
  Eigen::Index offset = 0;
  const Eigen::Index block = static_cast<Eigen::Index>(n) * m;
  for (Mat& g : vartheta) {
    g = flat.segment(offset, block).reshaped(n, m);
    offset += block;
  }
}

void PolicyParams::check_dimensions() const {
  require(vartheta.size() == static_cast<std::size_t>(H > 0 ? H - 1 : 0),
          "policy must have H-1 gain matrices");
  for (const Mat& g : vartheta) {
    require(g.rows() == n && g.cols() == m, "policy gain shape");
  }
  box.check(size());
}

Mat PolicyParams::gain(int t) const {
  if (t >= 1 && t <= H - 1) return vartheta[static_cast<std::size_t>(t - 1)];
  return Mat::Zero(n, m);
}

Box state_row_box(int n, int m, int H, const Vec& lower_per_state,
                  const Vec& upper_per_state) {
  require(lower_per_state.size() == n && upper_per_state.size() == n,
          "per-state box bounds must have n entries");
  const Eigen::Index size = static_cast<Eigen::Index>(H - 1) * n * m;
  Box box{Vec(size), Vec(size)};
  Eigen::Index i = 0;
  for (int t = 0; t + 1 < H; ++t) {
    for (int col = 0; col < m; ++col) {
      for (int row = 0; row < n; ++row, ++i) {
        box.lower(i) = lower_per_state(row);
        box.upper(i) = upper_per_state(row);
      }
    }
  }
  box.check(size);
  return box;
}

RewardSpec RewardSpec::zeros(int n, int m, int H) {
  RewardSpec r;
  r.m.assign(H, 0.0);
  r.b.assign(H, Vec::Zero(m));
  r.c.assign(H, Vec::Zero(n));
  return r;
}

void RewardSpec::check(int n, int m, int H) const {
  const auto steps = static_cast<std::size_t>(H);
  require(this->m.size() == steps && b.size() == steps && c.size() == steps,
          "reward coefficients must have H entries");
  for (std::size_t t = 0; t < steps; ++t) {
    require(b[t].size() == m && c[t].size() == n, "reward coefficient size");
  }
  require(m_c < 0.0, "invalid-model penalty m_c must be negative");
}

RewardSpec RewardSpec::scaled(double alpha) const {
  RewardSpec r = *this;
  for (auto& x : r.m) x *= alpha;
  for (auto& x : r.b) x *= alpha;
  for (auto& x : r.c) x *= alpha;
  return r;
}

}  // namespace dbnrl
