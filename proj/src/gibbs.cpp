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

#include "dbnrl/gibbs.hpp"

#include <cmath>
#include <filesystem>

#include "dbnrl/model_io.hpp"
#include "json.hpp"

namespace dbnrl {

TrajectoryData TrajectoryData::empty(int n, int m, int H) {
  TrajectoryData d;
  d.n = n;
  d.m = m;
  d.H = H;
  d.states.assign(H, Mat(0, n));
  d.actions.assign(H > 0 ? H - 1 : 0, Mat(0, m));
  return d;
}

void TrajectoryData::check(const ModelParams& w) const {
  if (n != w.n || m != w.m || H != w.H ||
      static_cast<int>(states.size()) != H ||
      static_cast<int>(actions.size()) != std::max(H - 1, 0)) {
    throw ConfigError("trajectory data does not match model dimensions");
  }
  const Eigen::Index r = replications();
  for (const Mat& s : states) {
    if (s.rows() != r || s.cols() != n) {
      throw ConfigError("ragged state block in trajectory data");
    }
  }
  for (const Mat& a : actions) {
    if (a.rows() != r || a.cols() != m) {
      throw ConfigError("ragged action block in trajectory data");
    }
  }
}

TrajectoryData from_trajectories(const std::vector<Trajectory>& runs, int n,
                                 int m, int H) {
  TrajectoryData d = TrajectoryData::empty(n, m, H);
  const auto r = static_cast<Eigen::Index>(runs.size());
  for (int t = 0; t < H; ++t) d.states[t].resize(r, n);
  for (int t = 0; t + 1 < H; ++t) d.actions[t].resize(r, m);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Trajectory& tr = runs[i];
    if (static_cast<int>(tr.states.size()) != H ||
        static_cast<int>(tr.actions.size()) != std::max(H - 1, 0)) {
      throw ConfigError("trajectory length does not match horizon");
    }
    for (int t = 0; t < H; ++t) d.states[t].row(i) = tr.states[t].transpose();
    for (int t = 0; t + 1 < H; ++t) {
      d.actions[t].row(i) = tr.actions[t].transpose();
    }
  }
  return d;
}

Vec network_state(const KineticState& s) {
  const auto all = s.values();
  Vec out(static_cast<Eigen::Index>(kNetworkStateIndex.size()));
  for (std::size_t k = 0; k < kNetworkStateIndex.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = all[kNetworkStateIndex[k]];
  }
  return out;
}

TrajectoryData from_dataset(const Dataset& data) {
  if (data.runs.empty()) throw ConfigError("dataset has no replications");
  const int H = static_cast<int>(data.runs.front().states.size());
  std::vector<Trajectory> runs;
  runs.reserve(data.runs.size());
  for (const KineticRun& run : data.runs) {
    Trajectory tr;
    tr.replication_id = run.replication_id;
    for (const KineticState& s : run.states) {
      tr.states.push_back(network_state(s));
    }
    for (int t = 0; t + 1 < H; ++t) {
      tr.actions.push_back(Vec::Constant(1, run.feed.at(t)));
    }
    runs.push_back(std::move(tr));
  }
  return from_trajectories(runs, static_cast<int>(kNetworkStateIndex.size()),
                           1, H);
}

PriorHyper PriorHyper::centered_at(const ModelParams& anchor) {
  anchor.check_dimensions();
  PriorHyper p;
  p.beta_s_mean = anchor.beta_s;
  p.beta_a_mean = anchor.beta_a;
  p.mu_mean = anchor.mu_s;
  p.lambda_mean = anchor.mu_a;
  return p;
}

void PriorHyper::check(const ModelParams& w) const {
  if (static_cast<int>(beta_s_mean.size()) != w.H - 1 ||
      static_cast<int>(beta_a_mean.size()) != w.H - 1 ||
      static_cast<int>(mu_mean.size()) != w.H ||
      static_cast<int>(lambda_mean.size()) != w.H) {
    throw ConfigError("prior hyperparameters do not match model horizon");
  }
  for (int t = 0; t < w.H; ++t) {
    if (mu_mean[t].size() != w.n || lambda_mean[t].size() != w.m) {
      throw ConfigError("prior mean has wrong size");
    }
    if (t + 1 < w.H && (beta_s_mean[t].rows() != w.n ||
                        beta_s_mean[t].cols() != w.n ||
                        beta_a_mean[t].rows() != w.m ||
                        beta_a_mean[t].cols() != w.n)) {
      throw ConfigError("prior coefficient mean has wrong shape");
    }
  }
  if (!(beta_sd > 0) || !(mu_sd > 0) || !(lambda_sd > 0) || !(v.kappa > 0) ||
      !(v.rho > 0) || !(sigma.kappa > 0) || !(sigma.rho > 0)) {
    throw ConfigError("prior scales must be positive");
  }
}

namespace {

Mat deviations(const Mat& x, const Vec& mean) {
  return x.rowwise() - mean.transpose();
}

// Residual of transition t -> t+1, R x n.
Mat transition_residual(const ModelParams& w, const TrajectoryData& d, int t) {
  Mat e = deviations(d.states[t + 1], w.mu_s[t + 1]);
  e.noalias() -= deviations(d.states[t], w.mu_s[t]) * w.beta_s[t];
  if (w.m > 0) {
    e.noalias() -= deviations(d.actions[t], w.mu_a[t]) * w.beta_a[t];
  }
  return e;
}

NormalParams normal_regression(const Vec& alpha, const Vec& resid,
                               double noise_var, double prior_mean,
                               double prior_sd) {
  const double d2 = prior_sd * prior_sd;
  const double denom = d2 * alpha.squaredNorm() + noise_var;
  NormalParams p;
  p.mean = (d2 * alpha.dot(resid) + noise_var * prior_mean) / denom;
  p.var = d2 * noise_var / denom;
  return p;
}

InvGammaParams inv_gamma_update(const Vec& u, const InvGammaPrior& prior) {
  return {(prior.kappa + static_cast<double>(u.size())) / 2.0,
          (prior.rho + u.squaredNorm()) / 2.0};
}

// Node mean conditional: own observations y ~ N(theta, own_var) plus child
// terms c ~ N(beta * theta, child_var).
struct MeanAccumulator {
  double precision = 0.0;
  double weighted = 0.0;

  void prior(double mean, double sd) {
    precision += 1.0 / (sd * sd);
    weighted += mean / (sd * sd);
  }
  void own(const Vec& y, double var) {
    precision += static_cast<double>(y.size()) / var;
    weighted += y.sum() / var;
  }
  void child(double beta, const Vec& c, double var) {
    precision += static_cast<double>(c.size()) * beta * beta / var;
    weighted += beta * c.sum() / var;
  }
  NormalParams result() const { return {weighted / precision, 1.0 / precision}; }
};

NormalParams beta_from_residual(const ModelParams& w, const TrajectoryData& d,
                                const PriorHyper& pr, const Mat& e, int t,
                                int j, int k, bool action_parent) {
  const Vec alpha = action_parent
                        ? Vec(d.actions[t].col(j).array() - w.mu_a[t](j))
                        : Vec(d.states[t].col(j).array() - w.mu_s[t](j));
  const double current =
      action_parent ? w.beta_a[t](j, k) : w.beta_s[t](j, k);
  const Vec resid = e.col(k) + current * alpha;
  const double prior_mean =
      action_parent ? pr.beta_a_mean[t](j, k) : pr.beta_s_mean[t](j, k);
  const double v = w.v[t + 1](k);
  return normal_regression(alpha, resid, v * v, prior_mean, pr.beta_sd);
}

InvGammaParams v_from_residual(const ModelParams& w, const TrajectoryData& d,
                               const PriorHyper& pr, const Mat* e_prev, int t,
                               int k) {
  if (t == 0) {
    const Vec u = d.states[0].col(k).array() - w.mu_s[0](k);
    return inv_gamma_update(u, pr.v);
  }
  return inv_gamma_update(e_prev->col(k), pr.v);
}

NormalParams mu_from_residual(const ModelParams& w, const TrajectoryData& d,
                              const PriorHyper& pr, const Mat* e_prev,
                              const Mat* e_next, int t, int k) {
  MeanAccumulator acc;
  acc.prior(pr.mu_mean[t](k), pr.mu_sd);
  const double vk = w.v[t](k);
  if (t == 0) {
    acc.own(d.states[0].col(k), vk * vk);
  } else {
    acc.own(e_prev->col(k).array() + w.mu_s[t](k), vk * vk);
  }
  if (t + 1 < w.H) {
    for (int l = 0; l < w.n; ++l) {
      if (!w.mask_s[t](k, l)) continue;
      const double b = w.beta_s[t](k, l);
      const double vl = w.v[t + 1](l);
      const Vec c = b * w.mu_s[t](k) - e_next->col(l).array();
      acc.child(b, c, vl * vl);
    }
  }
  return acc.result();
}

NormalParams lambda_from_residual(const ModelParams& w,
                                  const TrajectoryData& d,
                                  const PriorHyper& pr, const Mat* e_next,
                                  int t, int k) {
  MeanAccumulator acc;
  acc.prior(pr.lambda_mean[t](k), pr.lambda_sd);
  if (t + 1 < w.H) {
    const double sk = w.sigma[t](k);
    acc.own(d.actions[t].col(k), sk * sk);
    for (int l = 0; l < w.n; ++l) {
      if (!w.mask_a[t](k, l)) continue;
      const double b = w.beta_a[t](k, l);
      const double vl = w.v[t + 1](l);
      const Vec c = b * w.mu_a[t](k) - e_next->col(l).array();
      acc.child(b, c, vl * vl);
    }
  }
  return acc.result();
}

InvGammaParams sigma_from_data(const ModelParams& w, const TrajectoryData& d,
                               const PriorHyper& pr, int t, int k) {
  if (t + 1 >= w.H) return inv_gamma_update(Vec(0), pr.sigma);
  const Vec u = d.actions[t].col(k).array() - w.mu_a[t](k);
  return inv_gamma_update(u, pr.sigma);
}

void check_index(const ModelParams& w, int t, int k, int size) {
  if (t < 0 || t >= w.H || k < 0 || k >= size) {
    throw ConfigError("parameter index out of range");
  }
}

}  // namespace

NormalParams beta_conditional(const ModelParams& w, const TrajectoryData& data,
                              const PriorHyper& priors, int t, int j, int k,
                              bool action_parent) {
  check_index(w, t + 1, k, w.n);
  check_index(w, t, j, action_parent ? w.m : w.n);
  const Mat e = transition_residual(w, data, t);
  return beta_from_residual(w, data, priors, e, t, j, k, action_parent);
}

InvGammaParams v_conditional(const ModelParams& w, const TrajectoryData& data,
                             const PriorHyper& priors, int t, int k) {
  check_index(w, t, k, w.n);
  Mat e;
  if (t > 0) e = transition_residual(w, data, t - 1);
  return v_from_residual(w, data, priors, &e, t, k);
}

InvGammaParams sigma_conditional(const ModelParams& w,
                                 const TrajectoryData& data,
                                 const PriorHyper& priors, int t, int k) {
  check_index(w, t, k, w.m);
  return sigma_from_data(w, data, priors, t, k);
}

NormalParams mu_conditional(const ModelParams& w, const TrajectoryData& data,
                            const PriorHyper& priors, int t, int k) {
  check_index(w, t, k, w.n);
  Mat prev;
  Mat next;
  if (t > 0) prev = transition_residual(w, data, t - 1);
  if (t + 1 < w.H) next = transition_residual(w, data, t);
  return mu_from_residual(w, data, priors, &prev, &next, t, k);
}

NormalParams lambda_conditional(const ModelParams& w,
                                const TrajectoryData& data,
                                const PriorHyper& priors, int t, int k) {
  check_index(w, t, k, w.m);
  Mat next;
  if (t + 1 < w.H) next = transition_residual(w, data, t);
  return lambda_from_residual(w, data, priors, &next, t, k);
}

double draw_normal(const NormalParams& p, Rng& rng) {
  return p.mean + std::sqrt(p.var) * standard_normal(rng);
}

double draw_inv_gamma(const InvGammaParams& p, Rng& rng) {
  std::gamma_distribution<double> g(p.shape, 1.0);
  return p.scale / g(rng);
}

void update_beta(ModelParams& w, const TrajectoryData& data,
                 const PriorHyper& priors, int t, int j, int k,
                 bool action_parent, Rng& rng) {
  const bool active =
      action_parent ? w.mask_a.at(t)(j, k) : w.mask_s.at(t)(j, k);
  double& slot = action_parent ? w.beta_a[t](j, k) : w.beta_s[t](j, k);
  if (!active) {
    slot = 0.0;
    return;
  }
  slot = draw_normal(
      beta_conditional(w, data, priors, t, j, k, action_parent), rng);
}

void update_v(ModelParams& w, const TrajectoryData& data,
              const PriorHyper& priors, int t, int k, Rng& rng) {
  w.v[t](k) = std::sqrt(draw_inv_gamma(v_conditional(w, data, priors, t, k), rng));
}

void update_sigma(ModelParams& w, const TrajectoryData& data,
                  const PriorHyper& priors, int t, int k, Rng& rng) {
  w.sigma[t](k) =
      std::sqrt(draw_inv_gamma(sigma_conditional(w, data, priors, t, k), rng));
}

void update_mu(ModelParams& w, const TrajectoryData& data,
               const PriorHyper& priors, int t, int k, Rng& rng) {
  w.mu_s[t](k) = draw_normal(mu_conditional(w, data, priors, t, k), rng);
}

void update_lambda(ModelParams& w, const TrajectoryData& data,
                   const PriorHyper& priors, int t, int k, Rng& rng) {
  w.mu_a[t](k) = draw_normal(lambda_conditional(w, data, priors, t, k), rng);
}

// Same scan as calling the update_* functions in order, but with transition
// residuals maintained incrementally.
ModelParams gibbs_sweep(const ModelParams& state, const TrajectoryData& data,
                        const PriorHyper& priors, Rng& rng) {
  data.check(state);
  ModelParams w = state;
  const int H = w.H;
  std::vector<Mat> resid(std::max(H - 1, 0));
  for (int t = 0; t + 1 < H; ++t) resid[t] = transition_residual(w, data, t);

  for (int t = 0; t < H; ++t) {
    Mat* prev = t > 0 ? &resid[t - 1] : nullptr;
    Mat* next = t + 1 < H ? &resid[t] : nullptr;
    if (next != nullptr) {
      for (int k = 0; k < w.n; ++k) {
        for (int pass = 0; pass < 2; ++pass) {
          const bool act = pass == 1;
          const int parents = act ? w.m : w.n;
          for (int j = 0; j < parents; ++j) {
            const bool active = act ? w.mask_a[t](j, k) : w.mask_s[t](j, k);
            double& slot = act ? w.beta_a[t](j, k) : w.beta_s[t](j, k);
            const double old = slot;
            double fresh = 0.0;
            if (active) {
              fresh = draw_normal(
                  beta_from_residual(w, data, priors, *next, t, j, k, act),
                  rng);
            }
            slot = fresh;
            const double mean = act ? w.mu_a[t](j) : w.mu_s[t](j);
            const auto& x = act ? data.actions[t] : data.states[t];
            next->col(k).array() -= (fresh - old) * (x.col(j).array() - mean);
          }
        }
      }
    }
    for (int k = 0; k < w.n; ++k) {
      w.v[t](k) = std::sqrt(
          draw_inv_gamma(v_from_residual(w, data, priors, prev, t, k), rng));
    }
    for (int k = 0; k < w.m; ++k) {
      w.sigma[t](k) = std::sqrt(
          draw_inv_gamma(sigma_from_data(w, data, priors, t, k), rng));
    }
    for (int k = 0; k < w.n; ++k) {
      const double old = w.mu_s[t](k);
      const double fresh = draw_normal(
          mu_from_residual(w, data, priors, prev, next, t, k), rng);
      w.mu_s[t](k) = fresh;
      const double delta = fresh - old;
      if (prev != nullptr) prev->col(k).array() -= delta;
      if (next != nullptr) {
        next->rowwise() += delta * w.beta_s[t].row(k);
      }
    }
    for (int k = 0; k < w.m; ++k) {
      const double old = w.mu_a[t](k);
      const double fresh = draw_normal(
          lambda_from_residual(w, data, priors, next, t, k), rng);
      w.mu_a[t](k) = fresh;
      if (next != nullptr) {
        next->rowwise() += (fresh - old) * w.beta_a[t].row(k);
      }
    }
  }
  return w;
}

ModelParams draw_from_prior(const ModelParams& structure,
                            const PriorHyper& priors, Rng& rng) {
  priors.check(structure);
  ModelParams w = structure;
  for (int t = 0; t < w.H; ++t) {
    if (t + 1 < w.H) {
      for (int k = 0; k < w.n; ++k) {
        for (int j = 0; j < w.n; ++j) {
          w.beta_s[t](j, k) =
              w.mask_s[t](j, k)
                  ? draw_normal({priors.beta_s_mean[t](j, k),
                                 priors.beta_sd * priors.beta_sd},
                                rng)
                  : 0.0;
        }
        for (int j = 0; j < w.m; ++j) {
          w.beta_a[t](j, k) =
              w.mask_a[t](j, k)
                  ? draw_normal({priors.beta_a_mean[t](j, k),
                                 priors.beta_sd * priors.beta_sd},
                                rng)
                  : 0.0;
        }
      }
    }
    for (int k = 0; k < w.n; ++k) {
      w.v[t](k) = std::sqrt(
          draw_inv_gamma({priors.v.kappa / 2, priors.v.rho / 2}, rng));
    }
    for (int k = 0; k < w.m; ++k) {
      w.sigma[t](k) = std::sqrt(
          draw_inv_gamma({priors.sigma.kappa / 2, priors.sigma.rho / 2}, rng));
    }
    for (int k = 0; k < w.n; ++k) {
      w.mu_s[t](k) = draw_normal(
          {priors.mu_mean[t](k), priors.mu_sd * priors.mu_sd}, rng);
    }
    for (int k = 0; k < w.m; ++k) {
      w.mu_a[t](k) = draw_normal(
          {priors.lambda_mean[t](k), priors.lambda_sd * priors.lambda_sd},
          rng);
    }
  }
  return w;
}

namespace {

double inv_gamma_center(const InvGammaPrior& p) {
  const double shape = p.kappa / 2;
  const double scale = p.rho / 2;
  return shape > 1.0 ? scale / (shape - 1.0) : scale / (shape + 1.0);
}

}  // namespace

ModelParams prior_center(const ModelParams& structure,
                         const PriorHyper& priors) {
  priors.check(structure);
  ModelParams w = structure;
  for (int t = 0; t < w.H; ++t) {
    if (t + 1 < w.H) {
      w.beta_s[t] = priors.beta_s_mean[t].cwiseProduct(
          w.mask_s[t].cast<double>().matrix());
      w.beta_a[t] = priors.beta_a_mean[t].cwiseProduct(
          w.mask_a[t].cast<double>().matrix());
    }
    w.mu_s[t] = priors.mu_mean[t];
    w.mu_a[t] = priors.lambda_mean[t];
    w.v[t].setConstant(std::sqrt(inv_gamma_center(priors.v)));
    w.sigma[t].setConstant(std::sqrt(inv_gamma_center(priors.sigma)));
  }
  return w;
}

PosteriorDraws sample_posterior(const TrajectoryData& data,
                                const ModelParams& structure,
                                const PriorHyper& priors,
                                const GibbsSettings& settings,
                                std::uint64_t seed) {
  if (settings.draws < 1 || settings.burn_in < 0 || settings.thinning < 1) {
    throw ConfigError("Gibbs settings need draws >= 1, burn_in >= 0, thinning >= 1");
  }
  data.check(structure);
  if (data.replications() == 0) {
    throw ConfigError("cannot fit a posterior to an empty dataset");
  }
  Rng rng = make_rng(seed, 0);
  PosteriorDraws out;
  out.seed = seed;
  out.burn_in = settings.burn_in;
  out.thinning = settings.thinning;
  ModelParams w = settings.start == ChainStart::kPriorDraw
                      ? draw_from_prior(structure, priors, rng)
                      : prior_center(structure, priors);
  for (int i = 0; i < settings.burn_in; ++i) {
    w = gibbs_sweep(w, data, priors, rng);
    ++out.sweeps;
  }
  out.draws.reserve(settings.draws);
  for (int b = 0; b < settings.draws; ++b) {
    for (int i = 0; i < settings.thinning; ++i) {
      w = gibbs_sweep(w, data, priors, rng);
      ++out.sweeps;
    }
    if (!validate_model(w)) ++out.invalid;
    out.draws.push_back(w);
  }
  return out;
}

Scaling Scaling::identity(int n, int m, int H) {
  Scaling s;
  s.state.assign(H, Vec::Ones(n));
  s.action.assign(H, Vec::Ones(m));
  return s;
}

namespace {

Vec column_sd(const Mat& x) {
  Vec sd = Vec::Zero(x.cols());
  if (x.rows() < 2) return sd;
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double mean = x.col(k).mean();
    sd(k) = std::sqrt((x.col(k).array() - mean).square().sum() /
                      static_cast<double>(x.rows() - 1));
  }
  return sd;
}

void floor_scales(std::vector<Vec>& scales) {
  if (scales.empty()) return;
  const Eigen::Index dim = scales.front().size();
  for (Eigen::Index k = 0; k < dim; ++k) {
    double top = 0.0;
    for (const Vec& v : scales) top = std::max(top, v(k));
    const double floor = top > 0.0 ? 1e-3 * top : 1.0;
    for (Vec& v : scales) v(k) = std::max(v(k), floor);
  }
}

}  // namespace

Scaling Scaling::from_data(const TrajectoryData& data) {
  Scaling s;
  for (const Mat& x : data.states) s.state.push_back(column_sd(x));
  for (const Mat& a : data.actions) s.action.push_back(column_sd(a));
  floor_scales(s.state);
  floor_scales(s.action);
  if (data.H > 0) {
    s.action.push_back(s.action.empty() ? Vec(Vec::Ones(data.m))
                                        : Vec(s.action.back()));
  }
  return s;
}

TrajectoryData Scaling::apply(const TrajectoryData& data) const {
  TrajectoryData out = data;
  for (int t = 0; t < data.H; ++t) {
    out.states[t] = data.states[t] * state[t].cwiseInverse().asDiagonal();
  }
  for (int t = 0; t + 1 < data.H; ++t) {
    out.actions[t] = data.actions[t] * action[t].cwiseInverse().asDiagonal();
  }
  return out;
}

namespace {

// factor_state[t] multiplies every state-indexed quantity at step t.
ModelParams rescale(const ModelParams& w, const std::vector<Vec>& fs,
                    const std::vector<Vec>& fa) {
  ModelParams out = w;
  for (int t = 0; t < w.H; ++t) {
    out.mu_s[t] = w.mu_s[t].cwiseProduct(fs[t]);
    out.v[t] = w.v[t].cwiseProduct(fs[t]);
    out.mu_a[t] = w.mu_a[t].cwiseProduct(fa[t]);
    out.sigma[t] = w.sigma[t].cwiseProduct(fa[t]);
    if (t + 1 < w.H) {
      // beta(j, k) scales with child factor / parent factor.
      out.beta_s[t] = fs[t].cwiseInverse().asDiagonal() * w.beta_s[t] *
                      fs[t + 1].asDiagonal();
      out.beta_a[t] = fa[t].cwiseInverse().asDiagonal() * w.beta_a[t] *
                      fs[t + 1].asDiagonal();
    }
  }
  return out;
}

std::vector<Vec> inverse(const std::vector<Vec>& v) {
  std::vector<Vec> out;
  for (const Vec& x : v) out.push_back(x.cwiseInverse());
  return out;
}

}  // namespace

ModelParams Scaling::to_scaled(const ModelParams& w) const {
  return rescale(w, inverse(state), inverse(action));
}

ModelParams Scaling::to_raw(const ModelParams& w) const {
  return rescale(w, state, action);
}

PriorHyper Scaling::apply(const PriorHyper& priors) const {
  PriorHyper out = priors;
  const int H = static_cast<int>(priors.mu_mean.size());
  for (int t = 0; t < H; ++t) {
    out.mu_mean[t] = priors.mu_mean[t].cwiseQuotient(state[t]);
    out.lambda_mean[t] = priors.lambda_mean[t].cwiseQuotient(action[t]);
    if (t + 1 < H) {
      out.beta_s_mean[t] = state[t].asDiagonal() * priors.beta_s_mean[t] *
                           state[t + 1].cwiseInverse().asDiagonal();
      out.beta_a_mean[t] = action[t].asDiagonal() * priors.beta_a_mean[t] *
                           state[t + 1].cwiseInverse().asDiagonal();
    }
  }
  return out;
}

PosteriorDraws sample_posterior_scaled(const TrajectoryData& data,
                                       const ModelParams& structure,
                                       const PriorHyper& raw_priors,
                                       const Scaling& scaling,
                                       const GibbsSettings& settings,
                                       std::uint64_t seed,
                                       ModelParams* final_scaled_state) {
  PosteriorDraws out =
      sample_posterior(scaling.apply(data), structure,
                       scaling.apply(raw_priors), settings, seed);
  if (final_scaled_state != nullptr) *final_scaled_state = out.draws.back();
  out.invalid = 0;
  for (ModelParams& w : out.draws) {
    w = scaling.to_raw(w);
    if (!validate_model(w)) ++out.invalid;
  }
  return out;
}

namespace {

std::string draw_file_name(std::size_t b) {
  std::string digits = std::to_string(b);
  while (digits.size() < 4) digits.insert(digits.begin(), '0');
  return "draw_" + digits + ".json";
}

}  // namespace

void save_draws(const PosteriorDraws& draws, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir);
  nlohmann::json manifest;
  manifest["schema"] = "dbnrl.draws/1";
  manifest["seed"] = draws.seed;
  manifest["burn_in"] = draws.burn_in;
  manifest["thinning"] = draws.thinning;
  manifest["sweeps"] = draws.sweeps;
  manifest["invalid"] = draws.invalid;
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t b = 0; b < draws.draws.size(); ++b) {
    const std::string name = draw_file_name(b);
    save_model(draws.draws[b], (std::filesystem::path(dir) / name).string());
    files.push_back(name);
  }
  manifest["files"] = std::move(files);
  write_text_file((std::filesystem::path(dir) / "manifest.json").string(),
                  manifest.dump(1) + "\n");
}

PosteriorDraws load_draws(const std::string& dir) {
  const std::string text =
      read_text_file((std::filesystem::path(dir) / "manifest.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed draws manifest: ") + e.what());
  }
  PosteriorDraws out;
  try {
    if (manifest.at("schema").get<std::string>() != "dbnrl.draws/1") {
      throw ConfigError("schema error: expected dbnrl.draws/1");
    }
    out.seed = manifest.at("seed").get<std::uint64_t>();
    out.burn_in = manifest.at("burn_in").get<int>();
    out.thinning = manifest.at("thinning").get<int>();
    out.sweeps = manifest.at("sweeps").get<long>();
    out.invalid = manifest.at("invalid").get<int>();
    for (const auto& name : manifest.at("files")) {
      out.draws.push_back(load_model(
          (std::filesystem::path(dir) / name.get<std::string>()).string()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schema error: ") + e.what());
  }
  if (out.draws.empty()) throw ConfigError("draws manifest lists no draws");
  const ModelParams& first = out.draws.front();
  for (const ModelParams& w : out.draws) {
    if (w.n != first.n || w.m != first.m || w.H != first.H) {
      throw ConfigError("posterior draws have inconsistent dimensions");
    }
  }
  return out;
}

}  // namespace dbnrl
