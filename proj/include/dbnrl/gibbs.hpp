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

#ifndef DBNRL_GIBBS_HPP_
#define DBNRL_GIBBS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dbnrl/dataset.hpp"
#include "dbnrl/model.hpp"

namespace dbnrl {

// Observed trajectories arranged per time step: states[t] is R x n,
// actions[t] is R x m (H-1 entries).
struct TrajectoryData {
  int n = 0;
  int m = 0;
  int H = 0;
  std::vector<Mat> states;
  std::vector<Mat> actions;

  int replications() const {
    return states.empty() ? 0 : static_cast<int>(states.front().rows());
  }
  static TrajectoryData empty(int n, int m, int H);
  void check(const ModelParams& w) const;
};

TrajectoryData from_trajectories(const std::vector<Trajectory>& runs, int n,
                                 int m, int H);

// Fermentation state (X_f, C, S, N, V); lipid is not part of the network.
inline constexpr std::array<int, 5> kNetworkStateIndex = {0, 1, 3, 4, 5};
Vec network_state(const KineticState& s);
TrajectoryData from_dataset(const Dataset& data);

struct NormalPrior {
  double mean = 0.0;
  double sd = 1.0;
};

// Inv-Gamma with shape kappa/2 and scale rho/2.
struct InvGammaPrior {
  double kappa = 4.0;
  double rho = 2.0;
};

struct PriorHyper {
  std::vector<Mat> beta_s_mean;  // H-1 entries, n x n
  std::vector<Mat> beta_a_mean;  // H-1 entries, m x n
  std::vector<Vec> mu_mean;      // H entries
  std::vector<Vec> lambda_mean;  // H entries
  double beta_sd = 1.0;
  double mu_sd = 10.0;
  double lambda_sd = 10.0;
  InvGammaPrior v;
  InvGammaPrior sigma;

  // Centers from an anchor model (typically a linearized mechanistic model).
  static PriorHyper centered_at(const ModelParams& anchor);
  void check(const ModelParams& w) const;
};

// Full conditionals. Each returns the distribution parameters so tests can
// compare against analytic posteriors without sampling noise.
struct NormalParams {
  double mean = 0.0;
  double var = 0.0;
};

struct InvGammaParams {
  double shape = 0.0;
  double scale = 0.0;
};

// Coefficient from parent j to child k across transition t (0-based, t < H-1).
// action_parent selects beta_a instead of beta_s.
NormalParams beta_conditional(const ModelParams& w, const TrajectoryData& data,
                              const PriorHyper& priors, int t, int j, int k,
                              bool action_parent);
InvGammaParams v_conditional(const ModelParams& w, const TrajectoryData& data,
                             const PriorHyper& priors, int t, int k);
InvGammaParams sigma_conditional(const ModelParams& w,
                                 const TrajectoryData& data,
                                 const PriorHyper& priors, int t, int k);
NormalParams mu_conditional(const ModelParams& w, const TrajectoryData& data,
                            const PriorHyper& priors, int t, int k);
NormalParams lambda_conditional(const ModelParams& w,
                                const TrajectoryData& data,
                                const PriorHyper& priors, int t, int k);

double draw_normal(const NormalParams& p, Rng& rng);
double draw_inv_gamma(const InvGammaParams& p, Rng& rng);

void update_beta(ModelParams& w, const TrajectoryData& data,
                 const PriorHyper& priors, int t, int j, int k,
                 bool action_parent, Rng& rng);
void update_v(ModelParams& w, const TrajectoryData& data,
              const PriorHyper& priors, int t, int k, Rng& rng);
void update_sigma(ModelParams& w, const TrajectoryData& data,
                  const PriorHyper& priors, int t, int k, Rng& rng);
void update_mu(ModelParams& w, const TrajectoryData& data,
               const PriorHyper& priors, int t, int k, Rng& rng);
void update_lambda(ModelParams& w, const TrajectoryData& data,
                   const PriorHyper& priors, int t, int k, Rng& rng);

ModelParams gibbs_sweep(const ModelParams& state, const TrajectoryData& data,
                        const PriorHyper& priors, Rng& rng);

// Masks are copied from the template.
ModelParams draw_from_prior(const ModelParams& structure,
                            const PriorHyper& priors, Rng& rng);

struct PosteriorDraws {
  std::vector<ModelParams> draws;
  std::uint64_t seed = 0;
  int burn_in = 0;
  int thinning = 1;
  long sweeps = 0;
  int invalid = 0;  // draws failing validate_model
};

// Per-step, per-coordinate rescaling of the data. The linear-Gaussian
// model is closed under diagonal rescaling, so a chain run on scaled data
// maps back to raw units exactly.
struct Scaling {
  std::vector<Vec> state;   // H entries, all > 0
  std::vector<Vec> action;  // H entries (the last one unused by data)

  static Scaling identity(int n, int m, int H);
  // Column standard deviations, floored at 1e-3 of the largest one seen for
  // that coordinate (or 1 for a coordinate that never varies).
  static Scaling from_data(const TrajectoryData& data);

  TrajectoryData apply(const TrajectoryData& data) const;
  ModelParams to_scaled(const ModelParams& w) const;
  ModelParams to_raw(const ModelParams& w) const;
  // Centers are rescaled; prior spreads are interpreted in scaled units.
  PriorHyper apply(const PriorHyper& priors) const;
};

enum class ChainStart {
  kPriorCenter,  // Normal means, variances at the Inv-Gamma mean (or mode)
  kPriorDraw,
};

struct GibbsSettings {
  int draws = 100;
  int burn_in = 500;
  int thinning = 5;
  ChainStart start = ChainStart::kPriorCenter;
};

ModelParams prior_center(const ModelParams& structure, const PriorHyper& priors);

PosteriorDraws sample_posterior(const TrajectoryData& data,
                                const ModelParams& structure,
                                const PriorHyper& priors,
                                const GibbsSettings& settings,
                                std::uint64_t seed);

// Runs the chain on rescaled data and returns draws in raw units.
PosteriorDraws sample_posterior_scaled(const TrajectoryData& data,
                                       const ModelParams& structure,
                                       const PriorHyper& raw_priors,
                                       const Scaling& scaling,
                                       const GibbsSettings& settings,
                                       std::uint64_t seed,
                                       ModelParams* final_scaled_state = nullptr);

// One model document per draw plus manifest.json in dir.
void save_draws(const PosteriorDraws& draws, const std::string& dir);
PosteriorDraws load_draws(const std::string& dir);

}  // namespace dbnrl

#endif  // DBNRL_GIBBS_HPP_
