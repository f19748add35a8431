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

#ifndef DBNRL_KINETICS_HPP_
#define DBNRL_KINETICS_HPP_

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "dbnrl/common.hpp"

namespace dbnrl {

// Kinetic constants of the Yarrowia lipolytica fed-batch model. Defaults are
// the fitted values; units follow the usual g/L, h, L conventions.
struct KineticParams {
  double alpha_L = 0.1273;     // lipid production coefficient for growth
  double C_max = 130.90;       // g/L, citrate tolerance
  double K_iN = 0.1229;        // g/L
  double K_iS = 612.18;        // g/L
  double K_iX = 59.974;        // g/L
  double K_N = 0.0200;         // g/L
  double K_O = 0.3309;         // % air
  double K_S = 0.0430;         // g/L
  double K_SL = 0.0217;        // lipid decomposition coefficient
  double m_s = 0.0225;         // g/g/h
  double r_L = 0.4792;         // lipid share of lipid+citrate carbon flow
  double V_evap = 0.0026;      // L/h
  double Y_cs = 0.6826;        // g/g
  double Y_ls = 0.3574;        // g/g
  double Y_xn = 10.0;          // g/g
  double Y_xs = 0.2386;        // g/g
  double beta_LCmax = 0.1426;  // 1/h
  double mu_max = 0.3845;      // 1/h
  double S_F = 917.00;         // g/L oil in feed

  // Throws ConfigError unless every constant is finite and > 0.
  void validate() const;

  // Flat "name = value" text; '#' starts a comment. Unknown names are
  // rejected, missing names keep their defaults.
  static KineticParams parse(const std::string& text);
  static KineticParams load(const std::string& path);
  std::string to_text() const;
};

// Setpoint-held operating conditions (no pH/temperature/oxygen dynamics).
struct OperatingConditions {
  double dissolved_oxygen = 30.0;  // % air saturation, cascade-controlled
  double capacity_L = 3.0;         // bioreactor working-volume cap
  double min_volume_L = 0.1;       // noise cannot drain the vessel below this
  double substep_h = 0.1;          // Euler-Maruyama step
  double drift_step_h = 0.001;     // drift grid inside each sub-step
  double obs_interval_h = 4.0;     // spacing of recorded observations
};

struct KineticState {
  double X_f = 0.0;  // lipid-free cell mass, g/L
  double C = 0.0;    // citrate, g/L
  double L = 0.0;    // lipid, g/L
  double S = 0.0;    // substrate (oil), g/L
  double N = 0.0;    // nitrogen, g/L
  double V = 0.0;    // working volume, L
  double t = 0.0;    // elapsed time, h

  std::array<double, 6> values() const { return {X_f, C, L, S, N, V}; }
  void set_values(const std::array<double, 6>& v);
};

inline constexpr std::array<const char*, 6> kKineticVariableNames = {
    "X_f", "C", "L", "S", "N", "V"};

// Per-observation-time diffusion levels. sigma(s_t) = profile_t / kappa,
// interpreted as the standard deviation accumulated over one observation
// interval. kappa = +inf is the deterministic limit.
struct NoiseSpec {
  double kappa = std::numeric_limits<double>::infinity();
  std::vector<std::array<double, 6>> reference_profile;

  bool deterministic() const;
  std::array<double, 6> sigma_at(std::size_t obs_index) const;
  static NoiseSpec none() { return {}; }
};

// Instantaneous drift terms of the coupled kinetic system.
struct KineticRates {
  double mu = 0.0;        // specific growth rate
  double beta_LC = 0.0;   // carbon flow into the lipid pathway
  double beta_C = 0.0;
  double beta_L = 0.0;
  double q_S = 0.0;
  double F_B = 0.0;       // base feed, L/h
  double dilution = 0.0;  // D - V_evap / V
  std::array<double, 6> drift{};  // dX_f, dC, dL, dS, dN, dV per hour
};

KineticRates kinetic_rates(const KineticState& state, double feed_rate,
                           const KineticParams& params,
                           const OperatingConditions& ops);

class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& variable, double time_h);
  const std::string& variable() const { return variable_; }

 private:
  std::string variable_;
};

// Advances the stochastic kinetic system by dt_obs hours with sub-stepped
// Euler-Maruyama, clamping concentrations to [0, inf) and C to C_max after
// every sub-step.
KineticState step_fermentation(const KineticState& state, double feed_rate,
                               double dt_obs, const KineticParams& params,
                               const NoiseSpec& noise, Rng& rng,
                               const OperatingConditions& ops = {});

// ---------------------------------------------------------------------------
// Downstream purification.

struct PurificationState {
  double logP = 0.0;
  double logI = 0.0;
};

enum class PrecipitationStage { kP1, kP2 };

// Fractional ammonium-sulphate solubility F(z) = 1 / (1 + (z/a)^b).
struct SolubilityCurve {
  double a;
  double b;
  double fraction(double saturation) const;
  double log_fraction(double saturation) const;
  double log_complement(double saturation) const;
};

inline constexpr SolubilityCurve kProductSolubility{56.27, 42.00};
inline constexpr SolubilityCurve kImpuritySolubility{53.72, 5.23};
inline constexpr double kDebrisSeparation = 0.01;

class DegenerateBatchError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Log-linear precipitation step. Residual std-dev on each log coordinate is
// 1/kappa (relative noise of 1/kappa on the natural scale).
PurificationState step_purification(const PurificationState& state,
                                    double log_saturation,
                                    PrecipitationStage stage,
                                    const NoiseSpec& noise, Rng& rng);

// Disc-stack centrifugation: (P, I) = (C, xi * X_f + S + N), in logs.
PurificationState centrifuge(const KineticState& state);

double purity(const PurificationState& state);

}  // namespace dbnrl

#endif  // DBNRL_KINETICS_HPP_
