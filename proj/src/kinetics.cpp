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

#include "dbnrl/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace dbnrl {

namespace {

using ParamField = double KineticParams::*;

const std::map<std::string, ParamField>& param_fields() {
  static const std::map<std::string, ParamField> fields = {
      {"alpha_L", &KineticParams::alpha_L},
      {"C_max", &KineticParams::C_max},
      {"K_iN", &KineticParams::K_iN},
      {"K_iS", &KineticParams::K_iS},
      {"K_iX", &KineticParams::K_iX},
      {"K_N", &KineticParams::K_N},
      {"K_O", &KineticParams::K_O},
      {"K_S", &KineticParams::K_S},
      {"K_SL", &KineticParams::K_SL},
      {"m_s", &KineticParams::m_s},
      {"r_L", &KineticParams::r_L},
      {"V_evap", &KineticParams::V_evap},
      {"Y_cs", &KineticParams::Y_cs},
      {"Y_ls", &KineticParams::Y_ls},
      {"Y_xn", &KineticParams::Y_xn},
      {"Y_xs", &KineticParams::Y_xs},
      {"beta_LCmax", &KineticParams::beta_LCmax},
      {"mu_max", &KineticParams::mu_max},
      {"S_F", &KineticParams::S_F},
  };
  return fields;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

void KineticParams::validate() const {
  for (const auto& [name, field] : param_fields()) {
    const double v = this->*field;
    if (!std::isfinite(v) || v <= 0.0) {
      throw ConfigError("kinetic parameter " + name +
                        " must be finite and positive");
    }
  }
}

KineticParams KineticParams::parse(const std::string& text) {
  KineticParams p;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("kinetic config line " + std::to_string(lineno) +
                        ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const auto it = param_fields().find(key);
    if (it == param_fields().end()) {
      throw ConfigError("unknown kinetic parameter '" + key + "'");
    }
    p.*(it->second) = parse_double(trim(line.substr(eq + 1)));
  }
  p.validate();
  return p;
}

KineticParams KineticParams::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open kinetic config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string KineticParams::to_text() const {
  std::ostringstream out;
  for (const auto& [name, field] : param_fields()) {
    out << name << " = " << format_double(this->*field) << "\n";
  }
  return out.str();
}

void KineticState::set_values(const std::array<double, 6>& v) {
  X_f = v[0];
  C = v[1];
  L = v[2];
  S = v[3];
  N = v[4];
  V = v[5];
}

bool NoiseSpec::deterministic() const { return std::isinf(kappa) && kappa > 0; }

std::array<double, 6> NoiseSpec::sigma_at(std::size_t obs_index) const {
  std::array<double, 6> sigma{};
  if (deterministic()) return sigma;
  if (!(kappa > 0)) throw ConfigError("noise kappa must be positive");
  if (reference_profile.empty()) {
    throw ConfigError("stochastic noise requires reference profiles");
  }
  const auto& ref =
      reference_profile[std::min(obs_index, reference_profile.size() - 1)];
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    sigma[i] = std::abs(ref[i]) / kappa;
  }
  return sigma;
}

KineticRates kinetic_rates(const KineticState& s, double feed_rate,
                           const KineticParams& p,
                           const OperatingConditions& ops) {
  KineticRates r;
  const double O = ops.dissolved_oxygen;
  const double oxygen = O / (p.K_O + O);
  const double substrate_uptake = s.S / (p.K_S + s.S);
  const double substrate = substrate_uptake / (1.0 + s.S / p.K_iS);
  const double nitrogen = s.N / (p.K_N + s.N);
  const double density = 1.0 / (1.0 + s.X_f / p.K_iX);

  r.mu = p.mu_max * substrate * nitrogen * oxygen * density;
  r.beta_LC = 1.0 / (1.0 + s.N / p.K_iN) * substrate * oxygen * density *
              (1.0 - s.C / p.C_max) * p.beta_LCmax;
  r.beta_C = 2.0 * (1.0 - p.r_L) * r.beta_LC;
  const double lipid_share = (s.L + s.X_f) > 0.0 ? s.L / (s.L + s.X_f) : 0.0;
  r.beta_L = p.r_L * r.beta_LC - p.K_SL * lipid_share * oxygen;
  const double q_L = p.alpha_L * r.mu + r.beta_L;
  r.q_S = r.mu / p.Y_xs + oxygen * substrate_uptake * p.m_s +
          r.beta_C / p.Y_cs + r.beta_L / p.Y_ls;
  r.F_B = s.V / 1000.0 *
          (7.14 / p.Y_xn * r.mu * s.X_f + 1.59 * r.beta_C * s.X_f);
  r.dilution = (r.F_B + feed_rate) / s.V - p.V_evap / s.V;

  r.drift[0] = r.mu * s.X_f - r.dilution * s.X_f;
  r.drift[1] = r.beta_C * s.X_f - r.dilution * s.C;
  r.drift[2] = q_L * s.X_f - r.dilution * s.L;
  r.drift[3] = -r.q_S * s.X_f + feed_rate / s.V * p.S_F - r.dilution * s.S;
  r.drift[4] = -r.mu * s.X_f / p.Y_xn - r.dilution * s.N;
  r.drift[5] = r.F_B + feed_rate - p.V_evap;
  return r;
}

IntegrationError::IntegrationError(const std::string& variable, double time_h)
    : NumericError("kinetic integration failed: " + variable +
                   " became non-finite at t=" + format_double(time_h) + " h"),
      variable_(variable) {}

namespace {

// Explicit Euler on a fixed fine grid inside one noise sub-step. The
// substrate Monod term is stiff once S falls near K_S (rate constant up to
// ~600 1/h), so a single 0.1 h drift step overshoots below zero and the
// clamp then manufactures substrate. A fixed grid keeps the step map smooth
// in the state, which the finite-difference anchor relies on.
void integrate_drift(KineticState& s, double feed_rate, double h,
                     const KineticParams& params,
                     const OperatingConditions& ops) {
  const int inner =
      std::max(1, static_cast<int>(std::ceil(h / ops.drift_step_h - 1e-9)));
  const double step = h / inner;
  for (int k = 0; k < inner; ++k) {
    const KineticRates r = kinetic_rates(s, feed_rate, params, ops);
    auto x = s.values();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += r.drift[i] * step;
      if (!std::isfinite(x[i])) {
        throw IntegrationError(kKineticVariableNames[i], s.t + step);
      }
      x[i] = std::max(0.0, x[i]);
    }
    x[1] = std::min(x[1], params.C_max);
    x[5] = std::max(x[5], ops.min_volume_L);
    s.set_values(x);
    s.t += step;
  }
}

}  // namespace

KineticState step_fermentation(const KineticState& state, double feed_rate,
                               double dt_obs, const KineticParams& params,
                               const NoiseSpec& noise, Rng& rng,
                               const OperatingConditions& ops) {
  if (!(dt_obs > 0.0)) throw ConfigError("dt_obs must be positive");
  if (!(feed_rate >= 0.0)) throw ConfigError("feed rate must be nonnegative");
  const int substeps =
      std::max(1, static_cast<int>(std::lround(dt_obs / ops.substep_h)));
  const double h = dt_obs / substeps;
  const std::size_t obs_index = static_cast<std::size_t>(
      std::max(0L, std::lround(state.t / ops.obs_interval_h)));
  const auto sigma = noise.sigma_at(obs_index);
  const bool stochastic = !noise.deterministic();
  const double diffusion_scale = std::sqrt(h / ops.obs_interval_h);

  KineticState s = state;
  for (int k = 0; k < substeps; ++k) {
    integrate_drift(s, feed_rate, h, params, ops);
    auto x = s.values();
    if (stochastic) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += sigma[i] * diffusion_scale * standard_normal(rng);
      }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i])) {
        throw IntegrationError(kKineticVariableNames[i], s.t);
      }
      x[i] = std::max(0.0, x[i]);
    }
    x[1] = std::min(x[1], params.C_max);
    x[5] = std::max(x[5], ops.min_volume_L);
    s.set_values(x);
    if (s.V <= 0.0) throw IntegrationError("V", s.t);
  }
  s.t = state.t + dt_obs;
  return s;
}

double SolubilityCurve::fraction(double saturation) const {
  return std::exp(log_fraction(saturation));
}

double SolubilityCurve::log_fraction(double saturation) const {
  if (!(saturation > 0.0)) {
    throw ConfigError("ammonium sulphate saturation must be positive");
  }
  return -softplus(b * std::log(saturation / a));
}

double SolubilityCurve::log_complement(double saturation) const {
  if (!(saturation > 0.0)) {
    throw ConfigError("ammonium sulphate saturation must be positive");
  }
  return -softplus(-b * std::log(saturation / a));
}

PurificationState step_purification(const PurificationState& state,
                                    double log_saturation,
                                    PrecipitationStage stage,
                                    const NoiseSpec& noise, Rng& rng) {
  const double zeta = std::min(100.0, std::exp(log_saturation));
  if (!(zeta > 0.0) || log_saturation > std::log(100.0) + 1e-12 ||
      std::isnan(log_saturation)) {
    throw ConfigError("saturation must lie in (0, 100] %, got " +
                      format_double(zeta));
  }
  PurificationState next = state;
  if (stage == PrecipitationStage::kP1) {
    next.logP += kProductSolubility.log_fraction(zeta);
    next.logI += kImpuritySolubility.log_fraction(zeta);
  } else {
    next.logP += kProductSolubility.log_complement(zeta);
    next.logI += kImpuritySolubility.log_complement(zeta);
  }
  if (!noise.deterministic()) {
    if (!(noise.kappa > 0)) throw ConfigError("noise kappa must be positive");
    next.logP += standard_normal(rng) / noise.kappa;
    next.logI += standard_normal(rng) / noise.kappa;
  }
  return next;
}

PurificationState centrifuge(const KineticState& state) {
  const double product = state.C;
  const double impurity = kDebrisSeparation * state.X_f + state.S + state.N;
  if (!(product > 0.0)) {
    throw DegenerateBatchError("centrifuge: product concentration is zero");
  }
  if (!(impurity > 0.0)) {
    throw DegenerateBatchError("centrifuge: impurity concentration is zero");
  }
  return {std::log(product), std::log(impurity)};
}

double purity(const PurificationState& state) {
  // P / (P + I) = 1 / (1 + exp(logI - logP))
  return 1.0 / (1.0 + std::exp(state.logI - state.logP));
}

}  // namespace dbnrl
