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

#include "dbnrl/shapley.hpp"

#include <sstream>

#include "dbnrl/dbn.hpp"

namespace dbnrl {

Vec AttributionReport::total() const {
  Vec sum = Vec::Zero(baseline.size());
  for (const Vec& c : contributions) sum += c;
  return sum;
}

std::vector<std::string> default_input_names(int n, int m) {
  std::vector<std::string> names;
  for (int k = 0; k < n; ++k) names.push_back("s" + std::to_string(k + 1));
  for (int k = 0; k < m; ++k) names.push_back("a" + std::to_string(k + 1));
  return names;
}

namespace {

void check_request(const ModelParams& w, const Observation& obs, int h,
                   int t) {
  if (h < 1 || h > t || t >= w.H) {
    throw ConfigError("attribution requires 1 <= h <= t < H");
  }
  if (obs.state.size() != w.n || obs.action.size() != w.m) {
    throw ConfigError("observation has the wrong size");
  }
}

// Column k of the effect matrix maps a unit deviation of input k at step h
// to the change in E[s_{t+1}].
Mat effect_matrix(const ModelParams& w, const PolicyParams& policy, int h,
                  int t) {
  const Mat path = pathway_product(w, policy, h + 1, t);
  Mat effect(w.n, w.n + w.m);
  effect.leftCols(w.n) = path * w.beta_s[h - 1].transpose();
  if (w.m > 0) effect.rightCols(w.m) = path * w.beta_a[h - 1].transpose();
  return effect;
}

Vec input_deviation(const ModelParams& w, const Observation& obs, int h) {
  Vec dev(w.n + w.m);
  dev.head(w.n) = obs.state - w.mu_s[h - 1];
  if (w.m > 0) dev.tail(w.m) = obs.action - w.mu_a[h - 1];
  return dev;
}

AttributionReport empty_report(const ModelParams& w, int t) {
  AttributionReport r;
  r.input_names = default_input_names(w.n, w.m);
  r.contributions.assign(w.n + w.m, Vec::Zero(w.n));
  r.baseline = w.mu_s[t];
  r.conditioned = w.mu_s[t];
  return r;
}

}  // namespace

AttributionReport shapley_closed_form(const ModelParams& w,
                                      const PolicyParams& policy,
                                      const Observation& obs, int h, int t) {
  check_request(w, obs, h, t);
  const Mat effect = effect_matrix(w, policy, h, t);
  const Vec dev = input_deviation(w, obs, h);
  AttributionReport r = empty_report(w, t);
  for (int k = 0; k < w.n + w.m; ++k) {
    r.contributions[k] = effect.col(k) * dev(k);
  }
  r.conditioned = r.baseline + effect * dev;
  r.draws_used = 1;
  return r;
}

AttributionReport shapley_oracle(const ModelParams& w,
                                 const PolicyParams& policy,
                                 const Observation& obs, int h, int t) {
  check_request(w, obs, h, t);
  const int players = w.n + w.m;
  if (players > 12) throw ConfigError("subset enumeration limited to 12 inputs");
  const Mat effect = effect_matrix(w, policy, h, t);
  const Vec dev = input_deviation(w, obs, h);
  // g(U): conditional mean with the deviations outside U set to zero.
  const auto g = [&](unsigned mask) {
    Vec masked = Vec::Zero(players);
    for (int k = 0; k < players; ++k) {
      if (mask & (1U << k)) masked(k) = dev(k);
    }
    return Vec(w.mu_s[t] + effect * masked);
  };
  std::vector<double> factorial(players + 1, 1.0);
  for (int i = 1; i <= players; ++i) factorial[i] = factorial[i - 1] * i;

  AttributionReport r = empty_report(w, t);
  const unsigned full = (1U << players) - 1U;
  for (int k = 0; k < players; ++k) {
    const unsigned bit = 1U << k;
    for (unsigned u = 0; u <= full; ++u) {
      if (u & bit) continue;
      const int size = __builtin_popcount(u);
      const double weight = factorial[players - size - 1] * factorial[size] /
                            factorial[players];
      r.contributions[k] += weight * (g(u | bit) - g(u));
    }
  }
  r.conditioned = g(full);
  r.draws_used = 1;
  return r;
}

AttributionReport expected_shapley(const std::vector<ModelParams>& draws,
                                   const PolicyParams& policy,
                                   const Observation& obs, int h, int t) {
  if (draws.empty()) throw ConfigError("expected attribution needs draws");
  AttributionReport avg;
  int used = 0;
  int skipped = 0;
  for (const ModelParams& w : draws) {
    if (!validate_model(w)) {
      ++skipped;
      continue;
    }
    const AttributionReport r = shapley_closed_form(w, policy, obs, h, t);
    if (used == 0) {
      avg = r;
    } else {
      for (std::size_t k = 0; k < r.contributions.size(); ++k) {
        avg.contributions[k] += r.contributions[k];
      }
      avg.baseline += r.baseline;
      avg.conditioned += r.conditioned;
    }
    ++used;
  }
  if (used == 0) throw NumericError("every posterior draw is invalid");
  for (Vec& c : avg.contributions) c /= used;
  avg.baseline /= used;
  avg.conditioned /= used;
  avg.draws_used = used;
  avg.draws_skipped = skipped;
  return avg;
}

std::string attribution_csv(const AttributionReport& report,
                            const std::vector<std::string>& output_names) {
  const auto n = static_cast<std::size_t>(report.baseline.size());
  if (output_names.size() != n) {
    throw ConfigError("output names do not match the state dimension");
  }
  std::ostringstream out;
  out << "input_name,output_coordinate,contribution,baseline,conditioned_value\n";
  for (std::size_t k = 0; k < report.contributions.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      out << report.input_names[k] << ',' << output_names[i] << ','
          << format_double(report.contributions[k](ii)) << ','
          << format_double(report.baseline(ii)) << ','
          << format_double(report.conditioned(ii)) << '\n';
    }
  }
  return out.str();
}

}  // namespace dbnrl
