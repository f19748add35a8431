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

#ifndef DBNRL_SHAPLEY_HPP_
#define DBNRL_SHAPLEY_HPP_

#include <string>
#include <vector>

#include "dbnrl/model.hpp"

namespace dbnrl {

// Observed inputs at step h.
struct Observation {
  Vec state;   // s_h, size n
  Vec action;  // a_h, size m
};

struct AttributionReport {
  std::vector<std::string> input_names;  // n state inputs, then m actions
  std::vector<Vec> contributions;        // one n-vector per input
  Vec baseline;     // mu_{t+1}
  Vec conditioned;  // E[s_{t+1} | O_h]
  int draws_used = 0;
  int draws_skipped = 0;

  Vec total() const;
};

// Contributions of the inputs at step h to E[s_{t+1}] (1-based, h <= t < H).
AttributionReport shapley_closed_form(const ModelParams& w,
                                      const PolicyParams& policy,
                                      const Observation& obs, int h, int t);

// Subset enumeration; requires n + m <= 12.
AttributionReport shapley_oracle(const ModelParams& w,
                                 const PolicyParams& policy,
                                 const Observation& obs, int h, int t);

// Closed form averaged over valid draws.
AttributionReport expected_shapley(const std::vector<ModelParams>& draws,
                                   const PolicyParams& policy,
                                   const Observation& obs, int h, int t);

std::vector<std::string> default_input_names(int n, int m);

// Columns: input_name, output_coordinate, contribution, baseline,
// conditioned_value. One row per (input, output coordinate).
std::string attribution_csv(const AttributionReport& report,
                            const std::vector<std::string>& output_names);

}  // namespace dbnrl

#endif  // DBNRL_SHAPLEY_HPP_
