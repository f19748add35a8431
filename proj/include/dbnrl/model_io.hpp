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

#ifndef DBNRL_MODEL_IO_HPP_
#define DBNRL_MODEL_IO_HPP_

#include <string>

#include "dbnrl/model.hpp"

namespace dbnrl {

// Versioned JSON documents. Numbers are written in shortest round-trip form,
// so save -> load reproduces every double exactly. Infinite box bounds are
// written as null.
inline constexpr const char* kModelSchema = "dbnrl.model/1";
inline constexpr const char* kPolicySchema = "dbnrl.policy/1";

std::string model_to_json(const ModelParams& w);
ModelParams model_from_json(const std::string& text);
void save_model(const ModelParams& w, const std::string& path);
ModelParams load_model(const std::string& path);

// The policy document also carries the reference schedule (mu_s, mu_a) the
// gains act around when the policy is deployed on the plant.
struct DeployablePolicy {
  PolicyParams params;
  std::vector<Vec> state_reference;   // H entries
  std::vector<Vec> action_reference;  // H entries
  // Deployed actions are clamped to [action_lower, action_upper].
  Vec action_lower;
  Vec action_upper;

  // Action at 1-based step t for network state s.
  Vec act(int t, const Vec& s) const;
};

std::string policy_to_json(const DeployablePolicy& policy);
DeployablePolicy policy_from_json(const std::string& text);
void save_policy(const DeployablePolicy& policy, const std::string& path);
DeployablePolicy load_policy(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dbnrl

#endif  // DBNRL_MODEL_IO_HPP_
