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

#ifndef DBNRL_DATASET_HPP_
#define DBNRL_DATASET_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dbnrl/kinetics.hpp"

namespace dbnrl {

// One simulated fed-batch run: observations at a fixed spacing together with
// the feed rate applied over the following interval (0 on the last row).
struct KineticRun {
  int replication_id = 0;
  std::vector<KineticState> states;
  std::vector<double> feed;
  bool stopped_at_capacity = false;
};

enum class FeedMode { kEpsilonGreedy, kFixedSchedule, kPolicy };

struct FeedSchedule {
  std::vector<double> mean;  // a_t^h
  std::vector<double> max;   // a-bar_t
};

using FeedPolicy = std::function<double(int step, const KineticState& state)>;

struct SimulationSetup {
  KineticParams params;
  OperatingConditions ops;
  KineticState initial{0.05, 0.0, 0.0, 30.0, 5.0, 0.6, 0.0};
  int horizon_steps = 36;
};

struct GenerationOptions {
  FeedMode mode = FeedMode::kEpsilonGreedy;
  FeedSchedule reference;               // required for epsilon-greedy
  std::vector<double> fixed_schedule;   // required for fixed schedule
  FeedPolicy policy;                    // required for policy mode
  double exploit_probability = 0.7;
};

struct Dataset {
  std::vector<KineticRun> runs;
  std::uint64_t seed = 0;
  double kappa = 0.0;
  std::string mode;
  // Branch bookkeeping for epsilon-greedy generation.
  long exploit_draws = 0;
  long explore_draws = 0;
};

// Initial-state draw: nominal plus N(0, (nominal/kappa)^2) per coordinate.
KineticState draw_initial_state(const KineticState& nominal,
                                const NoiseSpec& noise, Rng& rng);

// Simulates one run, choosing the feed from `feed_for_step`. Runs that exceed
// the volume cap stop early and are padded with the terminal state.
KineticRun simulate_run(const SimulationSetup& setup, const NoiseSpec& noise,
                        const KineticState& initial,
                        const std::function<double(int, const KineticState&,
                                                   Rng&)>& feed_for_step,
                        Rng& rng);

// R replications; replication i draws from its own stream derive_seed(seed, i).
Dataset generate_dataset(int replications, const GenerationOptions& options,
                         const SimulationSetup& setup, const NoiseSpec& noise,
                         std::uint64_t seed);

// Per-time mean and max of the recorded feed across replications.
FeedSchedule infer_reference_policy(const Dataset& data);

void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);
std::string dataset_csv(const Dataset& data);
Dataset parse_dataset_csv(const std::string& text);

}  // namespace dbnrl

#endif  // DBNRL_DATASET_HPP_
