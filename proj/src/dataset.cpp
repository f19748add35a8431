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

#include "dbnrl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace dbnrl {

namespace {

constexpr const char* kDatasetHeader =
    "replication_id,step_index,time_h,X_f,C,L,S,N,V,feed_rate";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

KineticState draw_initial_state(const KineticState& nominal,
                                const NoiseSpec& noise, Rng& rng) {
  if (noise.deterministic()) return nominal;
  auto x = nominal.values();
  for (double& v : x) {
    v = std::max(0.0, v + std::abs(v) / noise.kappa * standard_normal(rng));
  }
  KineticState s = nominal;
  s.set_values(x);
  if (s.V <= 0.0) s.V = nominal.V;
  return s;
}

KineticRun simulate_run(
    const SimulationSetup& setup, const NoiseSpec& noise,
    const KineticState& initial,
    const std::function<double(int, const KineticState&, Rng&)>& feed_for_step,
    Rng& rng) {
  KineticRun run;
  run.states.reserve(setup.horizon_steps);
  run.feed.reserve(setup.horizon_steps);
  KineticState s = initial;
  run.states.push_back(s);
  for (int step = 0; step + 1 < setup.horizon_steps; ++step) {
    if (run.stopped_at_capacity) {
      run.feed.push_back(0.0);
      KineticState pad = s;
      pad.t = initial.t + (step + 1) * setup.ops.obs_interval_h;
      run.states.push_back(pad);
      continue;
    }
    const double feed = std::max(0.0, feed_for_step(step, s, rng));
    run.feed.push_back(feed);
    s = step_fermentation(s, feed, setup.ops.obs_interval_h, setup.params,
                          noise, rng, setup.ops);
    run.states.push_back(s);
    if (s.V > setup.ops.capacity_L) run.stopped_at_capacity = true;
  }
  run.feed.push_back(0.0);
  return run;
}

Dataset generate_dataset(int replications, const GenerationOptions& options,
                         const SimulationSetup& setup, const NoiseSpec& noise,
                         std::uint64_t seed) {
  if (replications < 1) throw ConfigError("replication count must be >= 1");
  const auto steps = static_cast<std::size_t>(setup.horizon_steps);
  Dataset data;
  data.seed = seed;
  data.kappa = noise.kappa;

  double explore_cap = 0.0;
  switch (options.mode) {
    case FeedMode::kEpsilonGreedy:
      data.mode = "epsilon_greedy";
      if (options.reference.mean.size() + 1 < steps ||
          options.reference.max.size() + 1 < steps) {
        throw ConfigError("epsilon-greedy generation needs reference profiles");
      }
      explore_cap = *std::max_element(options.reference.max.begin(),
                                      options.reference.max.end());
      break;
    case FeedMode::kFixedSchedule:
      data.mode = "fixed_schedule";
      if (options.fixed_schedule.size() + 1 < steps) {
        throw ConfigError("fixed schedule shorter than the horizon");
      }
      break;
    case FeedMode::kPolicy:
      data.mode = "policy";
      if (!options.policy) throw ConfigError("policy mode needs a policy");
      break;
  }

  for (int i = 0; i < replications; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    const KineticState s1 = draw_initial_state(setup.initial, noise, rng);
    auto feed = [&](int t, const KineticState& s, Rng& g) -> double {
      const auto ti = static_cast<std::size_t>(t);
      switch (options.mode) {
        case FeedMode::kEpsilonGreedy: {
          if (uniform01(g) < options.exploit_probability) {
            ++data.exploit_draws;
            return options.reference.mean[ti] +
                   options.reference.max[ti] / 10.0 * standard_normal(g);
          }
          ++data.explore_draws;
          return explore_cap * uniform01(g);
        }
        case FeedMode::kFixedSchedule:
          return options.fixed_schedule[ti];
        case FeedMode::kPolicy:
          return options.policy(t, s);
      }
      return 0.0;
    };
    KineticRun run = simulate_run(setup, noise, s1, feed, rng);
    run.replication_id = i;
    data.runs.push_back(std::move(run));
  }
  return data;
}

FeedSchedule infer_reference_policy(const Dataset& data) {
  if (data.runs.empty()) throw ConfigError("empty dataset");
  const std::size_t steps = data.runs.front().feed.size();
  FeedSchedule schedule;
  schedule.mean.assign(steps, 0.0);
  schedule.max.assign(steps, -std::numeric_limits<double>::infinity());
  for (const auto& run : data.runs) {
    if (run.feed.size() != steps) {
      throw ConfigError("runs have inconsistent lengths");
    }
    for (std::size_t t = 0; t < steps; ++t) {
      schedule.mean[t] += run.feed[t];
      schedule.max[t] = std::max(schedule.max[t], run.feed[t]);
    }
  }
  for (double& m : schedule.mean) m /= static_cast<double>(data.runs.size());
  return schedule;
}

std::string dataset_csv(const Dataset& data) {
  std::ostringstream out;
  out << kDatasetHeader << "\n";
  for (const auto& run : data.runs) {
    for (std::size_t k = 0; k < run.states.size(); ++k) {
      const auto& s = run.states[k];
      out << run.replication_id << ',' << k << ',' << format_double(s.t);
      for (double v : s.values()) out << ',' << format_double(v);
      out << ',' << format_double(run.feed[k]) << "\n";
    }
  }
  return out.str();
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset " + path);
  out << dataset_csv(data);
  if (!out) throw IoError("write failed for " + path);
}

Dataset parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetHeader) {
    throw ConfigError("dataset CSV header mismatch: '" + line + "'");
  }
  std::map<int, KineticRun> runs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 10) {
      throw ConfigError("dataset CSV line " + std::to_string(lineno) +
                        ": expected 10 fields");
    }
    const int rep = std::stoi(fields[0]);
    const auto step = static_cast<std::size_t>(std::stoul(fields[1]));
    KineticRun& run = runs[rep];
    run.replication_id = rep;
    if (step != run.states.size()) {
      throw ConfigError("dataset CSV line " + std::to_string(lineno) +
                        ": step indices must be consecutive");
    }
    KineticState s;
    s.t = parse_double(fields[2]);
    std::array<double, 6> v{};
    for (std::size_t i = 0; i < 6; ++i) v[i] = parse_double(fields[3 + i]);
    s.set_values(v);
    run.states.push_back(s);
    run.feed.push_back(parse_double(fields[9]));
  }
  Dataset data;
  data.mode = "file";
  for (auto& [id, run] : runs) data.runs.push_back(std::move(run));
  if (data.runs.empty()) throw ConfigError("dataset CSV has no rows");
  return data;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset_csv(buf.str());
}

}  // namespace dbnrl
