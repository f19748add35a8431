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

#include "dbnrl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "dbnrl/dbn.hpp"
#include "dbnrl/gradient.hpp"
#include "json.hpp"

namespace dbnrl {

using nlohmann::json;

Vec case_study_s1() {
  Vec s(5);
  s << 0.05, 0.0, 30.0, 5.0, 0.6;
  return s;
}

std::vector<std::string> network_state_names() {
  return {"X_f", "C", "S", "N", "V"};
}

namespace {

constexpr std::array<double, kLabBatchCount> kBatchScale = {
    1.2, 1.1, 1.05, 0.55, 1.15, 1.0, 1.25, 0.7};
constexpr std::array<double, kLabBatchCount> kBatchPeak = {
    24.0, 28.0, 32.0, 26.0, 30.0, 28.0, 24.0, 32.0};

}  // namespace

std::vector<double> lab_feed_profile(int batch, int steps) {
  if (batch < 0 || batch >= kLabBatchCount) {
    throw ConfigError("lab batch index out of range");
  }
  std::vector<double> feed(static_cast<std::size_t>(steps), 0.0);
  for (int t = 0; t + 1 < steps; ++t) {
    const double x = 4.0 * t / kBatchPeak[batch];
    const double shape = 0.15 + 0.85 * x * x * std::exp(2.0 * (1.0 - x));
    feed[t] = kReferenceFeedAmplitude * kBatchScale[batch] * shape;
  }
  return feed;
}

KineticRun deterministic_run(const SimulationSetup& setup,
                             const std::vector<double>& feed) {
  Rng rng(0);
  return simulate_run(
      setup, NoiseSpec::none(), setup.initial,
      [&](int t, const KineticState&, Rng&) {
        return feed.at(static_cast<std::size_t>(t));
      },
      rng);
}

Dataset simulate_lab_batches(const SimulationSetup& setup) {
  Dataset data;
  data.mode = "lab";
  data.kappa = std::numeric_limits<double>::infinity();
  for (int b = 0; b < kLabBatchCount; ++b) {
    KineticRun run =
        deterministic_run(setup, lab_feed_profile(b, setup.horizon_steps));
    run.replication_id = b;
    data.runs.push_back(std::move(run));
  }
  return data;
}

FeedSchedule human_schedule(const SimulationSetup& setup) {
  return infer_reference_policy(simulate_lab_batches(setup));
}

NoiseSpec case_noise(const KineticRun& reference, double kappa) {
  NoiseSpec noise;
  noise.kappa = kappa;
  for (const KineticState& s : reference.states) {
    noise.reference_profile.push_back(s.values());
  }
  return noise;
}

RewardSpec fermentation_reward(int H, const RewardCoefficients& coef) {
  RewardSpec r = RewardSpec::zeros(5, 1, H);
  for (int t = 0; t + 1 < H; ++t) r.b[t](0) = -coef.feed_cost;
  r.m[H - 1] = coef.terminal_offset;
  r.c[H - 1](1) = coef.titer_gain;
  r.m_c = coef.m_c;
  return r;
}

Box fermentation_box(int H) {
  Vec lower(5);
  Vec upper(5);
  lower << 0.0, 0.0, -0.1, -0.1, -0.7;
  upper << 0.3, 0.3, 0.1, 0.02, 0.5;
  return state_row_box(5, 1, H, lower, upper);
}

ModelParams fermentation_anchor(const SimulationSetup& setup,
                                const KineticRun& reference) {
  // One noise-free observation interval of the simulator, with lipid held
  // on the reference run.
  const NoiseSpec quiet;
  const TransitionMap step = [&](int t, const Vec& s, const Vec& a) {
    KineticState k = reference.states.at(static_cast<std::size_t>(t - 1));
    k.X_f = s(0);
    k.C = s(1);
    k.S = s(2);
    k.N = s(3);
    k.V = s(4);
    Rng unused(0);
    const KineticState next =
        step_fermentation(k, std::max(0.0, a(0)), setup.ops.obs_interval_h,
                          setup.params, quiet, unused, setup.ops);
    return network_state(next);
  };
  std::vector<Vec> states;
  std::vector<Vec> actions;
  for (std::size_t t = 0; t < reference.states.size(); ++t) {
    states.push_back(network_state(reference.states[t]));
    actions.push_back(Vec::Constant(1, reference.feed[t]));
  }
  return linearize_transition(step, states, actions);
}

PriorHyper anchor_priors(const ModelParams& anchor,
                         const std::vector<Vec>& anchor_states) {
  PriorHyper p = PriorHyper::centered_at(anchor);
  if (static_cast<int>(anchor_states.size()) != anchor.H) {
    throw ConfigError("anchor states do not cover the horizon");
  }
  p.mu_mean = anchor_states;
  return p;
}

DeployablePolicy make_deployable(const PolicyParams& params,
                                 const std::vector<ModelParams>& draws,
                                 const Vec& action_lower,
                                 const Vec& action_upper) {
  DeployablePolicy out;
  out.params = params;
  out.action_lower = action_lower;
  out.action_upper = action_upper;
  out.state_reference.assign(params.H, Vec::Zero(params.n));
  out.action_reference.assign(params.H, Vec::Zero(params.m));
  int used = 0;
  for (const ModelParams& w : draws) {
    if (!validate_model(w)) continue;
    for (int t = 0; t < params.H; ++t) {
      out.state_reference[t] += w.mu_s[t];
      out.action_reference[t] += w.mu_a[t];
    }
    ++used;
  }
  if (used == 0) throw NumericError("no valid posterior draw to deploy");
  for (int t = 0; t < params.H; ++t) {
    out.state_reference[t] /= used;
    out.action_reference[t] /= used;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown config key '" + it.key() + "' in " + where);
    }
  }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

double read_kappa(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") {
      return std::numeric_limits<double>::infinity();
    }
    return parse_double(s);
  }
  return v.get<double>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  ExperimentConfig c;
  try {
    reject_unknown(doc,
                   {"scenario", "replications", "kappa", "seed", "gibbs",
                    "optimizer", "reward", "evaluation", "benchmark",
                    "shapley", "kinetics", "timing"},
                   "config");
    read_if(doc, "scenario", c.scenario);
    read_if(doc, "replications", c.replications);
    if (doc.contains("kappa")) c.kappa = read_kappa(doc.at("kappa"));
    read_if(doc, "seed", c.seed);
    read_if(doc, "kinetics", c.kinetics_path);
    read_if(doc, "timing", c.timing);
    if (doc.contains("gibbs")) {
      const json& g = doc.at("gibbs");
      reject_unknown(g, {"draws", "burn_in", "thinning"}, "gibbs");
      read_if(g, "draws", c.gibbs.draws);
      read_if(g, "burn_in", c.gibbs.burn_in);
      read_if(g, "thinning", c.gibbs.thinning);
    }
    if (doc.contains("optimizer")) {
      const json& o = doc.at("optimizer");
      reject_unknown(o,
                     {"iterations", "draws", "eta0", "exponent",
                      "window_fraction", "fresh_draws", "standardized_gains"},
                     "optimizer");
      read_if(o, "iterations", c.optimizer.iterations);
      read_if(o, "draws", c.optimizer.draws);
      read_if(o, "eta0", c.optimizer.eta0);
      read_if(o, "exponent", c.optimizer.exponent);
      read_if(o, "window_fraction", c.optimizer.window_fraction);
      read_if(o, "fresh_draws", c.fresh_draws);
      read_if(o, "standardized_gains", c.standardized_gains);
    }
    if (doc.contains("reward")) {
      const json& r = doc.at("reward");
      reject_unknown(r,
                     {"feed_cost", "titer_gain", "terminal_offset",
                      "purification_cost", "log_product_gain",
                      "log_impurity_gain", "m_c"},
                     "reward");
      read_if(r, "feed_cost", c.reward.feed_cost);
      read_if(r, "titer_gain", c.reward.titer_gain);
      read_if(r, "terminal_offset", c.reward.terminal_offset);
      read_if(r, "purification_cost", c.reward.purification_cost);
      read_if(r, "log_product_gain", c.reward.log_product_gain);
      read_if(r, "log_impurity_gain", c.reward.log_impurity_gain);
      read_if(r, "m_c", c.reward.m_c);
    }
    if (doc.contains("evaluation")) {
      const json& e = doc.at("evaluation");
      reject_unknown(e, {"macro_replications", "rollouts"}, "evaluation");
      read_if(e, "macro_replications", c.macro_replications);
      read_if(e, "rollouts", c.rollouts);
    }
    if (doc.contains("benchmark")) {
      const json& b = doc.at("benchmark");
      reject_unknown(b, {"horizons", "repeats"}, "benchmark");
      read_if(b, "horizons", c.benchmark_horizons);
      read_if(b, "repeats", c.benchmark_repeats);
    }
    if (doc.contains("shapley")) {
      const json& s = doc.at("shapley");
      reject_unknown(s, {"h", "t"}, "shapley");
      read_if(s, "h", c.shapley_h);
      read_if(s, "t", c.shapley_t);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_json(read_text_file(path));
}

std::string ExperimentConfig::to_json() const {
  json doc;
  doc["scenario"] = scenario;
  doc["replications"] = replications;
  if (std::isinf(kappa)) {
    doc["kappa"] = "inf";
  } else {
    doc["kappa"] = kappa;
  }
  doc["seed"] = seed;
  doc["gibbs"] = {{"draws", gibbs.draws},
                  {"burn_in", gibbs.burn_in},
                  {"thinning", gibbs.thinning}};
  doc["optimizer"] = {{"iterations", optimizer.iterations},
                      {"draws", optimizer.draws},
                      {"eta0", optimizer.eta0},
                      {"exponent", optimizer.exponent},
                      {"window_fraction", optimizer.window_fraction},
                      {"fresh_draws", fresh_draws},
                      {"standardized_gains", standardized_gains}};
  doc["reward"] = {{"feed_cost", reward.feed_cost},
                   {"titer_gain", reward.titer_gain},
                   {"terminal_offset", reward.terminal_offset},
                   {"purification_cost", reward.purification_cost},
                   {"log_product_gain", reward.log_product_gain},
                   {"log_impurity_gain", reward.log_impurity_gain},
                   {"m_c", reward.m_c}};
  doc["evaluation"] = {{"macro_replications", macro_replications},
                       {"rollouts", rollouts}};
  doc["benchmark"] = {{"horizons", benchmark_horizons},
                      {"repeats", benchmark_repeats}};
  doc["shapley"] = {{"h", shapley_h}, {"t", shapley_t}};
  doc["kinetics"] = kinetics_path;
  doc["timing"] = timing;
  return doc.dump(1) + "\n";
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : to_json()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

void ExperimentConfig::validate() const {
  if (scenario != "fermentation" && scenario != "integrated") {
    throw ConfigError("scenario must be 'fermentation' or 'integrated'");
  }
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (!(kappa > 0)) throw ConfigError("kappa must be positive or inf");
  if (gibbs.draws < 1 || gibbs.burn_in < 0 || gibbs.thinning < 1) {
    throw ConfigError("invalid Gibbs settings");
  }
  optimizer.validate();
  if (macro_replications < 1 || rollouts < 1) {
    throw ConfigError("evaluation needs at least one macro-replication and rollout");
  }
  if (benchmark_repeats < 2) throw ConfigError("benchmark repeats must be >= 2");
  for (int h : benchmark_horizons) {
    if (h < 2) throw ConfigError("benchmark horizons must be >= 2");
  }
}

SimulationSetup ExperimentConfig::setup() const {
  SimulationSetup s;
  if (!kinetics_path.empty()) s.params = KineticParams::load(kinetics_path);
  return s;
}

// ---------------------------------------------------------------------------

Reference build_reference(const ExperimentConfig& config) {
  Reference ref;
  ref.setup = config.setup();
  ref.human = human_schedule(ref.setup);
  ref.mean_run = deterministic_run(ref.setup, ref.human.mean);
  ref.noise = case_noise(ref.mean_run, config.kappa);
  ref.anchor = fermentation_anchor(ref.setup, ref.mean_run);
  return ref;
}

Dataset simulate_dataset(const ExperimentConfig& config, const Reference& ref,
                         std::uint64_t seed) {
  GenerationOptions options;
  options.mode = FeedMode::kEpsilonGreedy;
  options.reference = ref.human;
  return generate_dataset(config.replications, options, ref.setup, ref.noise,
                          seed);
}

namespace {

std::vector<Vec> anchor_network_states(const KineticRun& run) {
  std::vector<Vec> out;
  for (const KineticState& s : run.states) out.push_back(network_state(s));
  return out;
}

double max_feed(const FeedSchedule& human) {
  return *std::max_element(human.max.begin(), human.max.end());
}

}  // namespace

GibbsDrawSource FitResult::continuation(const TrajectoryData& data,
                                        int thinning) const {
  return GibbsDrawSource(scaling.apply(data), scaling.apply(priors),
                         chain_state, thinning, scaling);
}

FitResult fit_scaled(const TrajectoryData& data, const ModelParams& structure,
                     const PriorHyper& priors, const GibbsSettings& settings,
                     std::uint64_t seed) {
  FitResult fit;
  fit.structure = structure;
  fit.priors = priors;
  fit.scaling = Scaling::from_data(data);
  fit.draws = sample_posterior_scaled(data, structure, priors, fit.scaling,
                                      settings, seed, &fit.chain_state);
  return fit;
}

FitResult fit_fermentation(const ExperimentConfig& config,
                           const Reference& ref, const Dataset& data,
                           std::uint64_t seed) {
  const TrajectoryData td = from_dataset(data);
  return fit_scaled(
      td, ModelParams::zeros(td.n, td.m, td.H),
      anchor_priors(ref.anchor, anchor_network_states(ref.mean_run)),
      config.gibbs, seed);
}

OptimizationResult optimize_fermentation(const ExperimentConfig& config,
                                         const Reference& ref,
                                         const FitResult& fit,
                                         const Dataset& data,
                                         std::uint64_t seed) {
  const int H = fit.structure.H;
  PolicyParams initial = PolicyParams::zeros(5, 1, H);
  initial.box = fermentation_box(H);
  OptimizerConfig oc = config.optimizer;
  oc.seed = seed;
  oc.record_time = config.timing;
  const RewardSpec reward = fermentation_reward(H, config.reward);
  const Vec scale = config.standardized_gains
                        ? gain_scale(fit.scaling, 5, 1, H)
                        : Vec();
  (void)ref;
  if (config.fresh_draws) {
    GibbsDrawSource source =
        fit.continuation(from_dataset(data), config.gibbs.thinning);
    return dbn_rl_optimize(source, initial, reward, case_study_s1(), oc, scale);
  }
  FixedDrawPool pool(fit.draws.draws);
  return dbn_rl_optimize(pool, initial, reward, case_study_s1(), oc, scale);
}

RolloutOutcome rollout_fermentation(const Reference& ref,
                                    const RewardCoefficients& coef,
                                    const StepPolicy& policy,
                                    std::uint64_t seed) {
  Rng rng(seed);
  const KineticState s1 = draw_initial_state(ref.setup.initial, ref.noise, rng);
  const KineticRun run = simulate_run(
      ref.setup, ref.noise, s1,
      [&](int t, const KineticState& s, Rng&) { return policy(t, s); }, rng);
  RolloutOutcome out;
  double fed = 0.0;
  for (std::size_t t = 0; t + 1 < run.feed.size(); ++t) fed += run.feed[t];
  const KineticState& last = run.states.back();
  out.titer = last.C;
  out.yield = last.C * last.V;
  out.reward = -coef.feed_cost * fed + coef.terminal_offset +
               coef.titer_gain * last.C;
  out.actions = run.feed;
  return out;
}

StepPolicy policy_feed(const DeployablePolicy& policy) {
  return [policy](int step, const KineticState& s) {
    return policy.act(step + 1, network_state(s))(0);
  };
}

StepPolicy schedule_feed(const std::vector<double>& schedule) {
  return [schedule](int step, const KineticState&) {
    return schedule.at(static_cast<std::size_t>(step));
  };
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

const PolicyRow& EvaluationReport::row(const std::string& policy) const {
  for (const PolicyRow& r : rows) {
    if (r.policy == policy) return r;
  }
  throw ConfigError("no evaluation row for policy " + policy);
}

MetricSummary EvaluationReport::metric(const std::string& policy,
                                       const std::string& name) const {
  const PolicyRow& r = row(policy);
  for (std::size_t i = 0; i < r.metrics.size(); ++i) {
    if (r.metrics[i] == name) return r.values[i];
  }
  throw ConfigError("no metric " + name + " for policy " + policy);
}

std::string evaluation_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "policy,metric,mean,se,macro_replications,failed\n";
  for (const PolicyRow& r : report.rows) {
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
      out << r.policy << ',' << r.metrics[i] << ','
          << format_double(r.values[i].mean) << ','
          << format_double(r.values[i].se) << ','
          << report.macro_replications << ',' << report.failed << '\n';
    }
  }
  return out.str();
}

namespace {

// Collects per-macro means for one policy.
struct Collector {
  std::vector<std::string> metrics;
  std::vector<std::vector<double>> per_macro;

  explicit Collector(std::vector<std::string> names)
      : metrics(std::move(names)), per_macro(metrics.size()) {}

  void add(const std::vector<double>& means) {
    for (std::size_t i = 0; i < means.size(); ++i) {
      per_macro[i].push_back(means[i]);
    }
  }

  PolicyRow finish(const std::string& name) const {
    PolicyRow row;
    row.policy = name;
    row.metrics = metrics;
    row.per_macro = per_macro;
    for (const auto& v : per_macro) row.values.push_back(summarize(v));
    return row;
  }
};

std::vector<double> mean_outcome(const std::vector<RolloutOutcome>& outs) {
  std::vector<double> m(3, 0.0);
  for (const RolloutOutcome& o : outs) {
    m[0] += o.reward;
    m[1] += o.titer;
    m[2] += o.yield;
  }
  for (double& x : m) x /= static_cast<double>(outs.size());
  return m;
}

std::vector<RolloutOutcome> rollouts(const ExperimentConfig& config,
                                     const Reference& ref,
                                     const StepPolicy& policy,
                                     std::uint64_t base) {
  std::vector<RolloutOutcome> outs;
  for (int i = 0; i < config.rollouts; ++i) {
    outs.push_back(rollout_fermentation(ref, config.reward, policy,
                                        derive_seed(base, 100 + i)));
  }
  return outs;
}

PolicyRow paired_row(const std::string& name, const PolicyRow& a,
                     const PolicyRow& b) {
  PolicyRow row;
  row.policy = name;
  row.metrics = {"reward"};
  std::vector<double> diff;
  for (std::size_t j = 0; j < a.per_macro[0].size(); ++j) {
    diff.push_back(a.per_macro[0][j] - b.per_macro[0][j]);
  }
  row.per_macro = {diff};
  row.values = {summarize(diff)};
  return row;
}

}  // namespace

EvaluationReport evaluate_pipeline(const ExperimentConfig& config) {
  if (config.scenario == "integrated") return run_integrated(config);
  const Reference ref = build_reference(config);
  const int H = ref.setup.horizon_steps;
  const std::vector<std::string> metrics = {"reward", "titer", "yield"};
  Collector trained(metrics), initial(metrics), human(metrics);
  const Vec lo = Vec::Zero(1);
  const Vec hi = Vec::Constant(1, max_feed(ref.human));
  for (int j = 0; j < config.macro_replications; ++j) {
    const std::uint64_t base = derive_seed(config.seed, j);
    const Dataset data = simulate_dataset(config, ref, derive_seed(base, 1));
    const FitResult fit = fit_fermentation(config, ref, data, derive_seed(base, 2));
    const OptimizationResult opt =
        optimize_fermentation(config, ref, fit, data, derive_seed(base, 3));
    PolicyParams zero = PolicyParams::zeros(5, 1, H);
    zero.box = fermentation_box(H);
    const DeployablePolicy learned =
        make_deployable(opt.policy, fit.draws.draws, lo, hi);
    const DeployablePolicy start =
        make_deployable(zero, fit.draws.draws, lo, hi);
    trained.add(mean_outcome(rollouts(config, ref, policy_feed(learned), base)));
    initial.add(mean_outcome(rollouts(config, ref, policy_feed(start), base)));
    human.add(mean_outcome(
        rollouts(config, ref, schedule_feed(ref.human.mean), base)));
  }
  EvaluationReport report;
  report.macro_replications = config.macro_replications;
  report.rows.push_back(trained.finish("dbn-rl"));
  report.rows.push_back(initial.finish("initial"));
  report.rows.push_back(human.finish("reference"));
  report.rows.push_back(
      paired_row("dbn-rl-minus-initial", report.rows[0], report.rows[1]));
  return report;
}

EvaluationReport evaluate_policies(const ExperimentConfig& config,
                                   const std::vector<DeployablePolicy>& policies,
                                   const std::vector<std::string>& names) {
  if (policies.size() != names.size()) {
    throw ConfigError("policy names do not match policies");
  }
  const Reference ref = build_reference(config);
  const std::vector<std::string> metrics = {"reward", "titer", "yield"};
  std::vector<Collector> cols(policies.size(), Collector(metrics));
  Collector human(metrics);
  for (const DeployablePolicy& p : policies) {
    if (p.params.n != 5 || p.params.m != 1 ||
        p.params.H != ref.setup.horizon_steps) {
      throw ConfigError("policy dimensions do not match the fermentation scenario");
    }
  }
  for (int j = 0; j < config.macro_replications; ++j) {
    const std::uint64_t base = derive_seed(config.seed, j);
    for (std::size_t p = 0; p < policies.size(); ++p) {
      cols[p].add(mean_outcome(rollouts(config, ref, policy_feed(policies[p]), base)));
    }
    human.add(mean_outcome(
        rollouts(config, ref, schedule_feed(ref.human.mean), base)));
  }
  EvaluationReport report;
  report.macro_replications = config.macro_replications;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    report.rows.push_back(cols[p].finish(names[p]));
  }
  report.rows.push_back(human.finish("reference"));
  return report;
}

std::vector<ProfileRow> feeding_profile(const ExperimentConfig& config,
                                        const DeployablePolicy& policy,
                                        int rollout_count) {
  if (rollout_count < 1) throw ConfigError("profiles need at least one rollout");
  const Reference ref = build_reference(config);
  const int H = ref.setup.horizon_steps;
  std::vector<std::vector<double>> actions(static_cast<std::size_t>(H));
  const StepPolicy feed = policy_feed(policy);
  for (int i = 0; i < rollout_count; ++i) {
    const RolloutOutcome o = rollout_fermentation(
        ref, config.reward, feed, derive_seed(config.seed, 100 + i));
    for (int t = 0; t < H; ++t) actions[t].push_back(o.actions.at(t));
  }
  std::vector<ProfileRow> rows;
  for (int t = 0; t < H; ++t) {
    const MetricSummary s = summarize(actions[t]);
    rows.push_back({ref.setup.ops.obs_interval_h * t, s.mean,
                    s.mean - 1.96 * s.se, s.mean + 1.96 * s.se});
  }
  return rows;
}

std::string profiles_csv(const std::vector<ProfileRow>& rows) {
  std::ostringstream out;
  out << "time_h,mean_action,ci_low,ci_high\n";
  for (const ProfileRow& r : rows) {
    out << format_double(r.time_h) << ',' << format_double(r.mean) << ','
        << format_double(r.ci_low) << ',' << format_double(r.ci_high) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

ModelParams random_model(int n, int m, int H, Rng& rng) {
  ModelParams w = ModelParams::zeros(n, m, H);
  const double scale = 0.6 / std::sqrt(static_cast<double>(n));
  for (int t = 0; t < H; ++t) {
    for (int k = 0; k < n; ++k) {
      w.mu_s[t](k) = standard_normal(rng);
      w.v[t](k) = 0.5 + uniform01(rng);
    }
    for (int k = 0; k < m; ++k) {
      w.mu_a[t](k) = standard_normal(rng);
      w.sigma[t](k) = 0.5 + uniform01(rng);
    }
    if (t + 1 < H) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) w.beta_s[t](i, j) = scale * standard_normal(rng);
      }
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) w.beta_a[t](i, j) = 0.5 * standard_normal(rng);
      }
    }
  }
  return w;
}

PolicyParams random_policy(int n, int m, int H, Rng& rng) {
  PolicyParams p = PolicyParams::zeros(n, m, H);
  for (Mat& g : p.vartheta) {
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      g.data()[i] = 0.3 * standard_normal(rng);
    }
  }
  return p;
}

RewardSpec random_reward(int n, int m, int H, Rng& rng) {
  RewardSpec r = RewardSpec::zeros(n, m, H);
  for (int t = 0; t < H; ++t) {
    r.m[t] = standard_normal(rng);
    for (int k = 0; k < n; ++k) r.c[t](k) = standard_normal(rng);
    if (t + 1 < H) {
      for (int k = 0; k < m; ++k) r.b[t](k) = standard_normal(rng);
    }
  }
  return r;
}

std::vector<BenchmarkRow> benchmark_gradients(const std::vector<int>& horizons,
                                              int n, int m, int repeats,
                                              std::uint64_t seed) {
  if (repeats < 2) throw ConfigError("benchmark needs at least two repeats");
  std::vector<BenchmarkRow> rows;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    const int H = horizons[i];
    Rng rng = make_rng(seed, i);
    const ModelParams w = random_model(n, m, H, rng);
    const PolicyParams p = random_policy(n, m, H, rng);
    const RewardSpec r = random_reward(n, m, H, rng);
    Vec s1(n);
    for (int k = 0; k < n; ++k) s1(k) = standard_normal(rng);
    for (const std::string method : {"nbp", "brute_force"}) {
      std::vector<double> samples;
      double sink = 0.0;
      for (int rep = 0; rep < repeats; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        const Vec g = method == "nbp" ? nbp_gradient(w, p, r, s1)
                                      : brute_force_gradient(w, p, r, s1);
        samples.push_back(std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count());
        sink += g.sum();
      }
      if (!std::isfinite(sink)) throw NumericError("benchmark gradient diverged");
      const MetricSummary s = summarize(samples);
      rows.push_back({H, n, m, method, s.mean, s.se});
    }
  }
  return rows;
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
  std::ostringstream out;
  out << "H,n,m,method,mean_seconds,stderr_seconds\n";
  for (const BenchmarkRow& r : rows) {
    out << r.H << ',' << r.n << ',' << r.m << ',' << r.method << ','
        << format_double(r.mean_seconds) << ','
        << format_double(r.stderr_seconds) << '\n';
  }
  return out.str();
}

}  // namespace dbnrl
