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

#include <cmath>

#include "dbnrl/dbn.hpp"
#include "dbnrl/experiment.hpp"
#include "dbnrl/gradient.hpp"

namespace dbnrl {

namespace {

constexpr double kMinSaturation = 20.0;
constexpr double kMaxSaturation = 100.0;
constexpr double kGainBound = 1.0;

Vec purification_vector(const PurificationState& p) {
  Vec v(2);
  v << p.logP, p.logI;
  return v;
}

PurificationState purification_state(const Vec& v) { return {v(0), v(1)}; }

PrecipitationStage stage_at(int step) {
  return step == 0 ? PrecipitationStage::kP1 : PrecipitationStage::kP2;
}

// Sensitivity of the expected purification reward to its initial state.
Vec initial_state_sensitivity(const ModelParams& w, const PolicyParams& p,
                              const RewardSpec& r) {
  Vec q = Vec::Zero(w.n);
  Mat path = Mat::Identity(w.n, w.n);
  for (int t = 1; t <= w.H; ++t) {
    const auto i = static_cast<std::size_t>(t - 1);
    if (t > 1) path = closed_loop_matrix(w, p, t - 1) * path;
    Vec u = r.c[i];
    if (t < w.H) u += p.vartheta[i] * r.b[i];
    q += path.transpose() * u;
  }
  return q;
}

struct BridgedStart {
  bool ok = false;
  Vec s1;
  Mat jacobian;
};

BridgedStart bridge_start(const IntegratedModel& w, const IntegratedPolicy& p,
                          const Vec& s1) {
  BridgedStart out;
  const Vec& mean_end = w.fermentation.mu_s.back();
  if (!(mean_end(1) > 0.0) ||
      !(0.01 * mean_end(0) + mean_end(2) + mean_end(3) > 0.0)) {
    return out;
  }
  const Bridge bridge = linearize_centrifuge(mean_end);
  const int H = w.fermentation.H;
  const Vec dev =
      pathway_product(w.fermentation, p.fermentation, 1, H - 1) *
      (s1 - w.fermentation.mu_s[0]);
  // Levels come from the purification block's own start mean; the bridge
  // carries only the predicted deviation of the fermentation end state.
  out.s1 = w.purification.mu_s[0] + bridge.jacobian * dev;
  out.jacobian = bridge.jacobian;
  out.ok = out.s1.allFinite();
  return out;
}

}  // namespace

Bridge linearize_centrifuge(const Vec& x) {
  const double product = x(1);
  const double impurity = kDebrisSeparation * x(0) + x(2) + x(3);
  if (!(product > 0.0) || !(impurity > 0.0)) {
    throw NumericError("centrifuge linearization needs positive P and I");
  }
  Bridge b;
  b.offset = Vec(2);
  b.offset << std::log(product), std::log(impurity);
  b.jacobian = Mat::Zero(2, 5);
  b.jacobian(0, 1) = 1.0 / product;
  b.jacobian(1, 0) = kDebrisSeparation / impurity;
  b.jacobian(1, 2) = 1.0 / impurity;
  b.jacobian(1, 3) = 1.0 / impurity;
  return b;
}

RewardSpec integrated_fermentation_reward(int H, const RewardCoefficients& c) {
  RewardSpec r = RewardSpec::zeros(5, 1, H);
  for (int t = 0; t + 1 < H; ++t) r.b[t](0) = -c.feed_cost;
  r.m_c = c.m_c;
  return r;
}

RewardSpec purification_reward(const RewardCoefficients& c) {
  RewardSpec r = RewardSpec::zeros(2, 1, kPurificationSteps);
  for (int t = 0; t + 1 < kPurificationSteps; ++t) {
    r.b[t](0) = -c.purification_cost;
  }
  r.m[kPurificationSteps - 1] = c.terminal_offset;
  r.c[kPurificationSteps - 1] << c.log_product_gain, -c.log_impurity_gain;
  r.m_c = c.m_c;
  return r;
}

Vec purification_reference() {
  Vec a(2);
  a << std::log(40.0), std::log(70.0);
  return a;
}

double integrated_value(const IntegratedModel& w, const IntegratedPolicy& p,
                        const RewardSpec& ferm_reward,
                        const RewardSpec& pur_reward, const Vec& s1) {
  const double invalid =
      ferm_reward.m_c * (w.fermentation.H + w.purification.H);
  if (!validate_model(w.fermentation) || !validate_model(w.purification)) {
    return invalid;
  }
  const BridgedStart start = bridge_start(w, p, s1);
  if (!start.ok) return invalid;
  return policy_value(w.fermentation, p.fermentation, ferm_reward, s1) +
         policy_value(w.purification, p.purification, pur_reward, start.s1);
}

Vec integrated_gradient(const IntegratedModel& w, const IntegratedPolicy& p,
                        const RewardSpec& ferm_reward,
                        const RewardSpec& pur_reward, const Vec& s1) {
  const Eigen::Index nf = p.fermentation.size();
  const Eigen::Index np = p.purification.size();
  Vec grad = Vec::Zero(nf + np);
  if (!validate_model(w.fermentation) || !validate_model(w.purification)) {
    return grad;
  }
  const BridgedStart start = bridge_start(w, p, s1);
  if (!start.ok) return grad;
  // The purification value is affine in the bridged start, so it acts on the
  // fermentation block as an extra terminal state reward.
  RewardSpec augmented = ferm_reward;
  augmented.c.back() +=
      start.jacobian.transpose() *
      initial_state_sensitivity(w.purification, p.purification, pur_reward);
  grad.head(nf) = nbp_gradient(w.fermentation, p.fermentation, augmented, s1);
  grad.tail(np) =
      nbp_gradient(w.purification, p.purification, pur_reward, start.s1);
  return grad;
}

IntegratedRollout rollout_integrated(const Reference& ref,
                                     const RewardCoefficients& coef,
                                     const StepPolicy& feed,
                                     const PurificationPolicy& purify,
                                     std::uint64_t seed) {
  IntegratedRollout out;
  Rng rng(seed);
  const KineticState s1 = draw_initial_state(ref.setup.initial, ref.noise, rng);
  out.fermentation = simulate_run(
      ref.setup, ref.noise, s1,
      [&](int t, const KineticState& s, Rng&) { return feed(t, s); }, rng);
  const KineticState& last = out.fermentation.states.back();
  out.titer = last.C;
  PurificationState p;
  try {
    p = centrifuge(last);
  } catch (const DegenerateBatchError&) {
    out.failed = true;
    return out;
  }
  NoiseSpec pur_noise;
  pur_noise.kappa = ref.noise.kappa;
  out.purification_states.push_back(purification_vector(p));
  double cost = 0.0;
  for (int step = 0; step + 1 < kPurificationSteps; ++step) {
    const double a = std::clamp(purify(step, out.purification_states.back()),
                                std::log(kMinSaturation),
                                std::log(kMaxSaturation));
    out.log_saturation.push_back(a);
    cost += a;
    p = step_purification(p, a, stage_at(step), pur_noise, rng);
    out.purification_states.push_back(purification_vector(p));
  }
  double fed = 0.0;
  for (std::size_t t = 0; t + 1 < out.fermentation.feed.size(); ++t) {
    fed += out.fermentation.feed[t];
  }
  out.yield = std::exp(p.logP);
  out.purity = purity(p);
  out.reward = -coef.feed_cost * fed - coef.purification_cost * cost +
               coef.terminal_offset + coef.log_product_gain * p.logP -
               coef.log_impurity_gain * p.logI;
  return out;
}

namespace {

struct IntegratedData {
  Dataset fermentation;
  TrajectoryData purification;
};

IntegratedData simulate_integrated_data(const ExperimentConfig& config,
                                        const Reference& ref,
                                        std::uint64_t seed) {
  IntegratedData out;
  out.fermentation = simulate_dataset(config, ref, derive_seed(seed, 0));
  const Vec reference = purification_reference();
  const double lo = std::log(30.0);
  const double hi = std::log(80.0);
  NoiseSpec pur_noise;
  pur_noise.kappa = ref.noise.kappa;
  std::vector<Trajectory> runs;
  for (const KineticRun& run : out.fermentation.runs) {
    Rng rng = make_rng(derive_seed(seed, 1), run.replication_id);
    PurificationState p;
    try {
      p = centrifuge(run.states.back());
    } catch (const DegenerateBatchError&) {
      continue;
    }
    Trajectory tr;
    tr.replication_id = run.replication_id;
    tr.states.push_back(purification_vector(p));
    for (int step = 0; step + 1 < kPurificationSteps; ++step) {
      double a = 0.0;
      if (uniform01(rng) < 0.7) {
        a = reference(step) + 0.05 * standard_normal(rng);
      } else {
        a = lo + (hi - lo) * uniform01(rng);
      }
      a = std::min(a, std::log(kMaxSaturation));
      tr.actions.push_back(Vec::Constant(1, a));
      p = step_purification(p, a, stage_at(step), pur_noise, rng);
      tr.states.push_back(purification_vector(p));
    }
    runs.push_back(std::move(tr));
  }
  if (runs.empty()) throw NumericError("every batch degenerated at the centrifuge");
  out.purification = from_trajectories(runs, 2, 1, kPurificationSteps);
  return out;
}

ModelParams purification_anchor(const Reference& ref, std::vector<Vec>* states) {
  const Vec reference = purification_reference();
  const VectorField field = [](int t, const Vec& s, const Vec& a) {
    NoiseSpec none;
    Rng unused(0);
    const PurificationState next = step_purification(
        purification_state(s), a(0), stage_at(t - 1), none, unused);
    return Vec(purification_vector(next) - s);
  };
  states->clear();
  states->push_back(purification_vector(centrifuge(ref.mean_run.states.back())));
  std::vector<Vec> actions;
  for (int step = 0; step + 1 < kPurificationSteps; ++step) {
    actions.push_back(Vec::Constant(1, reference(step)));
    states->push_back(states->back() + field(step + 1, states->back(), actions.back()));
  }
  return linearize_ode(field, *states, actions, 1.0);
}

Box purification_box() {
  const Eigen::Index size = 2 * (kPurificationSteps - 1);
  return {Vec::Constant(size, -kGainBound), Vec::Constant(size, kGainBound)};
}

Box concat(const Box& a, const Box& b) {
  Box out;
  out.lower.resize(a.lower.size() + b.lower.size());
  out.upper.resize(out.lower.size());
  out.lower << a.lower, b.lower;
  out.upper << a.upper, b.upper;
  return out;
}

}  // namespace

EvaluationReport run_integrated(const ExperimentConfig& config) {
  const Reference ref = build_reference(config);
  const int H = ref.setup.horizon_steps;
  const RewardSpec ferm_reward = integrated_fermentation_reward(H, config.reward);
  const RewardSpec pur_reward = purification_reward(config.reward);
  std::vector<Vec> pur_anchor_states;
  const ModelParams pur_anchor = purification_anchor(ref, &pur_anchor_states);
  const PriorHyper pur_priors = anchor_priors(pur_anchor, pur_anchor_states);
  const double max_f = *std::max_element(ref.human.max.begin(), ref.human.max.end());
  const Vec feed_lo = Vec::Zero(1);
  const Vec feed_hi = Vec::Constant(1, max_f);
  const Vec sat_lo = Vec::Constant(1, std::log(kMinSaturation));
  const Vec sat_hi = Vec::Constant(1, std::log(kMaxSaturation));
  const Vec pur_ref = purification_reference();

  const std::vector<std::string> metrics = {"reward", "titer", "yield", "purity"};
  struct Acc {
    std::vector<std::vector<double>> per_macro =
        std::vector<std::vector<double>>(4);
  };
  Acc trained, initial, human;
  int failed = 0;

  for (int j = 0; j < config.macro_replications; ++j) {
    const std::uint64_t base = derive_seed(config.seed, j);
    const IntegratedData data = simulate_integrated_data(config, ref, derive_seed(base, 1));
    const FitResult ferm_fit =
        fit_fermentation(config, ref, data.fermentation, derive_seed(base, 2));
    const ModelParams pur_structure = ModelParams::zeros(2, 1, kPurificationSteps);
    const FitResult pur_fit =
        fit_scaled(data.purification, pur_structure, pur_priors, config.gibbs,
                   derive_seed(base, 4));
    const PosteriorDraws& pur_draws = pur_fit.draws;

    IntegratedPolicy policy{PolicyParams::zeros(5, 1, H),
                            PolicyParams::zeros(2, 1, kPurificationSteps)};
    policy.fermentation.box = fermentation_box(H);
    policy.purification.box = purification_box();
    const Eigen::Index nf = policy.fermentation.size();
    const Box box = concat(policy.fermentation.box, policy.purification.box);

    std::unique_ptr<DrawSource> ferm_source;
    std::unique_ptr<DrawSource> pur_source;
    if (config.fresh_draws) {
      ferm_source = std::make_unique<GibbsDrawSource>(ferm_fit.continuation(
          from_dataset(data.fermentation), config.gibbs.thinning));
      pur_source = std::make_unique<GibbsDrawSource>(
          pur_fit.continuation(data.purification, config.gibbs.thinning));
    } else {
      ferm_source = std::make_unique<FixedDrawPool>(ferm_fit.draws.draws);
      pur_source = std::make_unique<FixedDrawPool>(pur_draws.draws);
    }
    Vec d = Vec::Ones(box.lower.size());
    if (config.standardized_gains) {
      d << gain_scale(ferm_fit.scaling, 5, 1, H),
          gain_scale(pur_fit.scaling, 2, 1, kPurificationSteps);
    }
    IntegratedPolicy work = policy;
    const Vec s1 = case_study_s1();
    const GradientOracle oracle = [&](const Vec& theta, int k, Rng& rng,
                                      double* value) {
      const Vec raw = theta.cwiseProduct(d);
      work.fermentation.assign(raw.head(nf));
      work.purification.assign(raw.tail(raw.size() - nf));
      const auto fd = ferm_source->next(k, config.optimizer.draws, rng);
      const auto pd = pur_source->next(k, config.optimizer.draws, rng);
      const std::size_t count = std::min(fd.size(), pd.size());
      Vec g = Vec::Zero(theta.size());
      double total = 0.0;
      for (std::size_t b = 0; b < count; ++b) {
        const IntegratedModel w{fd[b], pd[b]};
        g += integrated_gradient(w, work, ferm_reward, pur_reward, s1);
        total += integrated_value(w, work, ferm_reward, pur_reward, s1);
      }
      if (value != nullptr) *value = total / static_cast<double>(count);
      return Vec(g.cwiseProduct(d) / static_cast<double>(count));
    };
    OptimizerConfig oc = config.optimizer;
    oc.seed = derive_seed(base, 3);
    oc.record_time = config.timing;
    const Vec theta = projected_ascent(oracle, Vec::Zero(box.lower.size()),
                                       box, oc, nullptr).cwiseProduct(d);
    policy.fermentation.assign(theta.head(nf));
    policy.purification.assign(theta.tail(theta.size() - nf));
    policy.fermentation.box = scale_box(policy.fermentation.box, d.head(nf));
    policy.purification.box =
        scale_box(policy.purification.box, d.tail(d.size() - nf));

    IntegratedPolicy zero{PolicyParams::zeros(5, 1, H),
                          PolicyParams::zeros(2, 1, kPurificationSteps)};
    zero.fermentation.box = fermentation_box(H);
    zero.purification.box = purification_box();
    const auto deploy = [&](const IntegratedPolicy& p) {
      const DeployablePolicy f =
          make_deployable(p.fermentation, ferm_fit.draws.draws, feed_lo, feed_hi);
      const DeployablePolicy d =
          make_deployable(p.purification, pur_draws.draws, sat_lo, sat_hi);
      return std::make_pair(policy_feed(f), PurificationPolicy(
          [d](int step, const Vec& s) { return d.act(step + 1, s)(0); }));
    };
    const auto learned = deploy(policy);
    const auto start = deploy(zero);
    const PurificationPolicy human_pur = [pur_ref](int step, const Vec&) {
      return pur_ref(step);
    };
    const StepPolicy human_feed = schedule_feed(ref.human.mean);

    std::vector<std::vector<double>> sums(3, std::vector<double>(4, 0.0));
    int counted = 0;
    for (int i = 0; i < config.rollouts; ++i) {
      const std::uint64_t seed = derive_seed(base, 100 + i);
      const IntegratedRollout a = rollout_integrated(ref, config.reward,
                                                     learned.first, learned.second, seed);
      const IntegratedRollout b = rollout_integrated(ref, config.reward,
                                                     start.first, start.second, seed);
      const IntegratedRollout c =
          rollout_integrated(ref, config.reward, human_feed, human_pur, seed);
      if (a.failed || b.failed || c.failed) {
        ++failed;
        continue;
      }
      const IntegratedRollout* outs[3] = {&a, &b, &c};
      for (int p = 0; p < 3; ++p) {
        sums[p][0] += outs[p]->reward;
        sums[p][1] += outs[p]->titer;
        sums[p][2] += outs[p]->yield;
        sums[p][3] += outs[p]->purity;
      }
      ++counted;
    }
    if (counted == 0) continue;
    Acc* accs[3] = {&trained, &initial, &human};
    for (int p = 0; p < 3; ++p) {
      for (int m = 0; m < 4; ++m) {
        accs[p]->per_macro[m].push_back(sums[p][m] / counted);
      }
    }
  }
  if (trained.per_macro[0].empty()) {
    throw NumericError("every integrated replication degenerated");
  }
  EvaluationReport report;
  report.macro_replications = static_cast<int>(trained.per_macro[0].size());
  report.failed = failed;
  const auto finish = [&](const std::string& name, const Acc& acc) {
    PolicyRow row;
    row.policy = name;
    row.metrics = metrics;
    row.per_macro = acc.per_macro;
    for (const auto& v : acc.per_macro) row.values.push_back(summarize(v));
    return row;
  };
  report.rows.push_back(finish("dbn-rl", trained));
  report.rows.push_back(finish("initial", initial));
  report.rows.push_back(finish("reference", human));
  PolicyRow diff;
  diff.policy = "dbn-rl-minus-initial";
  diff.metrics = {"reward", "purity"};
  for (int m : {0, 3}) {
    std::vector<double> d;
    for (std::size_t j = 0; j < trained.per_macro[m].size(); ++j) {
      d.push_back(trained.per_macro[m][j] - initial.per_macro[m][j]);
    }
    diff.per_macro.push_back(d);
    diff.values.push_back(summarize(d));
  }
  report.rows.push_back(diff);
  return report;
}

}  // namespace dbnrl
