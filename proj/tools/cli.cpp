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

#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dbnrl/common.hpp"
#include "dbnrl/dataset.hpp"
#include "dbnrl/experiment.hpp"
#include "dbnrl/gibbs.hpp"
#include "dbnrl/model_io.hpp"
#include "dbnrl/optimizer.hpp"
#include "dbnrl/shapley.hpp"

namespace dbnrl::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Global {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = ".";
};

struct Inputs {
  std::string data;
  std::string draws;
  std::vector<std::string> policies;
  std::string observation;
  int h = 0;
  int t = 0;
};

ExperimentConfig load_config(const Global& g) {
  ExperimentConfig c = g.config_path.empty()
                           ? ExperimentConfig{}
                           : ExperimentConfig::load(g.config_path);
  if (g.seed_given) c.seed = g.seed;
  c.validate();
  return c;
}

std::string output_path(const Global& g, const std::string& name) {
  std::error_code ec;
  fs::create_directories(g.out, ec);
  if (ec) throw IoError("cannot create output directory " + g.out);
  return (fs::path(g.out) / name).string();
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(x));
  return buf;
}

// Collects what a command read and wrote; finish() emits
// <command>.manifest.json next to the outputs.
class Run {
 public:
  Run(const Global& g, std::string command, std::ostream& out)
      : g_(g), command_(std::move(command)), out_(out) {
    manifest_["schema"] = "dbnrl.run/1";
    manifest_["command"] = command_;
    manifest_["inputs"] = json::object();
    manifest_["outputs"] = json::array();
  }

  void input(const std::string& key, const json& value) {
    manifest_["inputs"][key] = value;
  }

  void write(const std::string& name, const std::string& text) {
    const std::string path = output_path(g_, name);
    write_text_file(path, text);
    record(name, path);
  }

  void record(const std::string& name, const std::string& path) {
    manifest_["outputs"].push_back(name);
    out_ << "wrote " << path << '\n';
  }

  void finish(const ExperimentConfig& c) {
    manifest_["seed"] = c.seed;
    manifest_["config_hash"] = hex64(c.hash());
    manifest_["config"] = json::parse(c.to_json());
    write_text_file(output_path(g_, command_ + ".manifest.json"),
                    manifest_.dump(1) + "\n");
  }

 private:
  const Global& g_;
  std::string command_;
  std::ostream& out_;
  json manifest_;
};

// simulate -> fit -> optimize use the seed streams of macro-replication 0
// of `evaluate`, so the chain reproduces its first trained policy.
std::uint64_t pipeline_base(const ExperimentConfig& c) {
  return derive_seed(c.seed, 0);
}

json vectors_to_json(const std::vector<Vec>& v) {
  json a = json::array();
  for (const Vec& x : v) {
    a.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  }
  return a;
}

std::vector<Vec> vectors_from_json(const json& a) {
  std::vector<Vec> out;
  for (const json& row : a) {
    const auto values = row.get<std::vector<double>>();
    out.push_back(Eigen::Map<const Vec>(
        values.data(), static_cast<Eigen::Index>(values.size())));
  }
  return out;
}

constexpr const char* kFitFile = "fit.json";

void save_fit_extras(const FitResult& fit, const std::string& data_path,
                     const std::string& dir) {
  json doc;
  doc["schema"] = "dbnrl.fit/1";
  // Relative to the draw directory so the file does not depend on --out.
  doc["data"] = fs::absolute(data_path)
                    .lexically_normal()
                    .lexically_relative(fs::absolute(dir).lexically_normal())
                    .generic_string();
  doc["scaling"] = {{"state", vectors_to_json(fit.scaling.state)},
                    {"action", vectors_to_json(fit.scaling.action)}};
  doc["chain_state"] = json::parse(model_to_json(fit.chain_state));
  write_text_file((fs::path(dir) / kFitFile).string(), doc.dump(1) + "\n");
}

Dataset load_dataset(const std::string& path) {
  return parse_dataset_csv(read_text_file(path));
}

std::vector<Vec> anchor_states(const Reference& ref) {
  std::vector<Vec> out;
  for (const KineticState& s : ref.mean_run.states) {
    out.push_back(network_state(s));
  }
  return out;
}

// Rebuilds what fit wrote. Without fit.json (draws from elsewhere) the
// scaling is the identity and the chain resumes from the last draw.
FitResult load_fit(const Reference& ref, const std::string& dir,
                   std::string* data_path) {
  FitResult fit;
  fit.draws = load_draws(dir);
  if (fit.draws.draws.empty()) {
    throw ConfigError("no posterior draws in " + dir);
  }
  const ModelParams& first = fit.draws.draws.front();
  if (first.n != 5 || first.m != 1 || first.H != ref.setup.horizon_steps) {
    throw ConfigError(
        "schema error: draws do not match the fermentation network");
  }
  fit.structure = ModelParams::zeros(first.n, first.m, first.H);
  fit.structure.mask_s = first.mask_s;
  fit.structure.mask_a = first.mask_a;
  fit.priors = anchor_priors(ref.anchor, anchor_states(ref));
  const fs::path extras = fs::path(dir) / kFitFile;
  if (!fs::exists(extras)) {
    fit.scaling = Scaling::identity(first.n, first.m, first.H);
    fit.chain_state = fit.draws.draws.back();
    return fit;
  }
  const json doc = json::parse(read_text_file(extras.string()));
  if (doc.at("schema").get<std::string>() != "dbnrl.fit/1") {
    throw ConfigError("schema error: expected dbnrl.fit/1");
  }
  fit.scaling.state = vectors_from_json(doc.at("scaling").at("state"));
  fit.scaling.action = vectors_from_json(doc.at("scaling").at("action"));
  fit.chain_state = model_from_json(doc.at("chain_state").dump());
  if (data_path->empty()) {
    *data_path = (fs::path(dir) / doc.at("data").get<std::string>())
                     .lexically_normal()
                     .string();
  }
  return fit;
}

DeployablePolicy deploy(const Reference& ref, const PolicyParams& params,
                        const std::vector<ModelParams>& draws) {
  const double top =
      *std::max_element(ref.human.max.begin(), ref.human.max.end());
  return make_deployable(params, draws, Vec::Zero(1), Vec::Constant(1, top));
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
  return out;
}

// ---------------------------------------------------------------------------

void cmd_simulate(const Global& g, std::ostream& out) {
  const ExperimentConfig c = load_config(g);
  Run run(g, "simulate", out);
  const Reference ref = build_reference(c);
  const Dataset data =
      simulate_dataset(c, ref, derive_seed(pipeline_base(c), 1));
  run.write("dataset.csv", dataset_csv(data));
  run.finish(c);
}

void cmd_fit(const Global& g, const Inputs& in, std::ostream& out) {
  if (in.data.empty()) throw ConfigError("fit needs --data");
  const ExperimentConfig c = load_config(g);
  Run run(g, "fit", out);
  const Reference ref = build_reference(c);
  const Dataset data = load_dataset(in.data);
  const FitResult fit =
      fit_fermentation(c, ref, data, derive_seed(pipeline_base(c), 2));
  const std::string dir = output_path(g, "draws");
  save_draws(fit.draws, dir);
  save_fit_extras(fit, in.data, dir);
  run.record("draws", dir);
  run.input("data", in.data);
  run.finish(c);
}

void cmd_optimize(const Global& g, const Inputs& in, std::ostream& out) {
  if (in.draws.empty()) throw ConfigError("optimize needs --draws");
  const ExperimentConfig c = load_config(g);
  Run run(g, "optimize", out);
  const Reference ref = build_reference(c);
  std::string data_path = in.data;
  const FitResult fit = load_fit(ref, in.draws, &data_path);
  Dataset data;
  if (c.fresh_draws) {
    if (data_path.empty()) {
      throw ConfigError(
          "fresh draws need the training data: pass --data or set "
          "optimizer.fresh_draws to false");
    }
    data = load_dataset(data_path);
    run.input("data", data_path);
  }
  const OptimizationResult opt = optimize_fermentation(
      c, ref, fit, data, derive_seed(pipeline_base(c), 3));
  run.write("policy.json",
            policy_to_json(deploy(ref, opt.policy, fit.draws.draws)));
  run.write("trace.csv", trace_csv(opt.trace));
  run.input("draws", in.draws);
  run.finish(c);
}

void cmd_evaluate(const Global& g, const Inputs& in, std::ostream& out) {
  const ExperimentConfig c = load_config(g);
  Run run(g, "evaluate", out);
  EvaluationReport report;
  if (in.policies.empty()) {
    report = evaluate_pipeline(c);
  } else {
    if (c.scenario != "fermentation") {
      throw ConfigError(
          "policy files are evaluated on the fermentation scenario only");
    }
    std::vector<DeployablePolicy> policies;
    std::vector<std::string> names;
    for (const std::string& p : in.policies) {
      policies.push_back(load_policy(p));
      names.push_back(fs::path(p).stem().string());
    }
    report = evaluate_policies(c, policies, names);
    run.input("policies", in.policies);
  }
  run.write("evaluation.csv", evaluation_csv(report));
  run.finish(c);
}

void cmd_shapley(const Global& g, const Inputs& in, std::ostream& out) {
  if (in.policies.size() != 1) throw ConfigError("shapley needs one --policy");
  if (in.draws.empty()) throw ConfigError("shapley needs --draws");
  if (in.observation.empty()) {
    throw ConfigError("shapley needs --observation s1,...,s5,feed");
  }
  const ExperimentConfig c = load_config(g);
  Run run(g, "shapley", out);
  const DeployablePolicy policy = load_policy(in.policies.front());
  const PosteriorDraws draws = load_draws(in.draws);
  const std::vector<double> values = parse_list(in.observation);
  const int n = policy.params.n;
  const int m = policy.params.m;
  if (static_cast<int>(values.size()) != n + m) {
    throw ConfigError("observation needs " + std::to_string(n + m) +
                      " comma-separated values");
  }
  Observation obs;
  obs.state = Eigen::Map<const Vec>(values.data(), n);
  obs.action = Eigen::Map<const Vec>(values.data() + n, m);
  const int h = in.h > 0 ? in.h : c.shapley_h;
  const int t = in.t > 0 ? in.t : c.shapley_t;
  AttributionReport report =
      expected_shapley(draws.draws, policy.params, obs, h, t);
  std::vector<std::string> outputs = default_input_names(n, 0);
  if (n == 5 && m == 1) {
    outputs = network_state_names();
    report.input_names = outputs;
    report.input_names.push_back("feed");
  }
  run.write("attribution.csv", attribution_csv(report, outputs));
  run.input("policy", in.policies.front());
  run.input("draws", in.draws);
  run.input("observation", values);
  run.input("h", h);
  run.input("t", t);
  run.finish(c);
}

void cmd_benchmark(const Global& g, std::ostream& out) {
  const ExperimentConfig c = load_config(g);
  Run run(g, "benchmark", out);
  run.write("benchmark.csv",
            benchmark_csv(benchmark_gradients(c.benchmark_horizons, 5, 1,
                                              c.benchmark_repeats, c.seed)));
  run.finish(c);
}

void cmd_profiles(const Global& g, const Inputs& in, std::ostream& out) {
  if (in.policies.size() != 1) throw ConfigError("profiles needs one --policy");
  const ExperimentConfig c = load_config(g);
  Run run(g, "profiles", out);
  const DeployablePolicy policy = load_policy(in.policies.front());
  run.write("profiles.csv",
            profiles_csv(feeding_profile(c, policy, c.rollouts)));
  run.input("policy", in.policies.front());
  run.finish(c);
}

void cmd_integrated(const Global& g, std::ostream& out) {
  ExperimentConfig c = load_config(g);
  c.scenario = "integrated";
  Run run(g, "integrated", out);
  run.write("integrated.csv", evaluation_csv(evaluate_pipeline(c)));
  run.finish(c);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Model-based policy optimization on dynamic Bayesian networks",
               "dbnrl"};
  app.fallthrough();
  app.require_subcommand(1);
  Global g;
  Inputs in;
  app.add_option("--config", g.config_path, "experiment config (JSON)");
  CLI::Option* seed = app.add_option("--seed", g.seed, "base seed (u64)");
  app.add_option("--out", g.out, "output directory");

  std::function<void()> action;
  const auto sub = [&](const char* name, const char* help,
                       std::function<void()> body) {
    CLI::App* s = app.add_subcommand(name, help);
    s->callback([&action, body] { action = body; });
    return s;
  };
  sub("simulate", "generate an epsilon-greedy training dataset",
      [&] { cmd_simulate(g, out); });
  sub("fit", "sample the posterior for a dataset",
      [&] { cmd_fit(g, in, out); })
      ->add_option("--data", in.data, "dataset CSV");
  {
    CLI::App* s = sub("optimize", "projected policy-gradient ascent",
                      [&] { cmd_optimize(g, in, out); });
    s->add_option("--draws", in.draws, "posterior draw directory");
    s->add_option("--data", in.data, "dataset CSV for fresh draws");
  }
  sub("evaluate", "roll policies out on the simulator",
      [&] { cmd_evaluate(g, in, out); })
      ->add_option("--policy", in.policies, "policy JSON (repeatable)");
  {
    CLI::App* s = sub("shapley", "attribute a prediction to step-h inputs",
                      [&] { cmd_shapley(g, in, out); });
    s->set_help_flag("--help", "print this help and exit");
    s->add_option("--policy", in.policies, "policy JSON");
    s->add_option("--draws", in.draws, "posterior draw directory");
    s->add_option("--observation", in.observation,
                  "comma-separated state then action values at step h");
    s->add_option("--h", in.h, "1-based step of the observation");
    s->add_option("--t", in.t, "predict s_{t+1}");
  }
  sub("benchmark", "time NBP against brute-force gradients",
      [&] { cmd_benchmark(g, out); });
  sub("profiles", "feeding profile of a policy with 95% bands",
      [&] { cmd_profiles(g, in, out); })
      ->add_option("--policy", in.policies, "policy JSON");
  sub("integrated", "fermentation plus purification pipeline",
      [&] { cmd_integrated(g, out); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    g.seed_given = seed->count() > 0;
    action();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dbnrl::cli
