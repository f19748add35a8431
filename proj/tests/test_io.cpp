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

#include <gtest/gtest.h>

#include "dbnrl/dataset.hpp"
#include "dbnrl/experiment.hpp"
#include "dbnrl/model_io.hpp"
#include "test_util.hpp"

namespace dbnrl {
namespace {

TEST(ModelIoTest, JsonRoundTripIsExact) {
  Rng rng(61);
  ModelParams w = random_model(3, 2, 4, rng);
  w.mask_s[1](0, 2) = false;
  w.apply_masks();
  const ModelParams back = model_from_json(model_to_json(w));
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(back.mu_s[t], w.mu_s[t]);
    EXPECT_EQ(back.v[t], w.v[t]);
    EXPECT_EQ(back.sigma[t], w.sigma[t]);
  }
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(back.beta_s[t], w.beta_s[t]);
    EXPECT_EQ(back.beta_a[t], w.beta_a[t]);
    EXPECT_TRUE((back.mask_s[t] == w.mask_s[t]).all());
  }
  EXPECT_EQ(model_to_json(back), model_to_json(w));
  EXPECT_THROW(model_from_json("{\"schema\": \"other/1\"}"), ConfigError);
  EXPECT_THROW(model_from_json("not json"), ConfigError);
}

TEST(ModelIoTest, PolicyRoundTripAndAction) {
  Rng rng(62);
  DeployablePolicy policy;
  policy.params = random_policy(2, 1, 3, rng);
  policy.params.box = Box{Vec::Constant(4, -1.0), Vec::Constant(4, 1.0)};
  policy.state_reference = {Vec::Zero(2), Vec::Ones(2), Vec::Ones(2)};
  policy.action_reference = {Vec::Constant(1, 0.5), Vec::Constant(1, 0.5),
                             Vec::Zero(1)};
  policy.action_lower = Vec::Zero(1);
  policy.action_upper = Vec::Ones(1);
  const DeployablePolicy back = policy_from_json(policy_to_json(policy));
  EXPECT_EQ(policy_to_json(back), policy_to_json(policy));
  const Vec s = (Vec(2) << 0.3, -0.2).finished();
  const double raw = 0.5 + policy.params.gain(1).col(0).dot(s);
  EXPECT_DOUBLE_EQ(back.act(1, s)(0), std::clamp(raw, 0.0, 1.0));
  const Vec push = 1e3 * policy.params.gain(1).col(0).array().sign().matrix();
  EXPECT_DOUBLE_EQ(back.act(1, push)(0), 1.0);
  EXPECT_DOUBLE_EQ(back.act(1, -push)(0), 0.0);
}

TEST(ModelIoTest, FileErrorsAreIoErrors) {
  EXPECT_THROW(read_text_file("/nonexistent/dir/file.json"), IoError);
  EXPECT_THROW(write_text_file("/proc/forbidden/file.json", "x"), IoError);
  EXPECT_THROW(load_model("/nonexistent/model.json"), IoError);
}

TEST(DatasetIoTest, CsvRoundTrip) {
  ExperimentConfig config;
  config.replications = 3;
  const Reference ref = build_reference(config);
  const Dataset data = simulate_dataset(config, ref, 71);
  const std::string csv = dataset_csv(data);
  const Dataset back = parse_dataset_csv(csv);
  ASSERT_EQ(back.runs.size(), 3u);
  EXPECT_EQ(dataset_csv(back), csv);
  for (std::size_t r = 0; r < 3; ++r) {
    ASSERT_EQ(back.runs[r].states.size(), data.runs[r].states.size());
    EXPECT_EQ(back.runs[r].states.back().values(),
              data.runs[r].states.back().values());
    EXPECT_EQ(back.runs[r].feed, data.runs[r].feed);
  }
  const std::string dir = testing::scratch_dir("dataset");
  write_dataset_csv(data, dir + "/d.csv");
  EXPECT_EQ(dataset_csv(read_dataset_csv(dir + "/d.csv")), csv);
  EXPECT_THROW(parse_dataset_csv("wrong,header\n"), ConfigError);
  EXPECT_THROW(read_dataset_csv(dir + "/missing.csv"), IoError);
}

TEST(DatasetIoTest, SameSeedSameData) {
  ExperimentConfig config;
  config.replications = 2;
  const Reference ref = build_reference(config);
  EXPECT_EQ(dataset_csv(simulate_dataset(config, ref, 5)),
            dataset_csv(simulate_dataset(config, ref, 5)));
  EXPECT_NE(dataset_csv(simulate_dataset(config, ref, 5)),
            dataset_csv(simulate_dataset(config, ref, 6)));
}

TEST(ConfigTest, JsonRoundTripAndHash) {
  ExperimentConfig a = ExperimentConfig::from_json(
      R"({"replications": 8, "seed": 4, "optimizer": {"iterations": 30}})");
  EXPECT_EQ(a.replications, 8);
  EXPECT_EQ(a.seed, 4u);
  EXPECT_EQ(a.optimizer.iterations, 30);
  const ExperimentConfig b = ExperimentConfig::from_json(a.to_json());
  EXPECT_EQ(b.to_json(), a.to_json());
  EXPECT_EQ(b.hash(), a.hash());
  a.seed = 5;
  EXPECT_NE(b.hash(), a.hash());
}

TEST(ConfigTest, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ExperimentConfig::from_json(R"({"replicatons": 8})"),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"optimizer": {"etta0": 1}})"),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"replications": 0})"),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"scenario": "mars"})"),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json("{"), ConfigError);
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/config.json"), IoError);
}

TEST(ConfigTest, DefaultsMatchCaseStudy) {
  const ExperimentConfig c;
  EXPECT_EQ(c.macro_replications, 30);
  EXPECT_DOUBLE_EQ(c.kappa, 10.0);
  EXPECT_EQ(c.optimizer.iterations, 300);
  EXPECT_EQ(c.setup().horizon_steps, 36);
}

}  // namespace
}  // namespace dbnrl
