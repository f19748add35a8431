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

#include "dbnrl/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace dbnrl {

using nlohmann::json;

namespace {

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json bounds_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isinf(v(i))) {
      out.push_back(nullptr);
    } else {
      out.push_back(v(i));
    }
  }
  return out;
}

json mat_json(const Mat& a) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json mask_json(const BoolMat& a) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    std::string row;
    for (Eigen::Index c = 0; c < a.cols(); ++c) row += a(r, c) ? '1' : '0';
    rows.push_back(row);
  }
  return rows;
}

Vec vec_from(const json& j, Eigen::Index size, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw ConfigError(std::string("schema error: ") + what + " has wrong size");
  }
  Vec v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = j[i].get<double>();
  return v;
}

Vec bounds_from(const json& j, Eigen::Index size, double fill) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw ConfigError("schema error: box bounds have wrong size");
  }
  Vec v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    v(i) = j[i].is_null() ? fill : j[i].get<double>();
  }
  return v;
}

Mat mat_from(const json& j, Eigen::Index rows, Eigen::Index cols,
             const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw ConfigError(std::string("schema error: ") + what + " has wrong rows");
  }
  Mat a(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) a.row(r) = vec_from(j[r], cols, what);
  return a;
}

BoolMat mask_from(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw ConfigError("schema error: mask has wrong rows");
  }
  BoolMat a(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = j[r].get<std::string>();
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError("schema error: mask row has wrong length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = row[c] == '1';
  }
  return a;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON document: ") + e.what());
  }
}

void expect_schema(const json& doc, const char* schema) {
  if (!doc.is_object() || !doc.contains("schema") ||
      doc["schema"].get<std::string>() != schema) {
    throw ConfigError(std::string("schema error: expected ") + schema);
  }
}

}  // namespace

std::string model_to_json(const ModelParams& w) {
  w.check_dimensions();
  json doc;
  doc["schema"] = kModelSchema;
  doc["n"] = w.n;
  doc["m"] = w.m;
  doc["H"] = w.H;
  json steps = json::array();
  for (int t = 0; t < w.H; ++t) {
    json step;
    step["t"] = t + 1;
    step["mu_s"] = vec_json(w.mu_s[t]);
    step["mu_a"] = vec_json(w.mu_a[t]);
    step["v"] = vec_json(w.v[t]);
    step["sigma"] = vec_json(w.sigma[t]);
    if (t + 1 < w.H) {
      step["beta_s"] = mat_json(w.beta_s[t]);
      step["beta_a"] = mat_json(w.beta_a[t]);
      step["mask_s"] = mask_json(w.mask_s[t]);
      step["mask_a"] = mask_json(w.mask_a[t]);
    }
    steps.push_back(std::move(step));
  }
  doc["steps"] = std::move(steps);
  return doc.dump(1) + "\n";
}

ModelParams model_from_json(const std::string& text) {
  const json doc = parse_json(text);
  expect_schema(doc, kModelSchema);
  try {
    ModelParams w = ModelParams::zeros(doc.at("n").get<int>(),
                                       doc.at("m").get<int>(),
                                       doc.at("H").get<int>());
    const json& steps = doc.at("steps");
    if (!steps.is_array() || static_cast<int>(steps.size()) != w.H) {
      throw ConfigError("schema error: steps must have H entries");
    }
    for (int t = 0; t < w.H; ++t) {
      const json& step = steps[t];
      w.mu_s[t] = vec_from(step.at("mu_s"), w.n, "mu_s");
      w.mu_a[t] = vec_from(step.at("mu_a"), w.m, "mu_a");
      w.v[t] = vec_from(step.at("v"), w.n, "v");
      w.sigma[t] = vec_from(step.at("sigma"), w.m, "sigma");
      if (t + 1 < w.H) {
        w.beta_s[t] = mat_from(step.at("beta_s"), w.n, w.n, "beta_s");
        w.beta_a[t] = mat_from(step.at("beta_a"), w.m, w.n, "beta_a");
        w.mask_s[t] = mask_from(step.at("mask_s"), w.n, w.n);
        w.mask_a[t] = mask_from(step.at("mask_a"), w.m, w.n);
      }
    }
    return w;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("schema error: ") + e.what());
  }
}

std::string policy_to_json(const DeployablePolicy& policy) {
  const PolicyParams& p = policy.params;
  p.check_dimensions();
  json doc;
  doc["schema"] = kPolicySchema;
  doc["n"] = p.n;
  doc["m"] = p.m;
  doc["H"] = p.H;
  json gains = json::array();
  for (const Mat& g : p.vartheta) gains.push_back(mat_json(g));
  doc["vartheta"] = std::move(gains);
  doc["box"]["lower"] = bounds_json(p.box.lower);
  doc["box"]["upper"] = bounds_json(p.box.upper);
  json sref = json::array();
  for (const Vec& v : policy.state_reference) sref.push_back(vec_json(v));
  json aref = json::array();
  for (const Vec& v : policy.action_reference) aref.push_back(vec_json(v));
  doc["state_reference"] = std::move(sref);
  doc["action_reference"] = std::move(aref);
  doc["action_bounds"]["lower"] = bounds_json(policy.action_lower);
  doc["action_bounds"]["upper"] = bounds_json(policy.action_upper);
  return doc.dump(1) + "\n";
}

DeployablePolicy policy_from_json(const std::string& text) {
  const json doc = parse_json(text);
  expect_schema(doc, kPolicySchema);
  try {
    DeployablePolicy out;
    PolicyParams& p = out.params;
    p = PolicyParams::zeros(doc.at("n").get<int>(), doc.at("m").get<int>(),
                            doc.at("H").get<int>());
    const json& gains = doc.at("vartheta");
    if (!gains.is_array() || gains.size() != p.vartheta.size()) {
      throw ConfigError("schema error: vartheta must have H-1 entries");
    }
    for (std::size_t t = 0; t < p.vartheta.size(); ++t) {
      p.vartheta[t] = mat_from(gains[t], p.n, p.m, "vartheta");
    }
    const double inf = std::numeric_limits<double>::infinity();
    p.box.lower = bounds_from(doc.at("box").at("lower"), p.size(), -inf);
    p.box.upper = bounds_from(doc.at("box").at("upper"), p.size(), inf);
    p.check_dimensions();
    for (const json& v : doc.at("state_reference")) {
      out.state_reference.push_back(vec_from(v, p.n, "state_reference"));
    }
    for (const json& v : doc.at("action_reference")) {
      out.action_reference.push_back(vec_from(v, p.m, "action_reference"));
    }
    if (static_cast<int>(out.state_reference.size()) != p.H ||
        static_cast<int>(out.action_reference.size()) != p.H) {
      throw ConfigError("schema error: references must have H entries");
    }
    out.action_lower =
        bounds_from(doc.at("action_bounds").at("lower"), p.m, -inf);
    out.action_upper =
        bounds_from(doc.at("action_bounds").at("upper"), p.m, inf);
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("schema error: ") + e.what());
  }
}

Vec DeployablePolicy::act(int t, const Vec& s) const {
  const auto i = static_cast<std::size_t>(t - 1);
  Vec a = action_reference.at(i) +
          params.gain(t).transpose() * (s - state_reference.at(i));
  return a.cwiseMax(action_lower).cwiseMin(action_upper);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

void save_model(const ModelParams& w, const std::string& path) {
  write_text_file(path, model_to_json(w));
}

ModelParams load_model(const std::string& path) {
  return model_from_json(read_text_file(path));
}

void save_policy(const DeployablePolicy& policy, const std::string& path) {
  write_text_file(path, policy_to_json(policy));
}

DeployablePolicy load_policy(const std::string& path) {
  return policy_from_json(read_text_file(path));
}

}  // namespace dbnrl
