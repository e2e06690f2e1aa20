// Copyright 2026 The protocalib Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// JSON and CSV forms of reports, specs and verification results. Needs
// nlohmann/json (vendor/json.hpp) on the include path.

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "protocalib/gap.hpp"
#include "protocalib/harness.hpp"
#include "protocalib/metrics.hpp"
#include "protocalib/scoring.hpp"
#include "protocalib/synthetic.hpp"
#include "protocalib/verification.hpp"

namespace protocalib {

using json = nlohmann::ordered_json;

inline json to_json_value(const Hyperparams& hp) {
  return {{"tau", hp.tau}, {"kappa", hp.kappa}, {"rho", hp.rho}, {"beta", hp.beta}};
}

inline Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams hp;
  hp.tau = j.value("tau", hp.tau);
  hp.kappa = j.value("kappa", hp.kappa);
  hp.rho = j.value("rho", hp.rho);
  hp.beta = j.value("beta", hp.beta);
  hp.validate();
  return hp;
}

inline json to_json_value(const SyntheticWorldSpec& s) {
  return {{"d", s.d},
          {"k", s.k},
          {"l_true", s.l_true},
          {"l_protos", s.l_protos},
          {"n_per_class", s.n_per_class},
          {"noise_sigma", s.noise_sigma},
          {"gap_angle_deg", s.gap_angle_deg},
          {"min_mean_angle_deg", s.min_mean_angle_deg},
          {"neg_anchor_angle_deg", s.neg_anchor_angle_deg},
          {"seed", s.seed}};
}

inline SyntheticWorldSpec world_spec_from_json(const json& j) {
  SyntheticWorldSpec s;
  s.d = j.value("d", s.d);
  s.k = j.value("k", s.k);
  s.l_true = j.value("l_true", s.l_true);
  s.l_protos = j.value("l_protos", s.l_protos);
  s.n_per_class = j.value("n_per_class", s.n_per_class);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.gap_angle_deg = j.value("gap_angle_deg", s.gap_angle_deg);
  s.min_mean_angle_deg = j.value("min_mean_angle_deg", s.min_mean_angle_deg);
  s.neg_anchor_angle_deg = j.value("neg_anchor_angle_deg", s.neg_anchor_angle_deg);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

inline json to_json_value(const DetectionMetrics& m) {
  return {{"auroc", m.auroc}, {"fpr95", m.fpr95}};
}

inline json to_json_value(const EvalReport& r) {
  json per = json::array();
  for (const auto& [name, m] : r.per_dataset) {
    per.push_back({{"dataset", name}, {"auroc", m.auroc}, {"fpr95", m.fpr95}});
  }
  json hp = json::object();
  for (const auto& [k, v] : r.metadata.hyperparameters) hp[k] = v;
  return {{"method", r.metadata.method},
          {"seed", r.metadata.seed},
          {"stream_order", r.metadata.stream_order},
          {"hyperparameters", hp},
          {"per_dataset", per},
          {"averages", to_json_value(r.averages)}};
}

inline EvalReport eval_report_from_json(const json& j) {
  EvalReport r;
  r.metadata.method = j.at("method").get<std::string>();
  r.metadata.seed = j.at("seed").get<std::uint64_t>();
  r.metadata.stream_order = j.value("stream_order", std::string());
  for (const auto& [k, v] : j.at("hyperparameters").items()) {
    r.metadata.hyperparameters[k] = v.get<double>();
  }
  for (const json& row : j.at("per_dataset")) {
    r.per_dataset.push_back({row.at("dataset").get<std::string>(),
                             {row.at("auroc").get<double>(), row.at("fpr95").get<double>()}});
  }
  r.averages = {j.at("averages").at("auroc").get<double>(),
                j.at("averages").at("fpr95").get<double>()};
  return r;
}

inline json to_json_value(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

inline json to_json_value(const MethodSummary& s) {
  json per = json::array();
  for (const auto& [name, ms] : s.per_dataset) {
    per.push_back({{"dataset", name},
                   {"auroc", to_json_value(ms.first)},
                   {"fpr95", to_json_value(ms.second)}});
  }
  return {{"method", s.method},
          {"auroc", to_json_value(s.auroc)},
          {"fpr95", to_json_value(s.fpr95)},
          {"per_dataset", per}};
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kReportCsvHeader = "method,seed,stream_order,dataset,auroc,fpr95\n";

// One row per dataset plus an "average" row.
inline std::string report_csv_rows(const EvalReport& r) {
  std::ostringstream out;
  auto row = [&](const std::string& dataset, const DetectionMetrics& m) {
    out << r.metadata.method << ',' << r.metadata.seed << ',' << r.metadata.stream_order
        << ',' << dataset << ',' << format_double(m.auroc) << ',' << format_double(m.fpr95)
        << '\n';
  };
  for (const auto& [name, m] : r.per_dataset) row(name, m);
  row("average", r.averages);
  return out.str();
}

// Summary rows use "mean" and "std" in the seed column.
inline std::string summary_csv_rows(const MethodSummary& s, const std::string& order) {
  std::ostringstream out;
  for (const char* stat : {"mean", "std"}) {
    const bool mean = stat[0] == 'm';
    auto pick = [&](const MeanStd& m) { return format_double(mean ? m.mean : m.std); };
    for (const auto& [name, ms] : s.per_dataset) {
      out << s.method << ',' << stat << ',' << order << ',' << name << ','
          << pick(ms.first) << ',' << pick(ms.second) << '\n';
    }
    out << s.method << ',' << stat << ',' << order << ",average," << pick(s.auroc) << ','
        << pick(s.fpr95) << '\n';
  }
  return out.str();
}

inline constexpr const char* kScoresCsvHeader = "seed,index,source,truth,score,branch\n";

inline std::string scores_csv_rows(std::uint64_t seed, const std::vector<ScoredSample>& samples) {
  std::ostringstream out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ScoredSample& s = samples[i];
    out << seed << ',' << i << ',' << s.source << ','
        << (s.truth == Truth::kId ? "id" : "ood") << ',' << format_double(s.score) << ','
        << to_string(s.branch) << '\n';
  }
  return out.str();
}

inline json to_json_value(const GapReport& r) {
  json residual = json::array();
  for (const auto& v : r.fixed_point_residual) residual.push_back(v ? json(*v) : json());
  return {{"per_class_bound", r.per_class_bound},
          {"bound_total", r.bound_total},
          {"frobenius_gap", r.frobenius_gap},
          {"satisfied", r.satisfied},
          {"per_class_in_norm", r.per_class_in_norm},
          {"per_class_w_out_norm", r.per_class_w_out_norm},
          {"fixed_point_residual", residual},
          {"degenerate_classes", r.degenerate_classes},
          {"optimizer_converged", r.optimizer_converged},
          {"w_in_span", r.w_in_span},
          {"optimum_loss", r.optimum_loss}};
}

inline json to_json_value(const GradientCheckResult& r, const GradientCheckSettings& s) {
  json cases = json::array();
  for (const auto& c : r.cases) {
    cases.push_back({{"draw", c.draw},
                     {"kappa", c.kappa},
                     {"relative_error", c.relative_error},
                     {"grad_norm", c.grad_norm}});
  }
  return {{"check", "grad"},
          {"passed", r.passed},
          {"settings",
           {{"seed", s.seed}, {"draws", s.draws}, {"d", s.d}, {"m", s.m},
            {"kappas", s.kappas}, {"fd_step", s.fd_step}, {"tolerance", s.tolerance}}},
          {"max_relative_error", r.max_relative_error},
          {"max_grad_norm_excess", r.max_grad_norm_excess},
          {"cases", cases}};
}

inline json to_json_value(const FixedPointResult& r, const FixedPointSettings& s) {
  json inst = json::array();
  for (const auto& i : r.instances) {
    json residual = json::array();
    for (const auto& v : i.residuals) residual.push_back(v ? json(*v) : json());
    inst.push_back({{"seed", i.seed},
                    {"loss", i.loss},
                    {"steps_run", i.steps_run},
                    {"residuals", residual},
                    {"max_residual", i.max_residual},
                    {"passed", i.passed}});
  }
  return {{"check", "thm1"},
          {"passed", r.passed},
          {"settings",
           {{"first_seed", s.first_seed}, {"instances", s.instances},
            {"world", to_json_value(s.world)}, {"kappa", s.kappa}, {"step", s.step},
            {"max_steps", s.max_steps}, {"stall_tolerance", s.stall_tolerance},
            {"tolerance", s.tolerance}}},
          {"max_residual", r.max_residual},
          {"instances", inst}};
}

inline json to_json_value(const GapCheckResult& r, const GapCheckSettings& s) {
  json inst = json::array();
  for (const auto& i : r.instances) {
    json outside = to_json_value(i.outside);
    json inside = to_json_value(i.inside);
    inst.push_back({{"seed", i.seed},
                    {"gap_angle_deg", i.gap_angle_deg},
                    {"passed", i.passed},
                    {"outside_span", outside},
                    {"inside_span", inside}});
  }
  return {{"check", "thm3"},
          {"passed", r.passed},
          {"settings",
           {{"first_seed", s.first_seed}, {"instances", s.instances},
            {"world", to_json_value(s.world)}, {"min_gap_deg", s.min_gap_deg},
            {"max_gap_deg", s.max_gap_deg}, {"kappa", s.kappa},
            {"optimizer_max_steps", s.optimizer.max_steps},
            {"optimizer_step", s.optimizer.step_size},
            {"zero_tolerance", s.zero_tolerance}}},
          {"satisfied", r.satisfied},
          {"max_inside_bound", r.max_inside_bound},
          {"instances", inst}};
}

inline json to_json_value(const RegretCheckResult& r, const RegretCheckSettings& s) {
  json points = json::array();
  for (const auto& p : r.points) {
    points.push_back({{"n", p.n},
                      {"cumulative_loss", p.cumulative_loss},
                      {"optimum_loss", p.optimum_loss},
                      {"observed_grad_bound", p.observed_grad_bound},
                      {"regret", p.report.regret},
                      {"bound", p.report.bound},
                      {"satisfied", p.report.satisfied},
                      {"regret_per_sqrt_n", p.regret_per_sqrt_n}});
  }
  return {{"check", "thm4"},
          {"passed", r.passed},
          {"settings",
           {{"seed", s.seed}, {"ns", s.ns}, {"world", to_json_value(s.world)},
            {"kappa", s.kappa}, {"rho", s.rho}, {"pseudo_temperature", s.pseudo_temperature},
            {"optimizer_step", s.optimizer_step}, {"optimizer_steps", s.optimizer_steps},
            {"stall_tolerance", s.stall_tolerance}}},
          {"bound_satisfied", r.bound_satisfied},
          {"ratio_non_increasing", r.ratio_non_increasing},
          {"points", points}};
}

inline json to_json_value(const MetricsCheckResult& r, const MetricsCheckSettings& s) {
  return {{"check", "metrics"},
          {"passed", r.passed},
          {"settings", {{"seed", s.seed}, {"sets", s.sets}, {"max_points", s.max_points}}},
          {"sets", r.sets},
          {"auroc_mismatches", r.auroc_mismatches},
          {"fpr_mismatches", r.fpr_mismatches}};
}

}  // namespace protocalib
