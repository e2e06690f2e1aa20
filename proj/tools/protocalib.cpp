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


// protocalib command-line tool.
//
//   protocalib gen     write a synthetic embedding world to EMB1 files
//   protocalib run     stream a world through a detector and score it
//   protocalib verify  run one of the numerical verification experiments
//   protocalib report  summarize run reports as a table, CSV or JSON
//
// Exit codes: 0 success; 1 verification failure; 2 bad flags or config;
// 3 I/O or file-format failure; 4 dimension mismatch; 5 degenerate update.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "protocalib/embedding_io.hpp"
#include "protocalib/error.hpp"
#include "protocalib/harness.hpp"
#include "protocalib/online.hpp"
#include "protocalib/report_json.hpp"
#include "protocalib/stream.hpp"
#include "protocalib/synthetic.hpp"
#include "protocalib/verification.hpp"

namespace fs = std::filesystem;
namespace pc = protocalib;
using pc::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitFlags = 2;
constexpr int kExitIo = 3;
constexpr int kExitDimension = 4;
constexpr int kExitDegenerate = 5;

int exit_code_for(pc::ErrorCode code) {
  switch (code) {
    case pc::ErrorCode::kIoError:
    case pc::ErrorCode::kBadMagic:
    case pc::ErrorCode::kTruncatedFile:
    case pc::ErrorCode::kNormViolation:
      return kExitIo;
    case pc::ErrorCode::kDimensionMismatch:
      return kExitDimension;
    case pc::ErrorCode::kZeroVector:
      return kExitDegenerate;
    default:
      return kExitFlags;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  pc::write_file_atomic(path, text);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

bool is_csv(const fs::path& p) { return p.extension() == ".csv"; }

pc::EmbeddingSet load_set(const fs::path& path) {
  const std::string bytes = pc::read_file(path);
  return is_csv(path) ? pc::decode_embeddings_csv(bytes) : pc::decode_embeddings(bytes);
}

std::vector<pc::UnitVector> load_vectors(const fs::path& path) {
  return pc::to_unit_vectors(load_set(path));
}

// ---------------------------------------------------------------------------
// World spec flags shared by gen and run.

struct WorldFlags {
  pc::SyntheticWorldSpec spec;

  void add_to(CLI::App* app) {
    app->add_option("--d", spec.d, "Embedding dimension")->capture_default_str();
    app->add_option("--k", spec.k, "ID class count")->capture_default_str();
    app->add_option("--l-true", spec.l_true, "True OOD cluster count")->capture_default_str();
    app->add_option("--l-protos", spec.l_protos, "Negative prototype count")
        ->capture_default_str();
    app->add_option("--n", spec.n_per_class, "Samples per class")->capture_default_str();
    app->add_option("--sigma", spec.noise_sigma, "Tangent noise scale")->capture_default_str();
    app->add_option("--gap-deg", spec.gap_angle_deg, "Text-to-visual angle in degrees")
        ->capture_default_str();
    app->add_option("--min-angle-deg", spec.min_mean_angle_deg,
                    "Minimum angle between cluster means")
        ->capture_default_str();
    app->add_option("--neg-anchor-deg", spec.neg_anchor_angle_deg,
                    "Angle between a negative anchor and its OOD mean (>= 90: random)")
        ->capture_default_str();
  }
};

// ---------------------------------------------------------------------------
// gen

struct GenFlags {
  WorldFlags world;
  std::uint64_t seed = 0;
  std::string out = "world";
};

std::string indexed(const std::string& stem, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return stem + "_" + buf + ".emb1";
}

int cmd_gen(const GenFlags& flags) {
  pc::SyntheticWorldSpec spec = flags.world.spec;
  spec.seed = flags.seed;
  pc::SyntheticWorld world;
  try {
    spec.validate();
    world = pc::generate_world(spec);
  } catch (const pc::Error& e) {
    std::cerr << "gen: " << e.what() << "\n";
    return kExitFlags;
  }

  const fs::path out = flags.out;
  json manifest;
  manifest["format"] = "protocalib-world-1";
  manifest["spec"] = pc::to_json_value(spec);
  json id_files = json::array(), ood_files = json::array();
  try {
    fs::create_directories(out);
    for (std::size_t c = 0; c < world.id_batches.size(); ++c) {
      const std::string name = indexed("id", c);
      const std::vector<int> labels(world.id_batches[c].size(), static_cast<int>(c));
      pc::write_embeddings(out / name, pc::to_embedding_set(world.id_batches[c], labels));
      id_files.push_back({{"path", name}, {"label", c}, {"count", labels.size()}});
    }
    for (std::size_t j = 0; j < world.ood_batches.size(); ++j) {
      const std::string name = indexed("ood", j);
      pc::write_embeddings(out / name, pc::to_embedding_set(world.ood_batches[j]));
      ood_files.push_back({{"name", pc::ood_dataset_name(j)},
                           {"path", name},
                           {"count", world.ood_batches[j].size()}});
    }
    std::vector<int> id_labels(world.text_id_prototypes.size());
    for (std::size_t i = 0; i < id_labels.size(); ++i) id_labels[i] = static_cast<int>(i);
    pc::write_embeddings(out / "text_id.emb1",
                         pc::to_embedding_set(world.text_id_prototypes, id_labels));
    manifest["id"] = id_files;
    manifest["ood"] = ood_files;
    manifest["text_id"] = {{"path", "text_id.emb1"}, {"count", id_labels.size()}};
    std::size_t file_count = id_files.size() + ood_files.size() + 1;
    if (!world.text_neg_prototypes.empty()) {
      std::vector<int> neg_labels(world.text_neg_prototypes.size());
      for (std::size_t i = 0; i < neg_labels.size(); ++i) {
        neg_labels[i] = static_cast<int>(id_labels.size() + i);
      }
      pc::write_embeddings(out / "text_neg.emb1",
                           pc::to_embedding_set(world.text_neg_prototypes, neg_labels));
      manifest["text_neg"] = {{"path", "text_neg.emb1"}, {"count", neg_labels.size()}};
      ++file_count;
    } else {
      manifest["text_neg"] = nullptr;
    }
    manifest["file_count"] = file_count;
    write_json(out / "manifest.json", manifest);
  } catch (const pc::Error& e) {
    std::cerr << "gen: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "gen: " << e.what() << "\n";
    return kExitIo;
  }
  std::cout << "wrote " << manifest["file_count"].get<std::size_t>() << " embedding files to "
            << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// run

struct RunFlags {
  WorldFlags world;
  std::string method = "ours";
  pc::Hyperparams hp;
  std::string order = "random";
  std::vector<std::string> temporal;
  std::vector<std::uint64_t> seeds;
  std::uint64_t first_seed = 0;
  int seed_count = 1;
  std::string manifest;
  std::vector<std::string> id_files;
  std::vector<std::string> ood_files;  // name=path
  std::string text_id;
  std::string text_neg;
  std::string out = "run";
  std::string save_state;
  bool no_scores = false;
};

pc::RunInputs inputs_from_manifest(const fs::path& manifest_path, json& echo) {
  json m;
  try {
    m = json::parse(pc::read_file(manifest_path));
  } catch (const json::exception& e) {
    pc::detail::fail(pc::ErrorCode::kIoError, "bad manifest: " + std::string(e.what()));
  }
  const fs::path base = manifest_path.parent_path();
  pc::RunInputs in;
  try {
    for (const json& f : m.at("id")) {
      auto v = load_vectors(base / f.at("path").get<std::string>());
      in.id.insert(in.id.end(), v.begin(), v.end());
    }
    for (const json& f : m.at("ood")) {
      in.ood.push_back({f.at("name").get<std::string>(),
                        load_vectors(base / f.at("path").get<std::string>())});
    }
    in.text_id = load_vectors(base / m.at("text_id").at("path").get<std::string>());
    if (m.contains("text_neg") && !m.at("text_neg").is_null()) {
      in.text_neg = load_vectors(base / m.at("text_neg").at("path").get<std::string>());
    }
  } catch (const json::exception& e) {
    pc::detail::fail(pc::ErrorCode::kIoError, "bad manifest: " + std::string(e.what()));
  }
  echo = {{"manifest", fs::absolute(manifest_path).lexically_normal().string()},
          {"spec", m.value("spec", json())}};
  return in;
}

pc::RunInputs inputs_from_files(const RunFlags& f, json& echo) {
  pc::RunInputs in;
  for (const std::string& p : f.id_files) {
    auto v = load_vectors(p);
    in.id.insert(in.id.end(), v.begin(), v.end());
  }
  json ood = json::array();
  for (const std::string& spec : f.ood_files) {
    const auto eq = spec.find('=');
    std::string name, path;
    if (eq == std::string::npos) {
      path = spec;
      name = fs::path(spec).stem().string();
    } else {
      name = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    }
    in.ood.push_back({name, load_vectors(path)});
    ood.push_back({{"name", name}, {"path", path}});
  }
  in.text_id = load_vectors(f.text_id);
  if (!f.text_neg.empty()) in.text_neg = load_vectors(f.text_neg);
  echo = {{"id_files", f.id_files}, {"ood_files", ood}, {"text_id", f.text_id},
          {"text_neg", f.text_neg.empty() ? json() : json(f.text_neg)}};
  return in;
}

fs::path state_prefix(const std::string& base, std::uint64_t seed, bool many) {
  if (!many) return base;
  return base + ".seed" + std::to_string(seed);
}

int cmd_run(const RunFlags& f) {
  pc::RunPlan plan;
  json config;
  // Flag and config validation.
  try {
    plan.method = pc::parse_method(f.method);
    f.hp.validate();
    plan.hp = f.hp;
    plan.order = pc::parse_order_kind(f.order);
    plan.temporal_names = f.temporal;
    if (plan.order == pc::StreamOrderKind::kTemporal && f.temporal.empty()) {
      pc::detail::fail(pc::ErrorCode::kInvalidArgument, "--order temporal needs --temporal");
    }
    if (!f.seeds.empty()) {
      plan.seeds = f.seeds;
    } else {
      pc::detail::require(f.seed_count >= 1, pc::ErrorCode::kInvalidArgument,
                          "--seed-count must be >= 1");
      plan.seeds = pc::seed_range(f.first_seed, static_cast<std::size_t>(f.seed_count));
    }
    const bool file_mode = !f.id_files.empty() || !f.ood_files.empty() || !f.text_id.empty();
    if (!f.manifest.empty() && file_mode) {
      pc::detail::fail(pc::ErrorCode::kInvalidArgument,
                       "--manifest cannot be combined with explicit input files");
    }
    if (file_mode && (f.id_files.empty() || f.ood_files.empty() || f.text_id.empty())) {
      pc::detail::fail(pc::ErrorCode::kInvalidArgument,
                       "explicit inputs need --id-file, --ood-file and --text-id");
    }
    if (f.manifest.empty() && !file_mode) {
      f.world.spec.validate();
      plan.world = f.world.spec;
      if (plan.method == pc::Method::kOurs && f.world.spec.l_protos < 1) {
        pc::detail::fail(pc::ErrorCode::kInvalidArgument,
                         "method 'ours' requires --l-protos >= 1");
      }
    }
  } catch (const pc::Error& e) {
    std::cerr << "run: " << e.what() << "\n";
    return kExitFlags;
  }

  // Inputs.
  json inputs_echo;
  if (!plan.world) {
    try {
      plan.inputs = f.manifest.empty() ? inputs_from_files(f, inputs_echo)
                                       : inputs_from_manifest(f.manifest, inputs_echo);
      plan.inputs->validate();
    } catch (const pc::Error& e) {
      std::cerr << "run: " << e.what() << "\n";
      const int code = exit_code_for(e.code());
      return code == kExitFlags || code == kExitDegenerate ? kExitIo : code;
    }
  } else {
    inputs_echo = {{"synthetic", pc::to_json_value(*plan.world)}};
    inputs_echo["synthetic"].erase("seed");
  }

  config["method"] = pc::to_string(plan.method);
  config["hyperparameters"] = pc::to_json_value(plan.hp);
  config["stream_order"] = pc::to_string(plan.order);
  config["temporal"] = plan.temporal_names;
  config["seeds"] = plan.seeds;
  config["inputs"] = inputs_echo;
  config["out"] = f.out;
  config["save_state"] = f.save_state.empty() ? json() : json(f.save_state);

  std::vector<pc::SeedRun> runs;
  try {
    runs = pc::execute_plan(plan);
  } catch (const pc::Error& e) {
    std::cerr << "run: " << e.what() << "\n";
    return exit_code_for(e.code());
  }

  const pc::MethodSummary summary = pc::summarize(runs);
  json report;
  report["format"] = "protocalib-run-1";
  report["config"] = config;
  report["runs"] = json::array();
  for (const pc::SeedRun& r : runs) report["runs"].push_back(pc::to_json_value(r.run.report));
  report["summary"] = pc::to_json_value(summary);

  std::string csv = pc::kReportCsvHeader;
  for (const pc::SeedRun& r : runs) csv += pc::report_csv_rows(r.run.report);
  csv += pc::summary_csv_rows(summary, pc::to_string(plan.order));

  json streams = json::array();
  std::string scores = pc::kScoresCsvHeader;
  for (const pc::SeedRun& r : runs) {
    std::vector<std::string> sources;
    sources.reserve(r.run.samples.size());
    for (const pc::ScoredSample& s : r.run.samples) sources.push_back(s.source);
    streams.push_back({{"seed", r.seed}, {"sources", sources}});
    if (!f.no_scores) scores += pc::scores_csv_rows(r.seed, r.run.samples);
  }
  json stream_manifest = {{"order", pc::to_string(plan.order)},
                          {"temporal", plan.temporal_names},
                          {"streams", streams}};

  try {
    const fs::path out = f.out;
    write_json(out / "report.json", report);
    write_text(out / "report.csv", csv);
    write_json(out / "stream_manifest.json", stream_manifest);
    if (!f.no_scores) write_text(out / "scores.csv", scores);
    if (!f.save_state.empty()) {
      for (const pc::SeedRun& r : runs) {
        if (!r.run.final_state) {
          std::cerr << "run: --save-state ignored for stateless method "
                    << pc::to_string(plan.method) << "\n";
          break;
        }
        const fs::path prefix = state_prefix(f.save_state, r.seed, runs.size() > 1);
        if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
        pc::save_state(*r.run.final_state, prefix);
      }
    }
  } catch (const pc::Error& e) {
    std::cerr << "run: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "run: " << e.what() << "\n";
    return kExitIo;
  }

  std::printf("%s over %zu seed(s): AUROC %.4f +- %.4f, FPR95 %.4f +- %.4f\n",
              summary.method.c_str(), runs.size(), summary.auroc.mean, summary.auroc.std,
              summary.fpr95.mean, summary.fpr95.std);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyFlags {
  std::string which;
  std::optional<std::uint64_t> seed;
  std::optional<int> instances;
  std::vector<std::size_t> ns;
  std::string out;
};

int cmd_verify(const VerifyFlags& f) {
  json result;
  try {
    if (f.which == "grad") {
      pc::GradientCheckSettings s;
      if (f.seed) s.seed = *f.seed;
      if (f.instances) s.draws = *f.instances;
      result = pc::to_json_value(pc::verify_gradient(s), s);
    } else if (f.which == "thm1") {
      pc::FixedPointSettings s;
      if (f.seed) s.first_seed = *f.seed;
      if (f.instances) s.instances = *f.instances;
      result = pc::to_json_value(pc::verify_fixed_point(s), s);
    } else if (f.which == "thm3") {
      pc::GapCheckSettings s;
      if (f.seed) s.first_seed = *f.seed;
      if (f.instances) s.instances = *f.instances;
      result = pc::to_json_value(pc::verify_gap(s), s);
    } else if (f.which == "thm4") {
      pc::RegretCheckSettings s;
      if (f.seed) s.seed = *f.seed;
      if (!f.ns.empty()) s.ns = f.ns;
      result = pc::to_json_value(pc::verify_regret(s), s);
    } else if (f.which == "metrics") {
      pc::MetricsCheckSettings s;
      if (f.seed) s.seed = *f.seed;
      if (f.instances) s.sets = *f.instances;
      result = pc::to_json_value(pc::verify_metrics(s), s);
    } else {
      std::cerr << "verify: unknown check '" << f.which << "'\n";
      return kExitFlags;
    }
  } catch (const pc::Error& e) {
    std::cerr << "verify: " << e.what() << "\n";
    return e.code() == pc::ErrorCode::kInvalidArgument ? kExitFlags : kExitVerifyFailed;
  }
  if (f.out.empty()) {
    std::cout << result.dump(2) << "\n";
  } else {
    try {
      write_json(f.out, result);
    } catch (const std::exception& e) {
      std::cerr << "verify: " << e.what() << "\n";
      return kExitIo;
    }
    std::cout << f.which << ": " << (result["passed"].get<bool>() ? "pass" : "FAIL") << "\n";
  }
  return result["passed"].get<bool>() ? kExitOk : kExitVerifyFailed;
}

// ---------------------------------------------------------------------------
// report

struct ReportFlags {
  std::vector<std::string> inputs;
  std::string format = "table";
  std::string out;
};

int cmd_report(const ReportFlags& f) {
  if (f.format != "table" && f.format != "csv" && f.format != "json") {
    std::cerr << "report: unknown format '" << f.format << "'\n";
    return kExitFlags;
  }
  struct Entry {
    std::string path;
    std::string order;
    pc::MethodSummary summary;
    std::vector<pc::EvalReport> runs;
  };
  std::vector<Entry> entries;
  for (const std::string& path : f.inputs) {
    try {
      const json j = json::parse(pc::read_file(path));
      Entry e;
      e.path = path;
      e.order = j.at("config").at("stream_order").get<std::string>();
      std::vector<pc::SeedRun> runs;
      for (const json& r : j.at("runs")) {
        pc::SeedRun sr;
        sr.run.report = pc::eval_report_from_json(r);
        sr.seed = sr.run.report.metadata.seed;
        e.runs.push_back(sr.run.report);
        runs.push_back(std::move(sr));
      }
      e.summary = pc::summarize(runs);
      entries.push_back(std::move(e));
    } catch (const pc::Error& e) {
      std::cerr << "report: " << path << ": " << e.what() << "\n";
      return kExitIo;
    } catch (const json::exception& e) {
      std::cerr << "report: " << path << ": " << e.what() << "\n";
      return kExitIo;
    }
  }

  std::ostringstream text;
  if (f.format == "json") {
    json j = json::array();
    for (const Entry& e : entries) {
      json s = pc::to_json_value(e.summary);
      s["stream_order"] = e.order;
      s["source"] = e.path;
      s["seeds"] = e.runs.size();
      j.push_back(s);
    }
    text << j.dump(2) << "\n";
  } else if (f.format == "csv") {
    text << pc::kReportCsvHeader;
    for (const Entry& e : entries) {
      for (const pc::EvalReport& r : e.runs) text << pc::report_csv_rows(r);
      text << pc::summary_csv_rows(e.summary, e.order);
    }
  } else {
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %-10s %5s  %-17s %-17s\n", "method", "order",
                  "seeds", "AUROC", "FPR95");
    text << line;
    for (const Entry& e : entries) {
      std::snprintf(line, sizeof line, "%-14s %-10s %5zu  %.4f +- %.4f  %.4f +- %.4f\n",
                    e.summary.method.c_str(), e.order.c_str(), e.runs.size(),
                    e.summary.auroc.mean, e.summary.auroc.std, e.summary.fpr95.mean,
                    e.summary.fpr95.std);
      text << line;
    }
  }
  if (f.out.empty()) {
    std::cout << text.str();
  } else {
    try {
      write_text(f.out, text.str());
    } catch (const std::exception& e) {
      std::cerr << "report: " << e.what() << "\n";
      return kExitIo;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online prototype calibration for post-hoc OOD detection"};
  app.require_subcommand(1);

  GenFlags gen;
  gen.world.spec.l_protos = 0;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Write a synthetic embedding world");
  gen.world.add_to(gen_cmd);
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->capture_default_str();

  RunFlags run;
  CLI::App* run_cmd = app.add_subcommand("run", "Score a stream with one method");
  run.world.add_to(run_cmd);
  run_cmd->add_option("--method", run.method, "mcm | neglabel | ours | ours-id-only")
      ->capture_default_str();
  run_cmd->add_option("--tau", run.hp.tau, "Score temperature")->capture_default_str();
  run_cmd->add_option("--kappa", run.hp.kappa, "Loss temperature")->capture_default_str();
  run_cmd->add_option("--rho", run.hp.rho, "Step-size scale")->capture_default_str();
  run_cmd->add_option("--beta", run.hp.beta, "Gate threshold")->capture_default_str();
  run_cmd->add_option("--order", run.order, "random | id-first | ood-first | temporal")
      ->capture_default_str();
  run_cmd->add_option("--temporal", run.temporal, "OOD dataset order for --order temporal")
      ->delimiter(',');
  run_cmd->add_option("--seeds", run.seeds, "Explicit seed list");
  run_cmd->add_option("--first-seed", run.first_seed, "First seed when --seeds is absent")
      ->capture_default_str();
  run_cmd->add_option("--seed-count", run.seed_count, "Number of consecutive seeds")
      ->capture_default_str();
  run_cmd->add_option("--manifest", run.manifest, "World manifest written by gen");
  run_cmd->add_option("--id-file", run.id_files, "ID sample file (EMB1 or .csv)");
  run_cmd->add_option("--ood-file", run.ood_files, "OOD dataset as name=path");
  run_cmd->add_option("--text-id", run.text_id, "ID text prototype file");
  run_cmd->add_option("--text-neg", run.text_neg, "Negative text prototype file");
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--save-state", run.save_state, "Write the final detector state here");
  run_cmd->add_flag("--no-scores", run.no_scores, "Skip the per-sample score CSV");

  VerifyFlags verify;
  CLI::App* verify_cmd = app.add_subcommand("verify", "Run a verification experiment");
  verify_cmd->add_option("check", verify.which, "grad | thm1 | thm3 | thm4 | metrics")
      ->required()
      ->check(CLI::IsMember({"grad", "thm1", "thm3", "thm4", "metrics"}));
  verify_cmd->add_option("--seed", verify.seed, "Seed (first seed for multi-instance checks)");
  verify_cmd->add_option("--instances", verify.instances, "Instance, draw or set count");
  verify_cmd->add_option("--n", verify.ns, "Stream lengths for thm4");
  verify_cmd->add_option("--out", verify.out, "Write the JSON result here");

  ReportFlags report;
  CLI::App* report_cmd = app.add_subcommand("report", "Summarize run reports");
  report_cmd->add_option("--input", report.inputs, "report.json from a run")->required();
  report_cmd->add_option("--format", report.format, "table | csv | json")
      ->capture_default_str();
  report_cmd->add_option("--out", report.out, "Write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitFlags;
  }

  if (gen_cmd->parsed()) return cmd_gen(gen);
  if (run_cmd->parsed()) return cmd_run(run);
  if (verify_cmd->parsed()) return cmd_verify(verify);
  return cmd_report(report);
}
