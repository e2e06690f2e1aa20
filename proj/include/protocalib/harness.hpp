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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "protocalib/error.hpp"
#include "protocalib/metrics.hpp"
#include "protocalib/online.hpp"
#include "protocalib/scoring.hpp"
#include "protocalib/stream.hpp"
#include "protocalib/synthetic.hpp"

namespace protocalib {

enum class Method { kMcm, kNegLabel, kOurs, kOursIdOnly };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::kMcm: return "mcm";
    case Method::kNegLabel: return "neglabel";
    case Method::kOurs: return "ours";
    case Method::kOursIdOnly: return "ours-id-only";
  }
  return "unknown";
}

inline Method parse_method(const std::string& name) {
  if (name == "mcm") return Method::kMcm;
  if (name == "neglabel") return Method::kNegLabel;
  if (name == "ours") return Method::kOurs;
  if (name == "ours-id-only") return Method::kOursIdOnly;
  detail::fail(ErrorCode::kInvalidArgument, "unknown method '" + name + "'");
}

// Everything a detection run consumes: the test samples and the initial
// text prototypes.
struct RunInputs {
  std::vector<UnitVector> id;
  std::vector<NamedBatch> ood;
  std::vector<UnitVector> text_id;
  std::vector<UnitVector> text_neg;

  std::size_t dim() const { return text_id.front().dim(); }

  void validate() const {
    detail::require(!text_id.empty(), ErrorCode::kEmptyPrototypeList,
                    "no ID text prototypes");
    detail::require(!id.empty(), ErrorCode::kEmptyScores, "no ID samples");
    detail::require(!ood.empty(), ErrorCode::kEmptyScores, "no OOD datasets");
    const std::size_t d = dim();
    auto check = [&](const std::vector<UnitVector>& vs, const std::string& what) {
      for (const UnitVector& v : vs) detail::require_same_dim(v.dim(), d, what);
    };
    check(text_id, "text ID prototype dimension");
    check(text_neg, "text negative prototype dimension");
    check(id, "ID sample dimension");
    for (const NamedBatch& b : ood) {
      detail::require(!b.vectors.empty(), ErrorCode::kEmptyScores,
                      "OOD dataset '" + b.name + "' is empty");
      check(b.vectors, "OOD sample dimension (" + b.name + ")");
    }
  }
};

inline std::string ood_dataset_name(std::size_t j) { return "ood-" + std::to_string(j); }

inline RunInputs inputs_from_world(const SyntheticWorld& world) {
  RunInputs in;
  for (const auto& batch : world.id_batches) in.id.insert(in.id.end(), batch.begin(), batch.end());
  for (std::size_t j = 0; j < world.ood_batches.size(); ++j) {
    in.ood.push_back({ood_dataset_name(j), world.ood_batches[j]});
  }
  in.text_id = world.text_id_prototypes;
  in.text_neg = world.text_neg_prototypes;
  return in;
}

struct ScoredSample {
  std::string source;
  Truth truth = Truth::kId;
  double score = 0.0;
  Branch branch = Branch::kUncertain;
};

struct MethodRun {
  std::vector<ScoredSample> samples;
  EvalReport report;
  std::optional<DetectorState> final_state;  // set for the streaming methods
};

// Scores every stream element with `method`. Truth tags travel only to the
// metric side; the detector sees vectors.
inline MethodRun run_method(const Stream& stream, const RunInputs& inputs,
                            Method method, const Hyperparams& hp,
                            RunMetadata metadata) {
  hp.validate();
  if (method == Method::kOurs) {
    detail::require(!inputs.text_neg.empty(), ErrorCode::kInvalidArgument,
                    "method 'ours' needs at least one negative prototype");
  }
  MethodRun run;
  run.samples.reserve(stream.size());
  DetectorState state = init_state(inputs.text_id, inputs.text_neg, hp);
  for (const StreamItem& item : stream) {
    ScoredSample s{item.source, item.truth, 0.0, Branch::kUncertain};
    switch (method) {
      case Method::kMcm:
        s.score = score_mcm(item.z, state.frozen_bank, hp.tau);
        break;
      case Method::kNegLabel:
        s.score = score_neglabel(item.z, state.frozen_bank, hp.tau);
        break;
      case Method::kOurs: {
        const StepTrace t = detector_step(state, item.z);
        s.score = t.final_score;
        s.branch = t.branch;
        break;
      }
      case Method::kOursIdOnly: {
        const StepTrace t = detector_step_id_only(state, item.z);
        s.score = t.final_score;
        s.branch = t.branch;
        break;
      }
    }
    run.samples.push_back(std::move(s));
  }
  if (method == Method::kOurs || method == Method::kOursIdOnly) run.final_state = state;

  std::vector<double> id_scores;
  std::map<std::string, std::vector<double>> by_source;
  for (const ScoredSample& s : run.samples) {
    if (s.truth == Truth::kId) {
      id_scores.push_back(s.score);
    } else {
      by_source[s.source].push_back(s.score);
    }
  }
  // Datasets keep the caller's order, not the map's.
  std::vector<std::pair<std::string, std::vector<double>>> ood_scores;
  for (const NamedBatch& b : inputs.ood) {
    ood_scores.emplace_back(b.name, std::move(by_source[b.name]));
  }
  metadata.method = to_string(method);
  metadata.hyperparameters = {{"tau", hp.tau}, {"kappa", hp.kappa},
                              {"rho", hp.rho}, {"beta", hp.beta}};
  run.report = evaluate_run(id_scores, ood_scores, metadata);
  return run;
}

// Worker cap: PROTOCALIB_THREADS if set to a positive integer, otherwise the
// machine's core count.
inline unsigned worker_count() {
  if (const char* env = std::getenv("PROTOCALIB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs job(i) for i in [0, n) on up to `workers` threads. The first
// exception thrown by any job is rethrown after all workers join.
template <typename Job>
void parallel_for(std::size_t n, unsigned workers, Job&& job) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= n || error) return;
          i = next++;
        }
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline StreamOrder make_order(StreamOrderKind kind, std::uint64_t seed,
                              const std::vector<std::string>& temporal_names) {
  switch (kind) {
    case StreamOrderKind::kRandom: return StreamOrder::random(seed);
    case StreamOrderKind::kIdFirst: return StreamOrder::id_first(seed);
    case StreamOrderKind::kOodFirst: return StreamOrder::ood_first(seed);
    case StreamOrderKind::kTemporal: return StreamOrder::temporal(temporal_names, seed);
  }
  return StreamOrder::random(seed);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over seeds
};

inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

struct SeedRun {
  std::uint64_t seed = 0;
  MethodRun run;
};

struct MethodSummary {
  std::string method;
  MeanStd auroc;
  MeanStd fpr95;
  // Per dataset, in input order.
  std::vector<std::pair<std::string, std::pair<MeanStd, MeanStd>>> per_dataset;
};

inline MethodSummary summarize(const std::vector<SeedRun>& runs) {
  detail::require(!runs.empty(), ErrorCode::kInvalidArgument, "no runs to summarize");
  MethodSummary s;
  s.method = runs.front().run.report.metadata.method;
  std::vector<double> a, f;
  for (const SeedRun& r : runs) {
    a.push_back(r.run.report.averages.auroc);
    f.push_back(r.run.report.averages.fpr95);
  }
  s.auroc = mean_std(a);
  s.fpr95 = mean_std(f);
  const auto& first = runs.front().run.report.per_dataset;
  for (std::size_t j = 0; j < first.size(); ++j) {
    std::vector<double> da, df;
    for (const SeedRun& r : runs) {
      da.push_back(r.run.report.per_dataset.at(j).second.auroc);
      df.push_back(r.run.report.per_dataset.at(j).second.fpr95);
    }
    s.per_dataset.push_back({first[j].first, {mean_std(da), mean_std(df)}});
  }
  return s;
}

// Multi-seed run. With a world spec, each seed regenerates the world
// (world.seed = seed) and orders its stream with the same seed; with fixed
// inputs only the stream order varies.
struct RunPlan {
  Method method = Method::kOurs;
  Hyperparams hp;
  StreamOrderKind order = StreamOrderKind::kRandom;
  std::vector<std::string> temporal_names;
  std::vector<std::uint64_t> seeds{0};
  std::optional<SyntheticWorldSpec> world;
  std::optional<RunInputs> inputs;
  bool keep_samples = true;
};

inline std::vector<SeedRun> execute_plan(const RunPlan& plan,
                                         unsigned workers = worker_count()) {
  detail::require(plan.world.has_value() != plan.inputs.has_value(),
                  ErrorCode::kInvalidArgument,
                  "a run plan needs exactly one of a world spec or fixed inputs");
  detail::require(!plan.seeds.empty(), ErrorCode::kInvalidArgument, "no seeds given");
  if (plan.inputs) plan.inputs->validate();
  std::vector<SeedRun> out(plan.seeds.size());
  parallel_for(plan.seeds.size(), workers, [&](std::size_t i) {
    const std::uint64_t seed = plan.seeds[i];
    RunInputs generated;
    const RunInputs* inputs = &generated;
    if (plan.world) {
      SyntheticWorldSpec spec = *plan.world;
      spec.seed = seed;
      generated = inputs_from_world(generate_world(spec));
    } else {
      inputs = &*plan.inputs;
    }
    const Stream stream = make_stream(inputs->id, inputs->ood,
                                      make_order(plan.order, seed, plan.temporal_names));
    RunMetadata meta;
    meta.seed = seed;
    meta.stream_order = to_string(plan.order);
    out[i] = SeedRun{seed, run_method(stream, *inputs, plan.method, plan.hp, meta)};
    if (!plan.keep_samples) out[i].run.samples.clear();
  });
  return out;
}

}  // namespace protocalib
