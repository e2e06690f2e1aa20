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

// Self-contained numerical experiments with pass/fail verdicts. Each takes
// its seeds explicitly and is deterministic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "protocalib/gap.hpp"
#include "protocalib/geometry.hpp"
#include "protocalib/harness.hpp"
#include "protocalib/metrics.hpp"
#include "protocalib/objective.hpp"
#include "protocalib/online.hpp"
#include "protocalib/scoring.hpp"
#include "protocalib/stream.hpp"
#include "protocalib/synthetic.hpp"

namespace protocalib {

// ---------------------------------------------------------------------------
// Analytic gradient against central differences.

struct GradientCheckSettings {
  std::uint64_t seed = 1;
  int draws = 20;
  std::size_t d = 16;
  std::size_t m = 5;
  std::vector<double> kappas{0.05, 1.0};
  double fd_step = 1e-5;
  double tolerance = 1e-5;
};

struct GradientCheckResult {
  struct Case {
    int draw = 0;
    double kappa = 0.0;
    double relative_error = 0.0;
    double grad_norm = 0.0;
  };
  std::vector<Case> cases;
  double max_relative_error = 0.0;
  double max_grad_norm_excess = -std::numeric_limits<double>::infinity();
  bool passed = false;
};

namespace detail {

// Cross-entropy on an unconstrained M x d matrix, so finite differences can
// step off the sphere.
inline double raw_pseudo_loss(const std::vector<Vec>& W, const Vec& z, const Vec& p,
                              double kappa) {
  Vec logits(W.size());
  for (std::size_t y = 0; y < W.size(); ++y) {
    double s = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) s += W[y][k] * z[k];
    logits[y] = s / kappa;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  const double lse = top + std::log(sum);
  double loss = 0.0;
  for (std::size_t y = 0; y < W.size(); ++y) loss += p[y] * (lse - logits[y]);
  return loss;
}

}  // namespace detail

inline GradientCheckResult verify_gradient(const GradientCheckSettings& s = {}) {
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> normal;
  GradientCheckResult out;
  out.max_relative_error = 0.0;
  for (int draw = 0; draw < s.draws; ++draw) {
    std::vector<UnitVector> W;
    for (std::size_t y = 0; y < s.m; ++y) W.push_back(detail::uniform_on_sphere(s.d, rng));
    const UnitVector z = detail::uniform_on_sphere(s.d, rng);
    Vec p(s.m);
    double total = 0.0;
    for (double& q : p) total += (q = std::exp(normal(rng)));
    for (double& q : p) q /= total;
    const PseudoLabel pseudo{p};

    for (double kappa : s.kappas) {
      const RowMatrix g = grad_pseudo_loss(W, z, pseudo, kappa);
      std::vector<Vec> raw;
      for (const UnitVector& w : W) raw.push_back(w.vec());
      double diff_sq = 0.0, fd_sq = 0.0;
      for (std::size_t y = 0; y < s.m; ++y) {
        for (std::size_t k = 0; k < s.d; ++k) {
          const double keep = raw[y][k];
          raw[y][k] = keep + s.fd_step;
          const double up = detail::raw_pseudo_loss(raw, z.vec(), p, kappa);
          raw[y][k] = keep - s.fd_step;
          const double down = detail::raw_pseudo_loss(raw, z.vec(), p, kappa);
          raw[y][k] = keep;
          const double fd = (up - down) / (2.0 * s.fd_step);
          diff_sq += (g(y, k) - fd) * (g(y, k) - fd);
          fd_sq += fd * fd;
        }
      }
      const double rel = std::sqrt(diff_sq) / std::max(std::sqrt(fd_sq), 1e-300);
      const double norm = g.frobenius_norm();
      out.cases.push_back({draw, kappa, rel, norm});
      out.max_relative_error = std::max(out.max_relative_error, rel);
      out.max_grad_norm_excess =
          std::max(out.max_grad_norm_excess, norm - std::sqrt(2.0) / kappa);
    }
  }
  out.passed = out.max_relative_error < s.tolerance && out.max_grad_norm_excess <= 1e-9;
  return out;
}

// ---------------------------------------------------------------------------
// Fixed point of the batch optimum.

struct FixedPointSettings {
  std::uint64_t first_seed = 0;
  int instances = 10;
  SyntheticWorldSpec world = [] {
    SyntheticWorldSpec w;
    w.d = 8;
    w.k = 4;
    w.l_true = 1;
    w.l_protos = 0;
    w.n_per_class = 50;
    w.noise_sigma = 0.3;
    w.gap_angle_deg = 30.0;
    w.min_mean_angle_deg = 60.0;
    return w;
  }();
  double kappa = 0.05;
  // Per-sample step; the optimizer receives step / N.
  double step = 0.2;
  int max_steps = 50000;
  double stall_tolerance = 1e-15;
  double tolerance = 1e-3;
};

struct FixedPointResult {
  struct Instance {
    std::uint64_t seed = 0;
    double loss = 0.0;
    int steps_run = 0;
    FixedPointResidual residuals;
    double max_residual = 0.0;
    bool passed = false;
  };
  std::vector<Instance> instances;
  double max_residual = 0.0;
  bool passed = false;
};

// Labeled ID samples of a world; labels are class indices.
inline LabeledBatch labeled_id_batch(const SyntheticWorld& world) {
  LabeledBatch batch;
  for (std::size_t c = 0; c < world.id_batches.size(); ++c) {
    batch.label_space.push_back(static_cast<int>(c));
    for (const UnitVector& z : world.id_batches[c]) {
      batch.rows.push_back({z, static_cast<int>(c)});
    }
  }
  return batch;
}

// Normalized per-class sample sums; nullopt when a class sum vanishes.
inline std::optional<std::vector<UnitVector>> class_sum_init(const LabeledBatch& batch) {
  std::vector<Vec> sums(batch.label_space.size(), Vec(batch.dim(), 0.0));
  for (const LabeledSample& row : batch.rows) {
    axpy(1.0, row.z.values(), sums[batch.index_of(row.label)]);
  }
  std::vector<UnitVector> init;
  for (const Vec& s : sums) {
    if (norm2(s) < kZeroNormThreshold) return std::nullopt;
    init.push_back(l2_normalize(s));
  }
  return init;
}

inline FixedPointResult verify_fixed_point(const FixedPointSettings& s = {}) {
  FixedPointResult out;
  out.passed = true;
  for (int i = 0; i < s.instances; ++i) {
    SyntheticWorldSpec spec = s.world;
    spec.seed = s.first_seed + static_cast<std::uint64_t>(i);
    const LabeledBatch batch = labeled_id_batch(generate_world(spec));
    const SoftBatch soft = SoftBatch::from_labeled(batch);
    FixedPointResult::Instance inst;
    inst.seed = spec.seed;
    auto init = class_sum_init(batch);
    if (!init) {
      inst.passed = false;
      inst.max_residual = std::numeric_limits<double>::infinity();
      out.passed = false;
      out.instances.push_back(inst);
      continue;
    }
    const double n = static_cast<double>(batch.rows.size());
    const BatchMinimizeResult opt = batch_minimize(
        soft, s.kappa, std::move(*init),
        BatchMinimizeOptions{s.max_steps, s.step / n, s.stall_tolerance});
    inst.loss = opt.loss;
    inst.steps_run = opt.steps_run;
    inst.residuals = fixed_point_residual(opt.prototypes, soft, s.kappa);
    inst.passed = true;
    for (const auto& r : inst.residuals) {
      // A degenerate class has no fixed point to certify.
      const double value = r ? *r : std::numeric_limits<double>::infinity();
      inst.max_residual = std::max(inst.max_residual, value);
      if (!(value < s.tolerance)) inst.passed = false;
    }
    out.max_residual = std::max(out.max_residual, inst.max_residual);
    out.passed = out.passed && inst.passed;
    out.instances.push_back(std::move(inst));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projection lower bound on the text-visual gap.

struct GapCheckSettings {
  std::uint64_t first_seed = 1;
  int instances = 50;
  // d exceeds the total sample count (K + L_true) * n so the visual span
  // has a nontrivial complement.
  SyntheticWorldSpec world = [] {
    SyntheticWorldSpec w;
    w.d = 32;
    w.k = 3;
    w.l_true = 1;
    w.l_protos = 0;
    w.n_per_class = 4;
    w.noise_sigma = 0.2;
    w.min_mean_angle_deg = 60.0;
    return w;
  }();
  double min_gap_deg = 5.0;
  double max_gap_deg = 85.0;
  double kappa = 0.05;
  GapOptimizerSettings optimizer;
  double zero_tolerance = 1e-9;
};

struct GapCheckResult {
  struct Instance {
    std::uint64_t seed = 0;
    double gap_angle_deg = 0.0;
    GapReport outside;            // text prototypes with out-of-span parts
    GapReport inside;             // text prototypes built inside the span
    bool passed = false;
  };
  std::vector<Instance> instances;
  int satisfied = 0;
  double max_inside_bound = 0.0;
  bool passed = false;
};

inline GapCheckResult verify_gap(const GapCheckSettings& s = {}) {
  GapCheckResult out;
  out.passed = true;
  for (int i = 0; i < s.instances; ++i) {
    SyntheticWorldSpec spec = s.world;
    spec.seed = s.first_seed + static_cast<std::uint64_t>(i);
    std::mt19937_64 rng(spec.seed);
    spec.gap_angle_deg =
        std::uniform_real_distribution<double>(s.min_gap_deg, s.max_gap_deg)(rng);
    const SyntheticWorld world = generate_world(spec);
    const LabeledBatch batch = labeled_id_batch(world);

    GapCheckResult::Instance inst;
    inst.seed = spec.seed;
    inst.gap_angle_deg = spec.gap_angle_deg;
    inst.outside = verify_gap_theorem(world.text_id_prototypes, batch, s.kappa, s.optimizer);

    // Inside-span prototypes: random positive mixtures of each class's samples.
    std::uniform_real_distribution<double> weight(0.1, 1.0);
    std::vector<UnitVector> inside;
    for (const auto& cls : world.id_batches) {
      Vec mix(spec.d, 0.0);
      for (const UnitVector& z : cls) axpy(weight(rng), z.values(), mix);
      inside.push_back(l2_normalize(mix));
    }
    inst.inside = verify_gap_theorem(inside, batch, s.kappa, s.optimizer);

    inst.passed = inst.outside.satisfied && inst.inside.satisfied &&
                  inst.inside.bound_total <= s.zero_tolerance;
    out.satisfied += inst.outside.satisfied ? 1 : 0;
    out.max_inside_bound = std::max(out.max_inside_bound, inst.inside.bound_total);
    out.passed = out.passed && inst.passed;
    out.instances.push_back(std::move(inst));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Online regret against the best fixed prototypes in hindsight.

struct RegretCheckSettings {
  std::uint64_t seed = 1;
  std::vector<std::size_t> ns{1000, 4000, 16000};
  // Text prototypes start 60 degrees off the visual means; one label per
  // ID class, so M = K.
  SyntheticWorldSpec world = [] {
    SyntheticWorldSpec w;
    w.d = 8;
    w.k = 4;
    w.l_true = 1;
    w.l_protos = 0;
    w.noise_sigma = 0.2;
    w.gap_angle_deg = 60.0;
    w.min_mean_angle_deg = 60.0;
    return w;
  }();
  double kappa = 0.05;
  double rho = 0.1;
  double pseudo_temperature = 0.01;
  // Batch optimum: per-sample step (divided by N), from two starts.
  double optimizer_step = 0.2;
  int optimizer_steps = 5000;
  double stall_tolerance = 1e-13;
};

struct RegretCheckResult {
  struct Point {
    std::size_t n = 0;
    double cumulative_loss = 0.0;
    double optimum_loss = 0.0;
    double observed_grad_bound = 0.0;
    RegretReport report;
    double regret_per_sqrt_n = 0.0;
  };
  std::vector<Point> points;
  bool bound_satisfied = false;
  bool ratio_non_increasing = false;
  bool passed = false;
};

inline RegretCheckResult verify_regret(const RegretCheckSettings& s = {}) {
  detail::require(!s.ns.empty(), ErrorCode::kInvalidArgument, "no stream lengths given");
  const std::size_t longest = *std::max_element(s.ns.begin(), s.ns.end());
  SyntheticWorldSpec spec = s.world;
  spec.seed = s.seed;
  const std::size_t k = static_cast<std::size_t>(spec.k);
  spec.n_per_class = static_cast<int>((longest + k - 1) / k);
  const SyntheticWorld world = generate_world(spec);
  std::vector<UnitVector> id;
  for (const auto& b : world.id_batches) id.insert(id.end(), b.begin(), b.end());
  const Stream stream = make_stream(id, {}, StreamOrder::random(s.seed));
  const PrototypeBank frozen = PrototypeBank::from_vectors(world.text_id_prototypes, {});
  const std::vector<int> labels = frozen.id_labels();

  RegretCheckResult out;
  out.bound_satisfied = true;
  out.ratio_non_increasing = true;
  for (std::size_t n : s.ns) {
    std::vector<UnitVector> prefix;
    prefix.reserve(n);
    for (std::size_t i = 0; i < n; ++i) prefix.push_back(stream[i].z);
    OnlineSgdResult run =
        online_sgd(prefix, labels, frozen, s.kappa, s.rho, s.pseudo_temperature);
    const BatchMinimizeOptions opts{s.optimizer_steps,
                                    s.optimizer_step / static_cast<double>(n),
                                    s.stall_tolerance};
    const double from_online = batch_minimize(run.batch, s.kappa, run.prototypes, opts).loss;
    const double from_text =
        batch_minimize(run.batch, s.kappa, world.text_id_prototypes, opts).loss;
    run.ledger.batch_optimum_loss = std::min(from_online, from_text);

    RegretCheckResult::Point p;
    p.n = n;
    p.cumulative_loss = run.ledger.cumulative_online_loss;
    p.optimum_loss = *run.ledger.batch_optimum_loss;
    p.observed_grad_bound = run.ledger.observed_grad_bound;
    p.report = regret_bound_check(run.ledger, labels.size(), s.rho);
    p.regret_per_sqrt_n = p.report.regret / std::sqrt(static_cast<double>(n));
    out.bound_satisfied = out.bound_satisfied && p.report.satisfied;
    if (!out.points.empty() && p.regret_per_sqrt_n > out.points.back().regret_per_sqrt_n) {
      out.ratio_non_increasing = false;
    }
    out.points.push_back(p);
  }
  out.passed = out.bound_satisfied && out.ratio_non_increasing;
  return out;
}

// ---------------------------------------------------------------------------
// Metrics against brute-force oracles.

struct MetricsCheckSettings {
  std::uint64_t seed = 1;
  int sets = 100;
  std::size_t max_points = 1000;
};

struct MetricsCheckResult {
  int sets = 0;
  int auroc_mismatches = 0;
  int fpr_mismatches = 0;
  bool passed = false;
};

// Fraction of (id, ood) pairs with id > ood, ties counted one half.
inline double pairwise_auroc(const ScoreSet& ss) {
  std::int64_t greater = 0, ties = 0;
  for (double a : ss.id_scores) {
    for (double b : ss.ood_scores) {
      if (a > b) ++greater;
      else if (a == b) ++ties;
    }
  }
  return static_cast<double>(2 * greater + ties) /
         (2.0 * static_cast<double>(ss.id_scores.size()) *
          static_cast<double>(ss.ood_scores.size()));
}

// Tries every ID score (and -inf) as the threshold and keeps the largest
// one whose TPR reaches `level`.
inline double sweep_fpr(const ScoreSet& ss, double level) {
  const double n = static_cast<double>(ss.id_scores.size());
  double best = -std::numeric_limits<double>::infinity();
  for (double t : ss.id_scores) {
    std::size_t hits = 0;
    for (double a : ss.id_scores) hits += a >= t ? 1 : 0;
    if (static_cast<double>(hits) / n >= level && t > best) best = t;
  }
  std::size_t fp = 0;
  for (double b : ss.ood_scores) fp += b >= best ? 1 : 0;
  return static_cast<double>(fp) / static_cast<double>(ss.ood_scores.size());
}

// Half of the sets draw from a coarse grid so ties are common.
inline ScoreSet random_score_set(std::mt19937_64& rng, std::size_t max_points, bool coarse) {
  std::uniform_int_distribution<std::size_t> size(1, max_points);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> grid(0, 20);
  const double shift = std::uniform_real_distribution<double>(-1.0, 2.0)(rng);
  ScoreSet ss;
  ss.id_scores.resize(size(rng));
  ss.ood_scores.resize(size(rng));
  for (double& v : ss.id_scores) v = coarse ? grid(rng) * 0.05 + 0.25 * shift : normal(rng) + shift;
  for (double& v : ss.ood_scores) v = coarse ? grid(rng) * 0.05 : normal(rng);
  return ss;
}

inline MetricsCheckResult verify_metrics(const MetricsCheckSettings& s = {}) {
  std::mt19937_64 rng(s.seed);
  MetricsCheckResult out;
  for (int i = 0; i < s.sets; ++i) {
    const ScoreSet ss = random_score_set(rng, s.max_points, i % 2 == 0);
    if (auroc(ss) != pairwise_auroc(ss)) ++out.auroc_mismatches;
    if (fpr_at_tpr(ss, 0.95) != sweep_fpr(ss, 0.95)) ++out.fpr_mismatches;
    ++out.sets;
  }
  out.passed = out.auroc_mismatches == 0 && out.fpr_mismatches == 0;
  return out;
}

// ---------------------------------------------------------------------------
// Streaming-detector state invariants.

struct StateInvariantResult {
  bool unit_norm = true;
  bool freeze = true;
  bool exclusivity = true;
  bool schedule = true;
  bool memory = true;
  double worst_norm_error = 0.0;
  std::size_t steps_checked = 0;
  bool passed() const { return unit_norm && freeze && exclusivity && schedule && memory; }
};

inline StateInvariantResult verify_state_invariants(std::uint64_t seed = 1) {
  StateInvariantResult out;
  SyntheticWorldSpec spec;
  spec.d = 16;
  spec.k = 5;
  spec.l_true = 2;
  spec.l_protos = 5;
  spec.n_per_class = 100;
  spec.seed = seed;
  const SyntheticWorld world = generate_world(spec);
  const RunInputs inputs = inputs_from_world(world);
  const Hyperparams hp;
  const std::size_t expected_reals =
      static_cast<std::size_t>(spec.d) * static_cast<std::size_t>(spec.k + spec.l_protos);

  for (StreamOrderKind kind : {StreamOrderKind::kRandom, StreamOrderKind::kIdFirst,
                               StreamOrderKind::kOodFirst}) {
    const Stream stream = make_stream(inputs.id, inputs.ood, make_order(kind, seed, {}));
    DetectorState state = init_state(inputs.text_id, inputs.text_neg, hp);
    for (const StreamItem& item : stream) {
      const std::uint64_t before_plus = state.c_plus, before_minus = state.c_minus;
      const StepTrace t = detector_step(state, item.z);
      ++out.steps_checked;
      for (const UnitVector& w : state.current_bank.all_vectors()) {
        const double err = std::abs(norm2(w.values()) - 1.0);
        out.worst_norm_error = std::max(out.worst_norm_error, err);
        if (err > kUnitNormTolerance) out.unit_norm = false;
      }
      // Exactly one counter moves for a gated sample, none otherwise.
      const bool pos = t.gate_score >= hp.beta, neg = t.gate_score <= 1.0 - hp.beta;
      const std::uint64_t dp = state.c_plus - before_plus, dm = state.c_minus - before_minus;
      const bool consistent =
          (t.branch == Branch::kPositive && pos && !neg && dp == 1 && dm == 0) ||
          (t.branch == Branch::kNegative && neg && !pos && dp == 0 && dm == 1) ||
          (t.branch == Branch::kUncertain && !pos && !neg && dp == 0 && dm == 0);
      if (!consistent || state.c_plus + state.c_minus > state.step_index) {
        out.exclusivity = false;
      }
      std::optional<double> expected;
      if (t.branch == Branch::kPositive) {
        expected = hp.rho / std::sqrt(static_cast<double>(state.c_plus));
      } else if (t.branch == Branch::kNegative) {
        expected = hp.rho / std::sqrt(static_cast<double>(state.c_minus));
      }
      if (expected != t.step_size_used) out.schedule = false;
      if (state.mutable_prototype_reals() != expected_reals) out.memory = false;
    }
  }

  // Samples the frozen gate leaves Uncertain must not move the bank.
  DetectorState state = init_state(inputs.text_id, inputs.text_neg, hp);
  std::mt19937_64 rng(seed);
  std::size_t uncertain = 0;
  for (int tries = 0; tries < 200000 && uncertain < 200; ++tries) {
    // Midpoints between an ID and a negative prototype land near score 0.5.
    const UnitVector& a = inputs.text_id[rng() % inputs.text_id.size()];
    const UnitVector& b = inputs.text_neg[rng() % inputs.text_neg.size()];
    const double mix = std::uniform_real_distribution<double>(0.3, 0.7)(rng);
    Vec v(a.dim());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = mix * a[k] + (1.0 - mix) * b[k];
    const UnitVector z = l2_normalize(v);
    const double s = score_neglabel(z, state.frozen_bank, hp.tau);
    if (gate(s, hp.beta) != Branch::kUncertain) continue;
    const StepTrace t = detector_step(state, z);
    ++uncertain;
    if (t.branch != Branch::kUncertain || t.step_size_used.has_value() ||
        t.final_score != s) {
      out.freeze = false;
    }
  }
  if (uncertain == 0 || state.current_bank.all_vectors() != state.frozen_bank.all_vectors() ||
      state.c_plus != 0 || state.c_minus != 0 || state.step_index != uncertain) {
    out.freeze = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic benchmark shared by the method-ordering and order-robustness
// checks.

inline SyntheticWorldSpec benchmark_world() {
  SyntheticWorldSpec w;  // d=64, K=20, L_true=4, L_protos=20, sigma 0.2, gap 30
  return w;
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
  return seeds;
}

struct BenchmarkResult {
  Method method = Method::kOurs;
  StreamOrderKind order = StreamOrderKind::kRandom;
  std::vector<double> per_seed_auroc;
  MeanStd auroc;
  MeanStd fpr95;
};

inline BenchmarkResult run_benchmark(Method method, StreamOrderKind order,
                                     const std::vector<std::uint64_t>& seeds,
                                     const Hyperparams& hp = {},
                                     const SyntheticWorldSpec& world = benchmark_world()) {
  RunPlan plan;
  plan.method = method;
  plan.hp = hp;
  plan.order = order;
  plan.seeds = seeds;
  plan.world = world;
  plan.keep_samples = false;
  const std::vector<SeedRun> runs = execute_plan(plan);
  BenchmarkResult out;
  out.method = method;
  out.order = order;
  for (const SeedRun& r : runs) out.per_seed_auroc.push_back(r.run.report.averages.auroc);
  const MethodSummary summary = summarize(runs);
  out.auroc = summary.auroc;
  out.fpr95 = summary.fpr95;
  return out;
}

}  // namespace protocalib
