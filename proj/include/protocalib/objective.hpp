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

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "protocalib/error.hpp"
#include "protocalib/geometry.hpp"
#include "protocalib/scoring.hpp"

namespace protocalib {

struct LabeledSample {
  UnitVector z;
  int label = 0;
};

// Hard-labelled samples over an ordered label space; prototype matrices
// passed alongside are indexed in label_space order.
struct LabeledBatch {
  std::vector<LabeledSample> rows;
  std::vector<int> label_space;

  std::size_t dim() const { return rows.front().z.dim(); }

  // Position of `label` inside label_space; UnknownLabel if absent.
  std::size_t index_of(int label) const {
    for (std::size_t i = 0; i < label_space.size(); ++i) {
      if (label_space[i] == label) return i;
    }
    detail::fail(ErrorCode::kUnknownLabel,
                 "label " + std::to_string(label) + " not in label space");
  }

  void validate() const {
    detail::require(!rows.empty(), ErrorCode::kInvalidArgument,
                    "labeled batch is empty");
    detail::require(!label_space.empty(), ErrorCode::kInvalidArgument,
                    "label space is empty");
    for (std::size_t i = 0; i < label_space.size(); ++i) {
      for (std::size_t j = i + 1; j < label_space.size(); ++j) {
        if (label_space[i] == label_space[j]) {
          detail::fail(ErrorCode::kDuplicateLabel, "label space has duplicates");
        }
      }
    }
    for (const LabeledSample& row : rows) {
      detail::require_same_dim(row.z.dim(), dim(), "batch sample dimension");
      (void)index_of(row.label);
    }
  }
};

struct PseudoLabel {
  Vec probabilities;

  static PseudoLabel one_hot(std::size_t m, std::size_t hot) {
    PseudoLabel p{Vec(m, 0.0)};
    p.probabilities.at(hot) = 1.0;
    return p;
  }
};

// Shannon entropy in nats; 0·log 0 is taken as 0.
inline double entropy(const PseudoLabel& p) {
  double h = 0.0;
  for (double q : p.probabilities) {
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

namespace detail {

inline void check_kappa(double kappa) {
  require(kappa > 0.0 && std::isfinite(kappa), ErrorCode::kInvalidArgument,
          "kappa must be positive");
}

inline void check_prototypes(std::span<const UnitVector> W, std::size_t d) {
  require(!W.empty(), ErrorCode::kEmptyPrototypeList, "no prototypes given");
  for (const UnitVector& w : W) require_same_dim(w.dim(), d, "prototype dimension");
}

}  // namespace detail

// Negative log-likelihood of the true labels under softmax(z·W/kappa),
// summed over the batch.
inline double supervised_loss(std::span<const UnitVector> W,
                              const LabeledBatch& batch, double kappa) {
  detail::check_kappa(kappa);
  batch.validate();
  detail::require_same_dim(W.size(), batch.label_space.size(),
                           "prototype count vs label space");
  detail::check_prototypes(W, batch.dim());
  double loss = 0.0;
  for (const LabeledSample& row : batch.rows) {
    const Vec logits = detail::scaled_logits(row.z, W, kappa);
    loss += detail::log_sum_exp(logits) - logits[batch.index_of(row.label)];
  }
  return loss;
}

// Softmax of the frozen bank restricted to `label_space`, at `temperature`.
inline PseudoLabel pseudo_label(const UnitVector& z, const PrototypeBank& frozen_bank,
                                std::span<const int> label_space,
                                double temperature) {
  detail::check_temperature(temperature);
  detail::require(!label_space.empty(), ErrorCode::kInvalidArgument,
                  "pseudo-label over an empty label space");
  std::vector<UnitVector> prototypes;
  prototypes.reserve(label_space.size());
  for (int label : label_space) {
    const Prototype* p = frozen_bank.find(label);
    if (p == nullptr) {
      detail::fail(ErrorCode::kUnknownLabel,
                   "label " + std::to_string(label) + " not in frozen bank");
    }
    prototypes.push_back(p->vector);
  }
  return PseudoLabel{softmax_over_prototypes(z, prototypes, temperature)};
}

// Cross-entropy between `pseudo` and softmax(z·W/kappa).
inline double pseudo_supervised_loss(std::span<const UnitVector> W,
                                     const UnitVector& z,
                                     const PseudoLabel& pseudo, double kappa) {
  detail::check_kappa(kappa);
  detail::check_prototypes(W, z.dim());
  detail::require_same_dim(pseudo.probabilities.size(), W.size(),
                           "pseudo-label length vs prototype count");
  const Vec logits = detail::scaled_logits(z, W, kappa);
  const double lse = detail::log_sum_exp(logits);
  double loss = 0.0;
  for (std::size_t y = 0; y < W.size(); ++y) {
    loss += pseudo.probabilities[y] * (lse - logits[y]);
  }
  return loss;
}

// Row y is (pi_y - p_y) * z / kappa with pi = softmax(z·W/kappa). Every row is
// parallel to z and the Frobenius norm is at most sqrt(2)/kappa.
inline RowMatrix grad_pseudo_loss(std::span<const UnitVector> W, const UnitVector& z,
                                  const PseudoLabel& pseudo, double kappa) {
  detail::check_kappa(kappa);
  detail::check_prototypes(W, z.dim());
  detail::require_same_dim(pseudo.probabilities.size(), W.size(),
                           "pseudo-label length vs prototype count");
  const Vec pi = detail::softmax(detail::scaled_logits(z, W, kappa));
  RowMatrix grad(W.size(), z.dim());
  for (std::size_t y = 0; y < W.size(); ++y) {
    const double coeff = (pi[y] - pseudo.probabilities[y]) / kappa;
    std::span<double> row = grad.row(y);
    for (std::size_t k = 0; k < z.dim(); ++k) row[k] = coeff * z[k];
  }
  return grad;
}

// Samples with soft targets. A hard-labelled batch is the one-hot special
// case; the pseudo-supervised batch objective uses frozen-model targets.
struct SoftBatch {
  std::vector<UnitVector> samples;
  std::vector<PseudoLabel> targets;
  std::size_t label_count = 0;

  static SoftBatch from_labeled(const LabeledBatch& batch) {
    batch.validate();
    SoftBatch out;
    out.label_count = batch.label_space.size();
    for (const LabeledSample& row : batch.rows) {
      out.samples.push_back(row.z);
      out.targets.push_back(PseudoLabel::one_hot(out.label_count,
                                                 batch.index_of(row.label)));
    }
    return out;
  }

  void validate() const {
    detail::require(!samples.empty(), ErrorCode::kInvalidArgument,
                    "batch is empty");
    detail::require_same_dim(samples.size(), targets.size(),
                             "sample count vs target count");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      detail::require_same_dim(samples[i].dim(), samples.front().dim(),
                               "batch sample dimension");
      detail::require_same_dim(targets[i].probabilities.size(), label_count,
                               "target length vs label count");
    }
  }
};

// Summed cross-entropy over a soft batch.
inline double batch_loss(std::span<const UnitVector> W, const SoftBatch& batch,
                         double kappa) {
  const std::size_t m = W.size();
  Vec logits(m);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    const std::span<const double> z = batch.samples[i].values();
    for (std::size_t y = 0; y < m; ++y) logits[y] = dot(z, W[y].values()) / kappa;
    const double lse = detail::log_sum_exp(logits);
    const Vec& p = batch.targets[i].probabilities;
    for (std::size_t y = 0; y < m; ++y) {
      if (p[y] != 0.0) loss += p[y] * (lse - logits[y]);
    }
  }
  return loss;
}

namespace detail {

// v_y(W) = sum_i (p_iy - pi_iy) z_i, the negated gradient scaled by kappa.
// Also accumulates the summed loss at W into *loss when non-null.
inline RowMatrix stationarity_vectors(std::span<const UnitVector> W,
                                      const SoftBatch& batch, double kappa,
                                      double* loss = nullptr) {
  const std::size_t d = W.front().dim();
  const std::size_t m = W.size();
  RowMatrix v(m, d);
  Vec logits(m);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    const std::span<const double> z = batch.samples[i].values();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < m; ++y) {
      logits[y] = dot(z, W[y].values()) / kappa;
      top = std::max(top, logits[y]);
    }
    double sum = 0.0;
    for (std::size_t y = 0; y < m; ++y) sum += std::exp(logits[y] - top);
    const double lse = top + std::log(sum);
    const Vec& p = batch.targets[i].probabilities;
    for (std::size_t y = 0; y < m; ++y) {
      if (p[y] != 0.0) total += p[y] * (lse - logits[y]);
      const double coeff = p[y] - std::exp(logits[y] - lse);
      double* row = v.row(y).data();
      for (std::size_t k = 0; k < d; ++k) row[k] += coeff * z[k];
    }
  }
  if (loss != nullptr) *loss = total;
  return v;
}

}  // namespace detail

struct BatchMinimizeOptions {
  int max_steps = 1000;
  double step_size = 1e-3;
  // Stop early once an update moves W by less than this (Frobenius). Zero
  // runs all max_steps.
  double stall_tolerance = 0.0;
};

struct BatchMinimizeResult {
  std::vector<UnitVector> prototypes;  // best iterate seen
  double loss = 0.0;
  double initial_loss = 0.0;
  int steps_run = 0;
  int best_step = 0;
  // Best-so-far loss sampled along the run; non-increasing.
  std::vector<double> best_loss_trace;
};

// Projected gradient descent on the sphere product: Euclidean gradient step
// on the summed loss, then per-row renormalization. Returns the best
// iterate. Throws ZeroVector if a row collapses.
inline BatchMinimizeResult batch_minimize(const SoftBatch& batch, double kappa,
                                          std::vector<UnitVector> init,
                                          const BatchMinimizeOptions& options) {
  detail::check_kappa(kappa);
  batch.validate();
  detail::require(options.max_steps >= 1, ErrorCode::kInvalidArgument,
                  "max_steps must be >= 1");
  detail::require(options.step_size > 0.0, ErrorCode::kInvalidArgument,
                  "step_size must be positive");
  detail::require_same_dim(init.size(), batch.label_count,
                           "initial prototype count vs label count");
  detail::check_prototypes(init, batch.samples.front().dim());

  const std::size_t trace_stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(options.max_steps) / 100);
  BatchMinimizeResult result;
  result.initial_loss = batch_loss(init, batch, kappa);
  result.loss = result.initial_loss;
  result.prototypes = init;
  result.best_loss_trace.push_back(result.loss);

  std::vector<UnitVector> W = std::move(init);
  const double step = options.step_size / kappa;
  // Each pass evaluates the loss of the current iterate together with its
  // gradient; the loss of W_s is therefore recorded at pass s + 1.
  for (int s = 0; s <= options.max_steps; ++s) {
    double loss = 0.0;
    const RowMatrix v = detail::stationarity_vectors(W, batch, kappa, &loss);
    if (loss < result.loss) {
      result.loss = loss;
      result.prototypes = W;
      result.best_step = s;
    }
    if (s > 0 && static_cast<std::size_t>(s) % trace_stride == 0) {
      result.best_loss_trace.push_back(result.loss);
    }
    if (s == options.max_steps) break;
    double moved_sq = 0.0;
    for (std::size_t y = 0; y < W.size(); ++y) {
      Vec next = W[y].vec();
      axpy(step, v.row(y), next);
      UnitVector normalized = l2_normalize(next);
      for (std::size_t k = 0; k < next.size(); ++k) {
        const double delta = normalized[k] - W[y][k];
        moved_sq += delta * delta;
      }
      W[y] = std::move(normalized);
    }
    result.steps_run = s + 1;
    if (std::sqrt(moved_sq) < options.stall_tolerance) {
      double final_loss = 0.0;
      (void)detail::stationarity_vectors(W, batch, kappa, &final_loss);
      if (final_loss < result.loss) {
        result.loss = final_loss;
        result.prototypes = W;
        result.best_step = s + 1;
      }
      break;
    }
  }
  if (result.best_loss_trace.back() != result.loss) {
    result.best_loss_trace.push_back(result.loss);
  }
  return result;
}

inline BatchMinimizeResult batch_minimize(const LabeledBatch& batch, double kappa,
                                          std::vector<UnitVector> init,
                                          int max_steps, double step_size) {
  return batch_minimize(SoftBatch::from_labeled(batch), kappa, std::move(init),
                        BatchMinimizeOptions{max_steps, step_size, 0.0});
}

// Per-class distance between w_y and the normalized stationarity vector
// l2(v_y(W)); nullopt marks a degenerate class with ||v_y|| < 1e-12.
using FixedPointResidual = std::vector<std::optional<double>>;

inline FixedPointResidual fixed_point_residual(std::span<const UnitVector> W,
                                               const SoftBatch& batch,
                                               double kappa) {
  detail::check_kappa(kappa);
  batch.validate();
  detail::require_same_dim(W.size(), batch.label_count,
                           "prototype count vs label count");
  detail::check_prototypes(W, batch.samples.front().dim());
  const RowMatrix v = detail::stationarity_vectors(W, batch, kappa);
  FixedPointResidual out(W.size());
  for (std::size_t y = 0; y < W.size(); ++y) {
    if (norm2(v.row(y)) < kZeroNormThreshold) continue;
    const UnitVector target = l2_normalize(v.row(y));
    Vec diff = W[y].vec();
    axpy(-1.0, target.values(), diff);
    out[y] = norm2(diff);
  }
  return out;
}

inline FixedPointResidual fixed_point_residual(std::span<const UnitVector> W,
                                               const LabeledBatch& batch,
                                               double kappa) {
  return fixed_point_residual(W, SoftBatch::from_labeled(batch), kappa);
}

}  // namespace protocalib
