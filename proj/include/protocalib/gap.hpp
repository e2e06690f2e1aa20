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
#include <optional>
#include <span>
#include <vector>

#include "protocalib/error.hpp"
#include "protocalib/geometry.hpp"
#include "protocalib/objective.hpp"

namespace protocalib {

// Lower bound on ||R - W*||_F^2 from the part of each text prototype that
// lies outside the visual span S.
struct GapBound {
  Vec per_class_bound;    // 2 (1 - ||Proj_S r_y||)
  Vec per_class_in_norm;  // ||Proj_S r_y||
  // Largest disagreement between the in-span form and the complement form
  // 2 (1 - sqrt(1 - ||Proj_{S^perp} r_y||^2)).
  double max_form_discrepancy = 0.0;

  double total() const {
    double s = 0.0;
    for (double b : per_class_bound) s += b;
    return s;
  }
};

inline constexpr double kFormAgreementTolerance = 1e-8;

inline GapBound modality_gap_bound(std::span<const UnitVector> text_bank,
                                   std::span<const UnitVector> visual) {
  detail::require(!visual.empty(), ErrorCode::kInvalidArgument,
                  "visual batch is empty");
  detail::require(!text_bank.empty(), ErrorCode::kEmptyPrototypeList,
                  "text bank is empty");
  const SpanBasis basis = orthonormal_basis(visual);
  GapBound out;
  for (const UnitVector& r : text_bank) {
    const SpanProjection proj = project_onto_span(basis, r);
    const double in_norm = std::min(proj.in_norm, 1.0);
    const double out_sq = std::min(proj.out_norm * proj.out_norm, 1.0);
    const double bound = 2.0 * (1.0 - in_norm);
    const double complement = 2.0 * (1.0 - std::sqrt(1.0 - out_sq));
    out.max_form_discrepancy =
        std::max(out.max_form_discrepancy, std::abs(bound - complement));
    out.per_class_bound.push_back(bound);
    out.per_class_in_norm.push_back(in_norm);
  }
  if (out.max_form_discrepancy > kFormAgreementTolerance) {
    detail::fail(ErrorCode::kInvalidArgument,
                 "in-span and complement bound forms disagree by " +
                     std::to_string(out.max_form_discrepancy));
  }
  return out;
}

inline GapBound modality_gap_bound(std::span<const UnitVector> text_bank,
                                   const LabeledBatch& visual_batch) {
  visual_batch.validate();
  std::vector<UnitVector> visual;
  for (const LabeledSample& row : visual_batch.rows) visual.push_back(row.z);
  for (const UnitVector& r : text_bank) {
    detail::require_same_dim(r.dim(), visual_batch.dim(), "text vs visual dimension");
  }
  return modality_gap_bound(text_bank, visual);
}

// sum_y ||r_y - w_y||^2, computed directly.
inline double frobenius_gap(std::span<const UnitVector> R, std::span<const UnitVector> W) {
  detail::require_same_dim(R.size(), W.size(), "text vs visual prototype count");
  double total = 0.0;
  for (std::size_t y = 0; y < R.size(); ++y) {
    detail::require_same_dim(R[y].dim(), W[y].dim(), "prototype dimension");
    for (std::size_t k = 0; k < R[y].dim(); ++k) {
      const double diff = R[y][k] - W[y][k];
      total += diff * diff;
    }
  }
  return total;
}

// The same quantity through the unit-norm identity sum_y 2 (1 - r_y . w_y).
inline double frobenius_gap_identity(std::span<const UnitVector> R,
                                     std::span<const UnitVector> W) {
  detail::require_same_dim(R.size(), W.size(), "text vs visual prototype count");
  double total = 0.0;
  for (std::size_t y = 0; y < R.size(); ++y) total += 2.0 * (1.0 - dot(R[y], W[y]));
  return total;
}

struct GapOptimizerSettings {
  int max_steps = 20000;
  // Per-sample step; batch_minimize receives step_size / N.
  double step_size = 0.2;
  double stall_tolerance = 1e-15;
  double fixed_point_tolerance = 1e-3;
  double out_of_span_tolerance = 1e-6;
};

struct GapReport {
  Vec per_class_bound;
  double bound_total = 0.0;
  double frobenius_gap = 0.0;
  bool satisfied = false;
  Vec per_class_in_norm;
  // Optimizer certification: W* inside S and at the fixed point.
  Vec per_class_w_out_norm;
  std::vector<std::optional<double>> fixed_point_residual;
  std::vector<std::size_t> degenerate_classes;
  bool optimizer_converged = false;
  bool w_in_span = false;
  double optimum_loss = 0.0;
};

inline constexpr double kGapSlack = 1e-9;

// Optimizes visual prototypes W* on the batch (initialized inside S from
// class sums, so every iterate stays in S), then compares ||R - W*||_F^2 to
// the projection bound.
inline GapReport verify_gap_theorem(std::span<const UnitVector> text_bank,
                                    const LabeledBatch& visual_batch, double kappa,
                                    const GapOptimizerSettings& settings = {}) {
  visual_batch.validate();
  detail::require_same_dim(text_bank.size(), visual_batch.label_space.size(),
                           "text prototype count vs label space");
  const GapBound bound = modality_gap_bound(text_bank, visual_batch);

  std::vector<UnitVector> visual;
  for (const LabeledSample& row : visual_batch.rows) visual.push_back(row.z);
  const SpanBasis basis = orthonormal_basis(visual);

  std::vector<UnitVector> init;
  for (std::size_t y = 0; y < visual_batch.label_space.size(); ++y) {
    Vec sum(visual_batch.dim(), 0.0);
    for (const LabeledSample& row : visual_batch.rows) {
      if (visual_batch.index_of(row.label) == y) axpy(1.0, row.z.values(), sum);
    }
    if (norm2(sum) < kZeroNormThreshold) sum = project_onto_span(basis, text_bank[y]).in_span;
    init.push_back(l2_normalize(sum));
  }

  const SoftBatch soft = SoftBatch::from_labeled(visual_batch);
  const double n = static_cast<double>(visual_batch.rows.size());
  const BatchMinimizeResult opt = batch_minimize(
      soft, kappa, std::move(init),
      BatchMinimizeOptions{settings.max_steps, settings.step_size / n,
                           settings.stall_tolerance});

  GapReport report;
  report.per_class_bound = bound.per_class_bound;
  report.bound_total = bound.total();
  report.per_class_in_norm = bound.per_class_in_norm;
  report.frobenius_gap = frobenius_gap(text_bank, opt.prototypes);
  report.satisfied = report.frobenius_gap >= report.bound_total - kGapSlack;
  report.optimum_loss = opt.loss;
  report.fixed_point_residual = fixed_point_residual(opt.prototypes, soft, kappa);
  report.optimizer_converged = true;
  for (std::size_t y = 0; y < report.fixed_point_residual.size(); ++y) {
    const auto& r = report.fixed_point_residual[y];
    if (!r) {
      report.degenerate_classes.push_back(y);
    } else if (*r >= settings.fixed_point_tolerance) {
      report.optimizer_converged = false;
    }
  }
  report.w_in_span = true;
  for (const UnitVector& w : opt.prototypes) {
    const double out = project_onto_span(basis, w).out_norm;
    report.per_class_w_out_norm.push_back(out);
    if (out >= settings.out_of_span_tolerance) report.w_in_span = false;
  }
  return report;
}

}  // namespace protocalib
