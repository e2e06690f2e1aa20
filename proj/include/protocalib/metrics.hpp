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
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "protocalib/error.hpp"

namespace protocalib {

// ID and OOD score samples; higher scores mean "more ID".
struct ScoreSet {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;

  void validate() const {
    detail::require(!id_scores.empty(), ErrorCode::kEmptyScores, "no ID scores");
    detail::require(!ood_scores.empty(), ErrorCode::kEmptyScores, "no OOD scores");
    for (const auto* list : {&id_scores, &ood_scores}) {
      for (double s : *list) {
        detail::require(std::isfinite(s), ErrorCode::kInvalidArgument,
                        "scores must be finite");
      }
    }
  }
};

// Mann-Whitney estimate of P(id > ood) with ties counted one half. Uses a
// sorted OOD list and binary search; the result is bit-identical to the
// pairwise count (2 * greater + ties) / (2 n m).
inline double auroc(const ScoreSet& ss) {
  ss.validate();
  std::vector<double> ood = ss.ood_scores;
  std::sort(ood.begin(), ood.end());
  std::int64_t twice_wins = 0;
  for (double s : ss.id_scores) {
    const auto [lo, hi] = std::equal_range(ood.begin(), ood.end(), s);
    twice_wins += 2 * (lo - ood.begin()) + (hi - lo);
  }
  return static_cast<double>(twice_wins) /
         (2.0 * static_cast<double>(ss.id_scores.size()) *
          static_cast<double>(ss.ood_scores.size()));
}

// False positive rate at the largest threshold (taken from the ID scores)
// for which at least `level` of ID scores satisfy score >= threshold.
inline double fpr_at_tpr(const ScoreSet& ss, double level = 0.95) {
  ss.validate();
  detail::require(level > 0.0 && level < 1.0, ErrorCode::kInvalidArgument,
                  "TPR level must lie in (0, 1)");
  std::vector<double> id = ss.id_scores;
  std::sort(id.begin(), id.end(), std::greater<>());
  const double n = static_cast<double>(id.size());
  double threshold = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < id.size(); ++i) {
    // Only the last element of a tie run carries the full count of
    // scores >= id[i].
    if (i + 1 < id.size() && id[i + 1] == id[i]) continue;
    if (static_cast<double>(i + 1) / n >= level) {
      threshold = id[i];
      break;
    }
  }
  std::size_t false_positives = 0;
  for (double s : ss.ood_scores) false_positives += s >= threshold ? 1 : 0;
  return static_cast<double>(false_positives) / static_cast<double>(ss.ood_scores.size());
}

struct DetectionMetrics {
  double auroc = 0.0;
  double fpr95 = 0.0;
};

struct RunMetadata {
  std::string method;
  std::uint64_t seed = 0;
  std::map<std::string, double> hyperparameters;
  std::string stream_order;
};

struct EvalReport {
  std::vector<std::pair<std::string, DetectionMetrics>> per_dataset;
  DetectionMetrics averages;
  RunMetadata metadata;
};

// Per-dataset metrics in input order plus unweighted means.
inline EvalReport evaluate_run(
    const std::vector<double>& id_scores,
    const std::vector<std::pair<std::string, std::vector<double>>>& ood_sets,
    RunMetadata metadata) {
  detail::require(!ood_sets.empty(), ErrorCode::kEmptyScores, "no OOD score sets");
  EvalReport report;
  report.metadata = std::move(metadata);
  for (const auto& [name, scores] : ood_sets) {
    if (scores.empty()) {
      detail::fail(ErrorCode::kEmptyScores, "OOD set '" + name + "' has no scores");
    }
    const ScoreSet ss{id_scores, scores};
    report.per_dataset.push_back({name, {auroc(ss), fpr_at_tpr(ss, 0.95)}});
  }
  for (const auto& [name, m] : report.per_dataset) {
    report.averages.auroc += m.auroc;
    report.averages.fpr95 += m.fpr95;
  }
  const double count = static_cast<double>(report.per_dataset.size());
  report.averages.auroc /= count;
  report.averages.fpr95 /= count;
  return report;
}

}  // namespace protocalib
