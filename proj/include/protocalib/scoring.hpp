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
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "protocalib/error.hpp"
#include "protocalib/geometry.hpp"

namespace protocalib {

struct Prototype {
  int label = 0;
  UnitVector vector;

  friend bool operator==(const Prototype&, const Prototype&) = default;
};

// Ordered ID block (K >= 1) followed by an OOD pseudo-class block (L >= 0).
class PrototypeBank {
 public:
  PrototypeBank(std::vector<Prototype> id_block, std::vector<Prototype> ood_block)
      : id_(std::move(id_block)), ood_(std::move(ood_block)) {
    detail::require(!id_.empty(), ErrorCode::kEmptyPrototypeList,
                    "a prototype bank needs at least one ID prototype");
    const std::size_t d = id_.front().vector.dim();
    std::set<int> seen;
    for (const auto* block : {&id_, &ood_}) {
      for (const Prototype& p : *block) {
        detail::require_same_dim(p.vector.dim(), d, "prototype dimension");
        if (!seen.insert(p.label).second) {
          detail::fail(ErrorCode::kDuplicateLabel,
                       "label " + std::to_string(p.label) + " repeated in bank");
        }
      }
    }
  }

  // Labels 0..K-1 for the ID block and K..K+L-1 for the OOD block.
  static PrototypeBank from_vectors(std::span<const UnitVector> id_vectors,
                                    std::span<const UnitVector> ood_vectors) {
    std::vector<Prototype> id, ood;
    int label = 0;
    for (const UnitVector& v : id_vectors) id.push_back({label++, v});
    for (const UnitVector& v : ood_vectors) ood.push_back({label++, v});
    return PrototypeBank(std::move(id), std::move(ood));
  }

  std::size_t dim() const noexcept { return id_.front().vector.dim(); }
  std::size_t id_count() const noexcept { return id_.size(); }
  std::size_t ood_count() const noexcept { return ood_.size(); }

  const std::vector<Prototype>& id_block() const noexcept { return id_; }
  const std::vector<Prototype>& ood_block() const noexcept { return ood_; }

  std::vector<UnitVector> id_vectors() const { return vectors_of(id_); }
  std::vector<UnitVector> ood_vectors() const { return vectors_of(ood_); }
  std::vector<UnitVector> all_vectors() const {
    auto out = id_vectors();
    for (const Prototype& p : ood_) out.push_back(p.vector);
    return out;
  }

  std::vector<int> id_labels() const { return labels_of(id_); }
  std::vector<int> ood_labels() const { return labels_of(ood_); }

  // nullptr when the label is absent from both blocks.
  const Prototype* find(int label) const {
    for (const auto* block : {&id_, &ood_}) {
      for (const Prototype& p : *block) {
        if (p.label == label) return &p;
      }
    }
    return nullptr;
  }

  // Replaces prototype vectors in place; labels and block sizes are fixed.
  void set_id_vector(std::size_t i, UnitVector v) {
    detail::require_same_dim(v.dim(), dim(), "replacement prototype");
    id_.at(i).vector = std::move(v);
  }
  void set_ood_vector(std::size_t i, UnitVector v) {
    detail::require_same_dim(v.dim(), dim(), "replacement prototype");
    ood_.at(i).vector = std::move(v);
  }

  friend bool operator==(const PrototypeBank&, const PrototypeBank&) = default;

 private:
  static std::vector<UnitVector> vectors_of(const std::vector<Prototype>& block) {
    std::vector<UnitVector> out;
    out.reserve(block.size());
    for (const Prototype& p : block) out.push_back(p.vector);
    return out;
  }
  static std::vector<int> labels_of(const std::vector<Prototype>& block) {
    std::vector<int> out;
    out.reserve(block.size());
    for (const Prototype& p : block) out.push_back(p.label);
    return out;
  }

  std::vector<Prototype> id_;
  std::vector<Prototype> ood_;
};

struct Hyperparams {
  double tau = 0.01;   // score temperature
  double kappa = 0.05; // loss temperature
  double rho = 0.1;    // step-size scale
  double beta = 0.95;  // gate threshold, in (0.5, 1]

  void validate() const {
    detail::require(tau > 0.0 && std::isfinite(tau), ErrorCode::kInvalidArgument,
                    "tau must be positive");
    detail::require(kappa > 0.0 && std::isfinite(kappa),
                    ErrorCode::kInvalidArgument, "kappa must be positive");
    detail::require(rho > 0.0 && std::isfinite(rho), ErrorCode::kInvalidArgument,
                    "rho must be positive");
    detail::require(beta > 0.5 && beta <= 1.0, ErrorCode::kInvalidArgument,
                    "beta must lie in (0.5, 1]");
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

namespace detail {

inline double log_sum_exp(std::span<const double> logits) {
  double top = -std::numeric_limits<double>::infinity();
  for (double l : logits) top = std::max(top, l);
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  return top + std::log(sum);
}

inline Vec softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  Vec p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) p[i] = std::exp(logits[i] - lse);
  return p;
}

template <typename Range>
Vec scaled_logits(const UnitVector& z, const Range& prototypes, double temperature) {
  Vec logits;
  logits.reserve(std::size(prototypes));
  for (const auto& w : prototypes) {
    if constexpr (std::is_same_v<std::decay_t<decltype(w)>, Prototype>) {
      detail::require_same_dim(w.vector.dim(), z.dim(), "prototype vs embedding");
      logits.push_back(dot(z.values(), w.vector.values()) / temperature);
    } else {
      detail::require_same_dim(w.dim(), z.dim(), "prototype vs embedding");
      logits.push_back(dot(z.values(), w.values()) / temperature);
    }
  }
  return logits;
}

inline void check_temperature(double temperature) {
  require(temperature > 0.0 && std::isfinite(temperature),
          ErrorCode::kInvalidArgument, "temperature must be positive");
}

}  // namespace detail

inline Vec softmax_over_prototypes(const UnitVector& z,
                                   std::span<const UnitVector> prototypes,
                                   double temperature) {
  detail::check_temperature(temperature);
  detail::require(!prototypes.empty(), ErrorCode::kEmptyPrototypeList,
                  "softmax needs at least one prototype");
  return detail::softmax(detail::scaled_logits(z, prototypes, temperature));
}

// Maximum softmax probability over the ID block.
inline double score_mcm(const UnitVector& z, const PrototypeBank& bank, double tau) {
  detail::check_temperature(tau);
  const Vec logits = detail::scaled_logits(z, bank.id_block(), tau);
  const double top = *std::max_element(logits.begin(), logits.end());
  return std::exp(top - detail::log_sum_exp(logits));
}

// Softmax mass assigned to the ID block when the OOD block joins the
// normalizer. Computed as exp(lse(ID) - lse(ID u OOD)).
inline double score_neglabel(const UnitVector& z, const PrototypeBank& bank,
                             double tau) {
  detail::check_temperature(tau);
  const Vec id_logits = detail::scaled_logits(z, bank.id_block(), tau);
  if (bank.ood_count() == 0) return 1.0;
  Vec all_logits = id_logits;
  const Vec ood_logits = detail::scaled_logits(z, bank.ood_block(), tau);
  all_logits.insert(all_logits.end(), ood_logits.begin(), ood_logits.end());
  return std::exp(detail::log_sum_exp(id_logits) - detail::log_sum_exp(all_logits));
}

// Same rule as score_neglabel, evaluated on the adapted bank.
inline double score_ours(const UnitVector& z, const PrototypeBank& bank, double tau) {
  return score_neglabel(z, bank, tau);
}

}  // namespace protocalib
