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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "protocalib/embedding_io.hpp"
#include "protocalib/error.hpp"
#include "protocalib/geometry.hpp"
#include "protocalib/objective.hpp"
#include "protocalib/scoring.hpp"

namespace protocalib {

enum class Branch { kPositive, kNegative, kUncertain };

inline std::string to_string(Branch b) {
  switch (b) {
    case Branch::kPositive: return "positive";
    case Branch::kNegative: return "negative";
    case Branch::kUncertain: return "uncertain";
  }
  return "unknown";
}

// Streaming detector state. The current bank is the only storage that
// changes while streaming; the frozen bank keeps the initialization for
// gating and pseudo-labels.
struct DetectorState {
  PrototypeBank current_bank;
  PrototypeBank frozen_bank;
  std::uint64_t c_plus = 0;
  std::uint64_t c_minus = 0;
  std::uint64_t step_index = 0;
  Hyperparams hp;

  // Reals held by mutable prototype storage: d * (K + L).
  std::size_t mutable_prototype_reals() const {
    std::size_t n = 0;
    for (const Prototype& p : current_bank.id_block()) n += p.vector.vec().size();
    for (const Prototype& p : current_bank.ood_block()) n += p.vector.vec().size();
    return n;
  }
};

struct StepTrace {
  double gate_score = 0.0;
  Branch branch = Branch::kUncertain;
  std::optional<double> step_size_used;
  double final_score = 0.0;
};

inline DetectorState init_state(std::span<const UnitVector> text_id_vectors,
                                std::span<const UnitVector> text_neg_vectors,
                                const Hyperparams& hp) {
  hp.validate();
  PrototypeBank bank = PrototypeBank::from_vectors(text_id_vectors, text_neg_vectors);
  return DetectorState{bank, bank, 0, 0, 0, hp};
}

// Raw-vector entry point; every row must already be unit-norm.
inline DetectorState init_state(const std::vector<Vec>& text_id_vectors,
                                const std::vector<Vec>& text_neg_vectors,
                                const Hyperparams& hp) {
  std::vector<UnitVector> id, neg;
  for (const Vec& v : text_id_vectors) id.push_back(UnitVector::from_unit(v));
  for (const Vec& v : text_neg_vectors) neg.push_back(UnitVector::from_unit(v));
  return init_state(id, neg, hp);
}

// Positive if score >= beta, Negative if score <= 1 - beta; the two intervals
// are disjoint for beta > 0.5.
inline Branch gate(double score, double beta) {
  if (score >= beta) return Branch::kPositive;
  if (score <= 1.0 - beta) return Branch::kNegative;
  return Branch::kUncertain;
}

inline void advance_counters(DetectorState& state, Branch branch) {
  if (branch == Branch::kPositive) ++state.c_plus;
  if (branch == Branch::kNegative) ++state.c_minus;
  ++state.step_index;
}

namespace detail {

// One projected gradient step on a block of prototypes, with pseudo-labels
// from the frozen bank over the same labels.
inline void update_block(const std::vector<Prototype>& block, const UnitVector& z,
                         const PrototypeBank& frozen_bank, const Hyperparams& hp,
                         double step_size,
                         const std::function<void(std::size_t, UnitVector)>& store) {
  std::vector<UnitVector> W;
  std::vector<int> labels;
  W.reserve(block.size());
  for (const Prototype& p : block) {
    W.push_back(p.vector);
    labels.push_back(p.label);
  }
  const PseudoLabel pseudo = pseudo_label(z, frozen_bank, labels, hp.tau);
  const RowMatrix grad = grad_pseudo_loss(W, z, pseudo, hp.kappa);
  for (std::size_t y = 0; y < W.size(); ++y) {
    Vec next = W[y].vec();
    axpy(-step_size, grad.row(y), next);
    store(y, l2_normalize(next));
  }
}

}  // namespace detail

// One step of the streaming detector with ID and OOD pseudo-class blocks:
// gate on the frozen NegLabel score, advance counters, update the gated
// block with step rho / sqrt(count), then score with the updated bank.
inline StepTrace detector_step(DetectorState& state, const UnitVector& z) {
  detail::require(state.current_bank.ood_count() >= 1, ErrorCode::kInvalidArgument,
                  "detector_step needs at least one OOD pseudo-class prototype");
  detail::require_same_dim(z.dim(), state.current_bank.dim(), "sample vs bank");
  const Hyperparams& hp = state.hp;
  StepTrace trace;
  trace.gate_score = score_neglabel(z, state.frozen_bank, hp.tau);
  trace.branch = gate(trace.gate_score, hp.beta);
  advance_counters(state, trace.branch);

  PrototypeBank& bank = state.current_bank;
  if (trace.branch == Branch::kPositive) {
    const double eta = hp.rho / std::sqrt(static_cast<double>(state.c_plus));
    detail::update_block(bank.id_block(), z, state.frozen_bank, hp, eta,
                         [&](std::size_t i, UnitVector v) { bank.set_id_vector(i, std::move(v)); });
    trace.step_size_used = eta;
  } else if (trace.branch == Branch::kNegative) {
    const double eta = hp.rho / std::sqrt(static_cast<double>(state.c_minus));
    detail::update_block(bank.ood_block(), z, state.frozen_bank, hp, eta,
                         [&](std::size_t i, UnitVector v) { bank.set_ood_vector(i, std::move(v)); });
    trace.step_size_used = eta;
  }
  trace.final_score = score_ours(z, bank, hp.tau);
  return trace;
}

// ID-label-only variant: gate on the frozen MCM score, update the ID block
// for samples at or above beta, score with MCM on the updated bank.
inline StepTrace detector_step_id_only(DetectorState& state, const UnitVector& z) {
  detail::require_same_dim(z.dim(), state.current_bank.dim(), "sample vs bank");
  const Hyperparams& hp = state.hp;
  StepTrace trace;
  trace.gate_score = score_mcm(z, state.frozen_bank, hp.tau);
  trace.branch = trace.gate_score >= hp.beta ? Branch::kPositive : Branch::kUncertain;
  advance_counters(state, trace.branch);
  PrototypeBank& bank = state.current_bank;
  if (trace.branch == Branch::kPositive) {
    const double eta = hp.rho / std::sqrt(static_cast<double>(state.c_plus));
    detail::update_block(bank.id_block(), z, state.frozen_bank, hp, eta,
                         [&](std::size_t i, UnitVector v) { bank.set_id_vector(i, std::move(v)); });
    trace.step_size_used = eta;
  }
  trace.final_score = score_mcm(z, bank, hp.tau);
  return trace;
}

// Quantities entering the sublinear regret bound.
struct RegretLedger {
  double cumulative_online_loss = 0.0;
  std::optional<double> batch_optimum_loss;
  double observed_grad_bound = 0.0;  // epsilon: max gradient Frobenius norm
  std::size_t sample_count = 0;
};

struct RegretReport {
  double regret = 0.0;
  double bound = 0.0;
  bool satisfied = false;
};

// regret = cumulative - optimum; bound = (2M/rho + eps^2 rho) sqrt(N).
inline RegretReport regret_bound_check(const RegretLedger& ledger, std::size_t m,
                                       double rho) {
  if (!ledger.batch_optimum_loss) {
    detail::fail(ErrorCode::kPendingOptimum, "batch optimum has not been computed");
  }
  RegretReport report;
  report.regret = ledger.cumulative_online_loss - *ledger.batch_optimum_loss;
  const double eps = ledger.observed_grad_bound;
  report.bound = (2.0 * static_cast<double>(m) / rho + eps * eps * rho) *
                 std::sqrt(static_cast<double>(ledger.sample_count));
  report.satisfied = report.regret <= report.bound + 1e-6;
  return report;
}

struct OnlineSgdResult {
  std::vector<UnitVector> prototypes;
  RegretLedger ledger;
  // The stream with its frozen-model pseudo-labels; the batch objective the
  // ledger's optimum refers to.
  SoftBatch batch;
};

// Plain online projected gradient descent over a fixed label space with
// eta_i = rho / sqrt(i). Each sample's loss is charged to the ledger before
// the update it triggers.
inline OnlineSgdResult online_sgd(std::span<const UnitVector> stream,
                                  std::span<const int> label_space,
                                  const PrototypeBank& frozen_bank, double kappa,
                                  double rho, double pseudo_temperature) {
  detail::require(!stream.empty(), ErrorCode::kInvalidArgument, "stream is empty");
  detail::require(rho > 0.0, ErrorCode::kInvalidArgument, "rho must be positive");
  OnlineSgdResult result;
  std::vector<UnitVector>& W = result.prototypes;
  for (int label : label_space) {
    const Prototype* p = frozen_bank.find(label);
    if (p == nullptr) {
      detail::fail(ErrorCode::kUnknownLabel, "label " + std::to_string(label) +
                                                 " not in frozen bank");
    }
    W.push_back(p->vector);
  }
  result.batch.label_count = W.size();
  std::size_t i = 0;
  for (const UnitVector& z : stream) {
    ++i;
    PseudoLabel pseudo = pseudo_label(z, frozen_bank, label_space, pseudo_temperature);
    result.ledger.cumulative_online_loss += pseudo_supervised_loss(W, z, pseudo, kappa);
    const RowMatrix grad = grad_pseudo_loss(W, z, pseudo, kappa);
    result.ledger.observed_grad_bound =
        std::max(result.ledger.observed_grad_bound, grad.frobenius_norm());
    const double eta = rho / std::sqrt(static_cast<double>(i));
    for (std::size_t y = 0; y < W.size(); ++y) {
      Vec next = W[y].vec();
      axpy(-eta, grad.row(y), next);
      W[y] = l2_normalize(next);
    }
    result.batch.samples.push_back(z);
    result.batch.targets.push_back(std::move(pseudo));
  }
  result.ledger.sample_count = i;
  return result;
}

// Snapshot layout for a state saved under `prefix`:
//   <prefix>.current.emb1, <prefix>.frozen.emb1  labeled EMB1 banks, ID block
//                                                first
//   <prefix>.state                                key=value sidecar
inline void save_state(const DetectorState& state, const std::filesystem::path& prefix) {
  auto write_bank = [&](const PrototypeBank& bank, const std::string& suffix) {
    std::vector<int> labels = bank.id_labels();
    for (int l : bank.ood_labels()) labels.push_back(l);
    const auto vectors = bank.all_vectors();
    std::filesystem::path p = prefix;
    p += suffix;
    write_embeddings(p, to_embedding_set(vectors, labels));
  };
  write_bank(state.current_bank, ".current.emb1");
  write_bank(state.frozen_bank, ".frozen.emb1");
  std::ostringstream kv;
  kv.precision(17);
  kv << "format=protocalib-state-1\n"
     << "k=" << state.current_bank.id_count() << '\n'
     << "l=" << state.current_bank.ood_count() << '\n'
     << "c_plus=" << state.c_plus << '\n'
     << "c_minus=" << state.c_minus << '\n'
     << "step_index=" << state.step_index << '\n'
     << "tau=" << state.hp.tau << '\n'
     << "kappa=" << state.hp.kappa << '\n'
     << "rho=" << state.hp.rho << '\n'
     << "beta=" << state.hp.beta << '\n';
  std::filesystem::path p = prefix;
  p += ".state";
  write_file_atomic(p, kv.str());
}

// Prototype values come back at float precision (renormalized in double).
inline DetectorState load_state(const std::filesystem::path& prefix) {
  std::filesystem::path sidecar = prefix;
  sidecar += ".state";
  std::istringstream in(read_file(sidecar));
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) detail::fail(ErrorCode::kIoError, "state sidecar lacks '" + key + "'");
    return it->second;
  };
  const std::size_t k = std::stoul(get("k"));
  const std::size_t l = std::stoul(get("l"));
  auto read_bank = [&](const std::string& suffix) {
    std::filesystem::path p = prefix;
    p += suffix;
    const EmbeddingSet set = read_embeddings(p);
    detail::require_same_dim(set.records.size(), k + l, "bank rows vs sidecar K+L");
    const auto vectors = to_unit_vectors(set);
    std::vector<Prototype> id, ood;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      (i < k ? id : ood).push_back({set.records[i].label, vectors[i]});
    }
    return PrototypeBank(std::move(id), std::move(ood));
  };
  Hyperparams hp{std::stod(get("tau")), std::stod(get("kappa")), std::stod(get("rho")),
                 std::stod(get("beta"))};
  hp.validate();
  DetectorState state{read_bank(".current.emb1"), read_bank(".frozen.emb1"),
                      std::stoull(get("c_plus")), std::stoull(get("c_minus")),
                      std::stoull(get("step_index")), hp};
  return state;
}

}  // namespace protocalib
