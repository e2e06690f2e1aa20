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
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "protocalib/error.hpp"
#include "protocalib/geometry.hpp"

namespace protocalib {

enum class Truth { kId, kOod };

enum class StreamOrderKind { kRandom, kIdFirst, kOodFirst, kTemporal };

struct StreamOrder {
  StreamOrderKind kind = StreamOrderKind::kRandom;
  std::uint64_t seed = 0;
  // Temporal only: every OOD dataset name, each exactly once.
  std::vector<std::string> temporal_names;

  static StreamOrder random(std::uint64_t seed) { return {StreamOrderKind::kRandom, seed, {}}; }
  static StreamOrder id_first(std::uint64_t seed) { return {StreamOrderKind::kIdFirst, seed, {}}; }
  static StreamOrder ood_first(std::uint64_t seed) { return {StreamOrderKind::kOodFirst, seed, {}}; }
  static StreamOrder temporal(std::vector<std::string> names, std::uint64_t seed) {
    return {StreamOrderKind::kTemporal, seed, std::move(names)};
  }
};

inline std::string to_string(StreamOrderKind kind) {
  switch (kind) {
    case StreamOrderKind::kRandom: return "random";
    case StreamOrderKind::kIdFirst: return "id-first";
    case StreamOrderKind::kOodFirst: return "ood-first";
    case StreamOrderKind::kTemporal: return "temporal";
  }
  return "unknown";
}

inline StreamOrderKind parse_order_kind(const std::string& name) {
  if (name == "random") return StreamOrderKind::kRandom;
  if (name == "id-first") return StreamOrderKind::kIdFirst;
  if (name == "ood-first") return StreamOrderKind::kOodFirst;
  if (name == "temporal") return StreamOrderKind::kTemporal;
  detail::fail(ErrorCode::kInvalidArgument, "unknown stream order '" + name + "'");
}

struct NamedBatch {
  std::string name;
  std::vector<UnitVector> vectors;
};

inline constexpr const char* kIdSource = "id";

// One element of an evaluation stream. Only `z` is ever handed to a
// detector; `source` and `truth` stay with the harness for metrics.
struct StreamItem {
  UnitVector z;
  std::string source;
  Truth truth = Truth::kId;
};

using Stream = std::vector<StreamItem>;

// Orders ID and OOD samples into a single test stream.
//   random     uniform shuffle of the union
//   id-first   shuffled ID, then shuffled OOD
//   ood-first  shuffled OOD, then shuffled ID
//   temporal   OOD datasets as contiguous blocks in the given order, each
//              block shuffled; ID samples at uniformly random positions
inline Stream make_stream(std::span<const UnitVector> id_batch,
                          std::span<const NamedBatch> ood_batches,
                          const StreamOrder& order) {
  std::size_t ood_total = 0;
  for (const NamedBatch& b : ood_batches) ood_total += b.vectors.size();
  detail::require(!id_batch.empty() || ood_total > 0, ErrorCode::kInvalidArgument,
                  "stream needs at least one sample");
  std::mt19937_64 rng(order.seed);

  Stream id_items;
  for (const UnitVector& z : id_batch) id_items.push_back({z, kIdSource, Truth::kId});

  auto ood_block = [](const NamedBatch& b) {
    Stream items;
    for (const UnitVector& z : b.vectors) items.push_back({z, b.name, Truth::kOod});
    return items;
  };

  Stream out;
  out.reserve(id_items.size() + ood_total);
  switch (order.kind) {
    case StreamOrderKind::kRandom: {
      out = std::move(id_items);
      for (const NamedBatch& b : ood_batches) {
        for (StreamItem& item : ood_block(b)) out.push_back(std::move(item));
      }
      std::shuffle(out.begin(), out.end(), rng);
      break;
    }
    case StreamOrderKind::kIdFirst:
    case StreamOrderKind::kOodFirst: {
      Stream ood;
      for (const NamedBatch& b : ood_batches) {
        for (StreamItem& item : ood_block(b)) ood.push_back(std::move(item));
      }
      std::shuffle(id_items.begin(), id_items.end(), rng);
      std::shuffle(ood.begin(), ood.end(), rng);
      Stream& first = order.kind == StreamOrderKind::kIdFirst ? id_items : ood;
      Stream& second = order.kind == StreamOrderKind::kIdFirst ? ood : id_items;
      out = std::move(first);
      for (StreamItem& item : second) out.push_back(std::move(item));
      break;
    }
    case StreamOrderKind::kTemporal: {
      std::set<std::string> known;
      for (const NamedBatch& b : ood_batches) known.insert(b.name);
      std::set<std::string> used;
      for (const std::string& name : order.temporal_names) {
        if (!known.contains(name)) {
          detail::fail(ErrorCode::kUnknownDatasetName,
                       "temporal order names unknown dataset '" + name + "'");
        }
        if (!used.insert(name).second) {
          detail::fail(ErrorCode::kInvalidArgument,
                       "temporal order repeats dataset '" + name + "'");
        }
      }
      detail::require(used.size() == known.size(), ErrorCode::kInvalidArgument,
                      "temporal order must list every OOD dataset exactly once");
      Stream ood;
      for (const std::string& name : order.temporal_names) {
        for (const NamedBatch& b : ood_batches) {
          if (b.name != name) continue;
          Stream block = ood_block(b);
          std::shuffle(block.begin(), block.end(), rng);
          for (StreamItem& item : block) ood.push_back(std::move(item));
        }
      }
      std::shuffle(id_items.begin(), id_items.end(), rng);
      const std::size_t total = id_items.size() + ood.size();
      std::vector<char> is_id(total, 0);
      std::fill(is_id.begin(), is_id.begin() + static_cast<std::ptrdiff_t>(id_items.size()), 1);
      std::shuffle(is_id.begin(), is_id.end(), rng);
      std::size_t next_id = 0, next_ood = 0;
      for (std::size_t i = 0; i < total; ++i) {
        out.push_back(is_id[i] ? std::move(id_items[next_id++])
                               : std::move(ood[next_ood++]));
      }
      break;
    }
  }
  return out;
}

}  // namespace protocalib
