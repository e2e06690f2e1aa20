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
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "protocalib/error.hpp"
#include "protocalib/geometry.hpp"

namespace protocalib {

// EMB1 layout, all little-endian:
//   "EMB1" | u32 dim | u32 count | u32 labeled_flag |
//   count x (i32 label, dim x f32)
// Unlabeled files store label -1.
struct EmbeddingRecord {
  std::int32_t label = -1;
  std::vector<float> values;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct EmbeddingSet {
  std::uint32_t dim = 0;
  bool labeled = false;
  std::vector<EmbeddingRecord> records;

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

inline constexpr char kEmbMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr double kStoredNormTolerance = 1e-5;
inline constexpr std::size_t kEmbHeaderBytes = 16;

// Writes `contents` to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) detail::fail(ErrorCode::kIoError, "cannot open " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) detail::fail(ErrorCode::kIoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) detail::fail(ErrorCode::kIoError, "rename to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::fail(ErrorCode::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

inline double record_norm(const std::vector<float>& values) {
  double sum = 0.0;
  for (float x : values) sum += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sum);
}

}  // namespace detail

inline std::string encode_embeddings(const EmbeddingSet& set) {
  detail::require(set.dim >= 1, ErrorCode::kInvalidArgument, "dim must be positive");
  std::string out(kEmbMagic, 4);
  detail::put_u32(out, set.dim);
  detail::put_u32(out, static_cast<std::uint32_t>(set.records.size()));
  detail::put_u32(out, set.labeled ? 1u : 0u);
  out.reserve(kEmbHeaderBytes + set.records.size() * (4 + 4 * set.dim));
  for (const EmbeddingRecord& r : set.records) {
    detail::require_same_dim(r.values.size(), set.dim, "record length vs header dim");
    detail::put_u32(out, static_cast<std::uint32_t>(r.label));
    for (float x : r.values) detail::put_u32(out, std::bit_cast<std::uint32_t>(x));
  }
  return out;
}

// Parses and validates an EMB1 image: magic, exact size, flag range, and unit
// norm of every record (NormViolation names the offending record index).
inline EmbeddingSet decode_embeddings(const std::string& bytes) {
  if (bytes.size() < kEmbHeaderBytes) {
    detail::fail(ErrorCode::kTruncatedFile, "file shorter than the EMB1 header");
  }
  if (bytes.compare(0, 4, kEmbMagic, 4) != 0) {
    detail::fail(ErrorCode::kBadMagic, "expected magic EMB1");
  }
  EmbeddingSet set;
  set.dim = detail::get_u32(bytes, 4);
  const std::uint32_t count = detail::get_u32(bytes, 8);
  const std::uint32_t flag = detail::get_u32(bytes, 12);
  detail::require(flag <= 1, ErrorCode::kInvalidArgument, "labeled flag must be 0 or 1");
  detail::require(set.dim >= 1, ErrorCode::kInvalidArgument, "dim must be positive");
  set.labeled = flag == 1;
  const std::uint64_t record_bytes = 4 + 4 * static_cast<std::uint64_t>(set.dim);
  const std::uint64_t expected = kEmbHeaderBytes + record_bytes * count;
  if (bytes.size() < expected) {
    detail::fail(ErrorCode::kTruncatedFile,
                 "expected " + std::to_string(expected) + " bytes, found " +
                     std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    detail::fail(ErrorCode::kDimensionMismatch,
                 "trailing bytes after " + std::to_string(count) + " records");
  }
  set.records.resize(count);
  std::size_t offset = kEmbHeaderBytes;
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingRecord& r = set.records[i];
    r.label = static_cast<std::int32_t>(detail::get_u32(bytes, offset));
    offset += 4;
    r.values.resize(set.dim);
    for (float& x : r.values) {
      x = std::bit_cast<float>(detail::get_u32(bytes, offset));
      offset += 4;
    }
    const double n = detail::record_norm(r.values);
    if (!(std::abs(n - 1.0) <= kStoredNormTolerance)) {
      detail::fail(ErrorCode::kNormViolation,
                   "record " + std::to_string(i) + " has norm " + std::to_string(n));
    }
  }
  return set;
}

inline void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  write_file_atomic(path, encode_embeddings(set));
}

inline EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(read_file(path));
}

inline EmbeddingSet to_embedding_set(std::span<const UnitVector> vectors,
                                     std::span<const int> labels = {}) {
  detail::require(!vectors.empty(), ErrorCode::kInvalidArgument, "no vectors to store");
  detail::require(labels.empty() || labels.size() == vectors.size(),
                  ErrorCode::kDimensionMismatch, "label count vs vector count");
  EmbeddingSet set;
  set.dim = static_cast<std::uint32_t>(vectors.front().dim());
  set.labeled = !labels.empty();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    detail::require_same_dim(vectors[i].dim(), set.dim, "vector dimension");
    EmbeddingRecord r;
    r.label = labels.empty() ? -1 : labels[i];
    r.values.assign(vectors[i].values().begin(), vectors[i].values().end());
    set.records.push_back(std::move(r));
  }
  return set;
}

// Float payloads are renormalized in double precision on the way in.
inline std::vector<UnitVector> to_unit_vectors(const EmbeddingSet& set) {
  std::vector<UnitVector> out;
  out.reserve(set.records.size());
  for (const EmbeddingRecord& r : set.records) {
    const Vec v(r.values.begin(), r.values.end());
    out.push_back(l2_normalize(v));
  }
  return out;
}

// Human-readable fallback: header "label,c0,...,c{d-1}", one row per record.
inline std::string encode_embeddings_csv(const EmbeddingSet& set) {
  std::ostringstream out;
  out << "label";
  for (std::uint32_t c = 0; c < set.dim; ++c) out << ",c" << c;
  out << '\n';
  out.precision(9);
  for (const EmbeddingRecord& r : set.records) {
    out << r.label;
    for (float x : r.values) out << ',' << x;
    out << '\n';
  }
  return out.str();
}

inline EmbeddingSet decode_embeddings_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("label", 0) != 0) {
    detail::fail(ErrorCode::kBadMagic, "CSV must start with a 'label,...' header");
  }
  EmbeddingSet set;
  set.dim = static_cast<std::uint32_t>(std::count(line.begin(), line.end(), ','));
  bool any_label = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    EmbeddingRecord r;
    std::getline(row, cell, ',');
    r.label = static_cast<std::int32_t>(std::stol(cell));
    any_label = any_label || r.label != -1;
    while (std::getline(row, cell, ',')) r.values.push_back(std::stof(cell));
    detail::require_same_dim(r.values.size(), set.dim, "CSV row length");
    const double n = detail::record_norm(r.values);
    if (!(std::abs(n - 1.0) <= kStoredNormTolerance)) {
      detail::fail(ErrorCode::kNormViolation,
                   "record " + std::to_string(set.records.size()) + " has norm " +
                       std::to_string(n));
    }
    set.records.push_back(std::move(r));
  }
  set.labeled = any_label;
  return set;
}

}  // namespace protocalib
