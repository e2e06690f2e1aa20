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
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "protocalib/error.hpp"

namespace protocalib {

using Vec = std::vector<double>;

inline constexpr double kZeroNormThreshold = 1e-12;
inline constexpr double kUnitNormTolerance = 1e-6;
inline constexpr double kDefaultDropTolerance = 1e-8;

inline double dot(std::span<const double> a, std::span<const double> b) {
  detail::require_same_dim(a.size(), b.size(), "dot product operands");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

inline double norm2(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  detail::require_same_dim(x.size(), y.size(), "axpy operands");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

class UnitVector;
inline UnitVector l2_normalize(std::span<const double> v);

// A point on the unit sphere S^{d-1}, d >= 2. Instances can only be obtained
// through l2_normalize() or a checked constructor, so holding a UnitVector is
// proof that the norm is within kUnitNormTolerance of one.
class UnitVector {
 public:
  // Accepts components that are already unit-norm; throws NotUnitNorm
  // otherwise. Use l2_normalize() to project arbitrary vectors.
  static UnitVector from_unit(Vec components) {
    check_dimension(components.size());
    const double n = norm2(components);
    if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTolerance) {
      detail::fail(ErrorCode::kNotUnitNorm,
                   "vector norm " + std::to_string(n) + " is not within " +
                       "1e-6 of 1");
    }
    return UnitVector(std::move(components));
  }

  std::size_t dim() const noexcept { return components_.size(); }
  std::span<const double> values() const noexcept { return components_; }
  const Vec& vec() const noexcept { return components_; }
  double operator[](std::size_t i) const { return components_[i]; }

  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  explicit UnitVector(Vec components) : components_(std::move(components)) {}

  static void check_dimension(std::size_t d) {
    detail::require(d >= 2, ErrorCode::kInvalidArgument,
                    "unit vectors need dimension >= 2");
  }

  friend UnitVector l2_normalize(std::span<const double> v);

  Vec components_;
};

// Divides v by its Euclidean norm. A vector with norm below 1e-12 has no
// direction and raises ZeroVector.
inline UnitVector l2_normalize(std::span<const double> v) {
  UnitVector::check_dimension(v.size());
  for (double x : v) {
    detail::require(std::isfinite(x), ErrorCode::kInvalidArgument,
                    "vector has non-finite entries");
  }
  const double n = norm2(v);
  if (n < kZeroNormThreshold) {
    detail::fail(ErrorCode::kZeroVector, "cannot normalize a zero vector");
  }
  Vec out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return UnitVector(std::move(out));
}

inline double dot(const UnitVector& a, const UnitVector& b) {
  return dot(a.values(), b.values());
}

// Dense row-major matrix; rows are prototypes or per-prototype gradients.
class RowMatrix {
 public:
  RowMatrix() = default;
  RowMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t r) {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  double frobenius_norm() const { return norm2(values_); }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec values_;
};

// Orthonormal basis of span{inputs}; columns are mutually orthonormal.
struct SpanBasis {
  std::size_t dim = 0;
  std::vector<Vec> columns;
  double drop_tolerance = kDefaultDropTolerance;

  std::size_t rank() const noexcept { return columns.size(); }
};

// Modified Gram-Schmidt with one re-orthogonalization pass. Inputs whose
// residual falls below drop_tolerance are treated as linearly dependent.
inline SpanBasis orthonormal_basis(std::span<const Vec> vectors,
                                   double drop_tolerance = kDefaultDropTolerance) {
  detail::require(!vectors.empty(), ErrorCode::kInvalidArgument,
                  "orthonormal_basis needs at least one vector");
  detail::require(drop_tolerance > 0.0, ErrorCode::kInvalidArgument,
                  "drop_tolerance must be positive");
  SpanBasis basis;
  basis.dim = vectors.front().size();
  basis.drop_tolerance = drop_tolerance;
  for (const Vec& v : vectors) {
    detail::require_same_dim(v.size(), basis.dim, "basis input dimension");
    if (basis.columns.size() == basis.dim) break;
    Vec residual = v;
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vec& q : basis.columns) {
        axpy(-dot(q, residual), q, residual);
      }
    }
    const double n = norm2(residual);
    if (n < drop_tolerance) continue;
    for (double& x : residual) x /= n;
    basis.columns.push_back(std::move(residual));
  }
  return basis;
}

inline SpanBasis orthonormal_basis(std::span<const UnitVector> vectors,
                                   double drop_tolerance = kDefaultDropTolerance) {
  std::vector<Vec> raw;
  raw.reserve(vectors.size());
  for (const UnitVector& v : vectors) raw.push_back(v.vec());
  return orthonormal_basis(std::span<const Vec>(raw), drop_tolerance);
}

struct SpanProjection {
  Vec in_span;
  double in_norm = 0.0;
  double out_norm = 0.0;
};

inline SpanProjection project_onto_span(const SpanBasis& basis,
                                        std::span<const double> r) {
  detail::require_same_dim(r.size(), basis.dim, "projection target dimension");
  SpanProjection out;
  out.in_span.assign(r.size(), 0.0);
  for (const Vec& q : basis.columns) axpy(dot(q, r), q, out.in_span);
  Vec rejection(r.begin(), r.end());
  axpy(-1.0, out.in_span, rejection);
  out.in_norm = norm2(out.in_span);
  out.out_norm = norm2(rejection);
  return out;
}

inline SpanProjection project_onto_span(const SpanBasis& basis,
                                        const UnitVector& r) {
  return project_onto_span(basis, r.values());
}

}  // namespace protocalib
