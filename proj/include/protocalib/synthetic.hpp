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
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "protocalib/error.hpp"
#include "protocalib/geometry.hpp"

namespace protocalib {

// Parameters of a synthetic embedding world: K ID clusters and L_true OOD
// clusters on the sphere, plus text prototypes offset from each cluster mean
// by gap_angle_deg.
struct SyntheticWorldSpec {
  int d = 64;
  int k = 20;
  int l_true = 4;
  int l_protos = 20;
  int n_per_class = 200;
  double noise_sigma = 0.2;
  double gap_angle_deg = 30.0;
  double min_mean_angle_deg = 60.0;
  // Angle between each negative-label anchor and the true OOD cluster mean it
  // is loosely tied to (negative j follows cluster j mod L_true). 90 or more
  // draws anchors at random away from the ID means instead.
  double neg_anchor_angle_deg = 60.0;
  std::uint64_t seed = 0;

  void validate() const {
    using detail::require;
    require(d >= 2, ErrorCode::kInvalidArgument, "d must be >= 2");
    require(k >= 1, ErrorCode::kInvalidArgument, "K must be >= 1");
    require(l_true >= 1, ErrorCode::kInvalidArgument, "L_true must be >= 1");
    require(l_protos >= 0, ErrorCode::kInvalidArgument, "L_protos must be >= 0");
    require(n_per_class >= 1, ErrorCode::kInvalidArgument, "n must be >= 1");
    require(noise_sigma >= 0.0 && std::isfinite(noise_sigma),
            ErrorCode::kInvalidArgument, "noise sigma must be >= 0");
    require(gap_angle_deg >= 0.0 && gap_angle_deg <= 90.0,
            ErrorCode::kInvalidArgument, "gap angle must lie in [0, 90]");
    require(min_mean_angle_deg >= 0.0 && min_mean_angle_deg <= 180.0,
            ErrorCode::kInvalidArgument, "min mean angle must lie in [0, 180]");
    require(neg_anchor_angle_deg >= 0.0 && neg_anchor_angle_deg <= 180.0,
            ErrorCode::kInvalidArgument, "negative anchor angle must lie in [0, 180]");
  }
};

struct SyntheticWorld {
  std::vector<std::vector<UnitVector>> id_batches;   // one per ID class
  std::vector<std::vector<UnitVector>> ood_batches;  // one per true OOD cluster
  std::vector<UnitVector> text_id_prototypes;        // K rows
  std::vector<UnitVector> text_neg_prototypes;       // L_protos rows
  std::vector<UnitVector> id_means;
  std::vector<UnitVector> ood_means;
  std::vector<UnitVector> neg_anchors;
};

namespace detail {

inline constexpr int kMaxRejections = 100000;

inline Vec gaussian_vector(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec g(d);
  for (double& x : g) x = normal(rng);
  return g;
}

inline UnitVector uniform_on_sphere(std::size_t d, std::mt19937_64& rng) {
  for (;;) {
    Vec g = gaussian_vector(d, rng);
    if (norm2(g) > 1e-6) return l2_normalize(g);
  }
}

// Samples a mean whose angle to every vector in `avoid` is at least
// min_angle_deg.
inline UnitVector sample_separated_mean(std::size_t d, double min_angle_deg,
                                        const std::vector<UnitVector>& avoid,
                                        std::mt19937_64& rng) {
  const double max_cos = std::cos(min_angle_deg * std::numbers::pi / 180.0);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    UnitVector candidate = uniform_on_sphere(d, rng);
    bool ok = true;
    for (const UnitVector& other : avoid) {
      if (dot(candidate, other) > max_cos) {
        ok = false;
        break;
      }
    }
    if (ok) return candidate;
  }
  fail(ErrorCode::kRejectionExhausted,
       "could not place a mean at least " + std::to_string(min_angle_deg) +
           " degrees from " + std::to_string(avoid.size()) + " others in d=" +
           std::to_string(d));
}

// l2(mu + sigma * t) with t the tangent-plane component of a standard normal.
inline UnitVector tangent_sample(const UnitVector& mean, double sigma,
                                 std::mt19937_64& rng) {
  Vec g = gaussian_vector(mean.dim(), rng);
  if (sigma == 0.0) return mean;
  axpy(-dot(g, mean.values()), mean.values(), g);
  Vec x = mean.vec();
  axpy(sigma, g, x);
  return l2_normalize(x);
}

// Unit vector orthogonal to every column of `basis`; nullopt when the basis
// already spans the whole space.
inline std::optional<Vec> random_orthogonal(const SpanBasis& basis,
                                            std::mt19937_64& rng) {
  if (basis.rank() >= basis.dim) return std::nullopt;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vec g = gaussian_vector(basis.dim, rng);
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vec& q : basis.columns) axpy(-dot(q, g), q, g);
    }
    const double n = norm2(g);
    if (n > 1e-6) {
      for (double& x : g) x /= n;
      return g;
    }
  }
  return std::nullopt;
}

inline UnitVector rotate_toward(const UnitVector& mean, std::span<const double> u,
                                double angle_deg) {
  const double theta = angle_deg * std::numbers::pi / 180.0;
  Vec r(mean.dim());
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = std::cos(theta) * mean[i] + std::sin(theta) * u[i];
  }
  return l2_normalize(r);
}

}  // namespace detail

// Deterministic in spec.seed. RNG draws happen in a fixed order: ID means,
// OOD means, ID samples, OOD samples, negative anchors, text offsets.
inline SyntheticWorld generate_world(const SyntheticWorldSpec& spec) {
  spec.validate();
  const auto d = static_cast<std::size_t>(spec.d);
  std::mt19937_64 rng(spec.seed);
  SyntheticWorld world;

  std::vector<UnitVector> placed;
  for (int c = 0; c < spec.k + spec.l_true; ++c) {
    UnitVector mean =
        detail::sample_separated_mean(d, spec.min_mean_angle_deg, placed, rng);
    placed.push_back(mean);
    (c < spec.k ? world.id_means : world.ood_means).push_back(std::move(mean));
  }

  auto draw = [&](const std::vector<UnitVector>& means) {
    std::vector<std::vector<UnitVector>> batches;
    for (const UnitVector& mean : means) {
      std::vector<UnitVector> batch;
      batch.reserve(static_cast<std::size_t>(spec.n_per_class));
      for (int i = 0; i < spec.n_per_class; ++i) {
        batch.push_back(detail::tangent_sample(mean, spec.noise_sigma, rng));
      }
      batches.push_back(std::move(batch));
    }
    return batches;
  };
  world.id_batches = draw(world.id_means);
  world.ood_batches = draw(world.ood_means);

  // Negative-label anchors stand for text concepts unrelated to every ID
  // class. Below 90 degrees each one is an imperfect stand-in for a true OOD
  // cluster; otherwise it is a random direction away from the ID means.
  std::vector<UnitVector> avoid = world.id_means;
  for (int j = 0; j < spec.l_protos; ++j) {
    if (spec.neg_anchor_angle_deg < 90.0) {
      const UnitVector& target = world.ood_means[static_cast<std::size_t>(j % spec.l_true)];
      const Vec target_only[] = {target.vec()};
      const auto u =
          detail::random_orthogonal(orthonormal_basis(std::span<const Vec>(target_only)), rng);
      world.neg_anchors.push_back(detail::rotate_toward(target, *u, spec.neg_anchor_angle_deg));
      continue;
    }
    UnitVector anchor =
        detail::sample_separated_mean(d, spec.min_mean_angle_deg, avoid, rng);
    avoid.push_back(anchor);
    world.neg_anchors.push_back(std::move(anchor));
  }

  // With d above the sample count, offsets are drawn orthogonal to the span
  // of every visual sample so each text prototype leaves that span.
  const std::size_t total =
      static_cast<std::size_t>(spec.k + spec.l_true) *
      static_cast<std::size_t>(spec.n_per_class);
  std::vector<Vec> visual;
  if (d > total) {
    for (const auto* group : {&world.id_batches, &world.ood_batches}) {
      for (const auto& batch : *group) {
        for (const UnitVector& z : batch) visual.push_back(z.vec());
      }
    }
  }
  auto text_for = [&](const UnitVector& mean) {
    std::vector<Vec> constraint = visual;
    constraint.push_back(mean.vec());
    const SpanBasis basis = orthonormal_basis(std::span<const Vec>(constraint));
    std::optional<Vec> u = detail::random_orthogonal(basis, rng);
    if (!u) {
      const Vec only_mean[] = {mean.vec()};
      u = detail::random_orthogonal(orthonormal_basis(std::span<const Vec>(only_mean)),
                                    rng);
    }
    return detail::rotate_toward(mean, *u, spec.gap_angle_deg);
  };
  for (const UnitVector& mean : world.id_means) {
    world.text_id_prototypes.push_back(text_for(mean));
  }
  for (const UnitVector& anchor : world.neg_anchors) {
    world.text_neg_prototypes.push_back(text_for(anchor));
  }
  return world;
}

}  // namespace protocalib
