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


#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "protocalib/objective.hpp"
#include "protocalib/synthetic.hpp"
#include "protocalib/verification.hpp"

namespace pc = protocalib;

namespace {

pc::UnitVector unit(pc::Vec v) { return pc::l2_normalize(v); }

pc::PseudoLabel random_pseudo(std::size_t m, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  pc::Vec p(m);
  double s = 0.0;
  for (double& q : p) s += (q = std::exp(2.0 * n(rng)));
  for (double& q : p) q /= s;
  return {p};
}

std::vector<pc::UnitVector> random_w(std::size_t m, std::size_t d, std::mt19937_64& rng) {
  std::vector<pc::UnitVector> w;
  for (std::size_t i = 0; i < m; ++i) w.push_back(pc::detail::uniform_on_sphere(d, rng));
  return w;
}

// Two classes at +e1 and -e1 in d = 3.
pc::LabeledBatch antipodal_batch() {
  pc::LabeledBatch b;
  b.label_space = {0, 1};
  b.rows.push_back({unit({1, 0, 0}), 0});
  b.rows.push_back({unit({-1, 0, 0}), 1});
  return b;
}

}  // namespace

TEST(LabeledBatch, UnknownLabelRejected) {
  pc::LabeledBatch b = antipodal_batch();
  b.rows.push_back({unit({0, 1, 0}), 7});
  try {
    b.validate();
    FAIL();
  } catch (const pc::Error& e) {
    EXPECT_EQ(e.code(), pc::ErrorCode::kUnknownLabel);
  }
}

TEST(SupervisedLoss, SingleSampleUnitTemperature) {
  pc::LabeledBatch b;
  b.label_space = {0, 1};
  b.rows.push_back({unit({1, 0}), 0});
  const std::vector<pc::UnitVector> W{unit({1, 0}), unit({0, 1})};
  EXPECT_NEAR(pc::supervised_loss(W, b, 1.0), std::log1p(std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(pc::supervised_loss(W, b, 1.0), 0.31326168751822286, 1e-12);
}

TEST(SupervisedLoss, EquidistantIsLogTwoPerSample) {
  pc::LabeledBatch b;
  b.label_space = {0, 1};
  for (int i = 0; i < 5; ++i) b.rows.push_back({unit({1, 1}), i % 2});
  const std::vector<pc::UnitVector> W{unit({1, 0}), unit({0, 1})};
  EXPECT_NEAR(pc::supervised_loss(W, b, 0.05), 5 * std::log(2.0), 1e-12);
}

TEST(SupervisedLoss, NearZeroAtSmallTemperature) {
  const std::vector<pc::UnitVector> W{unit({1, 0, 0}), unit({-1, 0, 0})};
  pc::LabeledBatch b = antipodal_batch();
  for (int i = 0; i < 10; ++i) b.rows.push_back(b.rows[i % 2]);
  const double loss = pc::supervised_loss(W, b, 1e-3);
  EXPECT_GE(loss, 0.0);
  EXPECT_LT(loss, 1e-6);
}

TEST(SupervisedLoss, Errors) {
  const pc::LabeledBatch b = antipodal_batch();
  const std::vector<pc::UnitVector> three{unit({1, 0, 0}), unit({0, 1, 0}), unit({0, 0, 1})};
  EXPECT_THROW(pc::supervised_loss(three, b, 1.0), pc::Error);
  const std::vector<pc::UnitVector> flat{unit({1, 0}), unit({0, 1})};
  try {
    pc::supervised_loss(flat, b, 1.0);
    FAIL();
  } catch (const pc::Error& e) {
    EXPECT_EQ(e.code(), pc::ErrorCode::kDimensionMismatch);
  }
}

TEST(PseudoLabel, SingleLabelSpace) {
  const pc::PrototypeBank bank = pc::PrototypeBank::from_vectors(
      std::vector<pc::UnitVector>{unit({1, 0}), unit({0, 1})}, {});
  const std::vector<int> labels{1};
  EXPECT_EQ(pc::pseudo_label(unit({1, 0}), bank, labels, 0.01).probabilities, (pc::Vec{1.0}));
}

TEST(PseudoLabel, AlignedUnitTemperature) {
  const pc::PrototypeBank bank = pc::PrototypeBank::from_vectors(
      std::vector<pc::UnitVector>{unit({1, 0}), unit({0, 1})}, {});
  const std::vector<int> labels{0, 1};
  const pc::Vec p = pc::pseudo_label(unit({1, 0}), bank, labels, 1.0).probabilities;
  EXPECT_NEAR(p[0], 0.7310585786300049, 1e-12);
  EXPECT_NEAR(p[1], 0.2689414213699951, 1e-12);
}

TEST(PseudoLabel, EquidistantIsUniform) {
  const pc::PrototypeBank bank = pc::PrototypeBank::from_vectors(
      std::vector<pc::UnitVector>{unit({1, 0, 0}), unit({0, 1, 0})},
      std::vector<pc::UnitVector>{unit({-1, 0, 0})});
  const std::vector<int> labels{0, 1, 2};
  for (double q : pc::pseudo_label(unit({0, 0, 1}), bank, labels, 0.01).probabilities) {
    EXPECT_NEAR(q, 1.0 / 3.0, 1e-15);
  }
}

TEST(PseudoLabel, RestrictsToLabelSpaceOrder) {
  const pc::PrototypeBank bank = pc::PrototypeBank::from_vectors(
      std::vector<pc::UnitVector>{unit({1, 0}), unit({0, 1})},
      std::vector<pc::UnitVector>{unit({-1, 0})});
  const std::vector<int> labels{2, 0};
  const pc::Vec p = pc::pseudo_label(unit({1, 0}), bank, labels, 1.0).probabilities;
  EXPECT_NEAR(p[1], 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  const std::vector<int> unknown{5};
  try {
    pc::pseudo_label(unit({1, 0}), bank, unknown, 1.0);
    FAIL();
  } catch (const pc::Error& e) {
    EXPECT_EQ(e.code(), pc::ErrorCode::kUnknownLabel);
  }
}

TEST(PseudoSupervisedLoss, EqualsEntropyWhenTargetsMatch) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto W = random_w(4, 6, rng);
    const pc::UnitVector z = pc::detail::uniform_on_sphere(6, rng);
    const pc::PseudoLabel pi{pc::softmax_over_prototypes(z, W, 0.3)};
    EXPECT_NEAR(pc::pseudo_supervised_loss(W, z, pi, 0.3), pc::entropy(pi), 1e-12);
  }
}

TEST(PseudoSupervisedLoss, OneHotReducesToSupervised) {
  const std::vector<pc::UnitVector> W{unit({1, 0}), unit({0, 1})};
  EXPECT_NEAR(pc::pseudo_supervised_loss(W, unit({1, 0}), pc::PseudoLabel::one_hot(2, 0), 1.0),
              0.31326168751822286, 1e-12);
}

TEST(PseudoSupervisedLoss, UniformTargetSymmetricPrototypes) {
  const std::vector<pc::UnitVector> W{unit({1, 0, 0}), unit({0, 1, 0}), unit({-1, 0, 0})};
  const pc::PseudoLabel u{{1.0 / 3, 1.0 / 3, 1.0 / 3}};
  EXPECT_NEAR(pc::pseudo_supervised_loss(W, unit({0, 0, 1}), u, 0.05), std::log(3.0), 1e-12);
}

TEST(PseudoSupervisedLoss, BoundedBelowByEntropy) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 500; ++t) {
    const auto W = random_w(5, 8, rng);
    const pc::UnitVector z = pc::detail::uniform_on_sphere(8, rng);
    const pc::PseudoLabel p = random_pseudo(5, rng);
    const double kappa = t % 2 ? 0.05 : 1.0;
    EXPECT_GE(pc::pseudo_supervised_loss(W, z, p, kappa), pc::entropy(p) - 1e-9);
  }
}

TEST(GradPseudoLoss, ZeroWhenTargetsMatch) {
  std::mt19937_64 rng(3);
  const auto W = random_w(4, 5, rng);
  const pc::UnitVector z = pc::detail::uniform_on_sphere(5, rng);
  const pc::PseudoLabel pi{pc::softmax_over_prototypes(z, W, 0.05)};
  EXPECT_LT(pc::grad_pseudo_loss(W, z, pi, 0.05).frobenius_norm(), 1e-12);
}

TEST(GradPseudoLoss, RowsParallelToSampleAndNormBounded) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    const auto W = random_w(5, 16, rng);
    const pc::UnitVector z = pc::detail::uniform_on_sphere(16, rng);
    const double kappa = t % 2 ? 0.05 : 1.0;
    const pc::RowMatrix g = pc::grad_pseudo_loss(W, z, random_pseudo(5, rng), kappa);
    EXPECT_LE(g.frobenius_norm(), std::sqrt(2.0) / kappa + 1e-9);
    for (std::size_t y = 0; y < 5; ++y) {
      pc::Vec rejection(g.row(y).begin(), g.row(y).end());
      pc::axpy(-pc::dot(g.row(y), z.values()), z.values(), rejection);
      EXPECT_LT(pc::norm2(rejection), 1e-12);
    }
  }
}

TEST(GradPseudoLoss, MatchesCentralDifferences) {
  const pc::GradientCheckResult r = pc::verify_gradient();
  EXPECT_EQ(r.cases.size(), 40u);
  EXPECT_LT(r.max_relative_error, 1e-5);
  EXPECT_TRUE(r.passed);
}

TEST(BatchMinimize, AntipodalClassesSeparate) {
  const pc::LabeledBatch b = antipodal_batch();
  std::vector<pc::UnitVector> init{unit({1, 1, 0}), unit({-1, 1, 0})};
  const pc::BatchMinimizeResult r = pc::batch_minimize(b, 1.0, init, 3000, 0.5);
  EXPECT_LT(std::acos(std::min(1.0, r.prototypes[0][0])), 1e-3);
  EXPECT_LT(std::acos(std::min(1.0, -r.prototypes[1][0])), 1e-3);
  EXPECT_LE(r.loss, r.initial_loss);
  const pc::FixedPointResidual res = pc::fixed_point_residual(r.prototypes, b, 1.0);
  for (const auto& x : res) {
    ASSERT_TRUE(x.has_value());
    EXPECT_LT(*x, 1e-6);
  }
}

TEST(BatchMinimize, BestLossTraceNonIncreasing) {
  pc::SyntheticWorldSpec spec;
  spec.d = 8;
  spec.k = 3;
  spec.l_true = 1;
  spec.l_protos = 0;
  spec.n_per_class = 20;
  spec.noise_sigma = 0.4;
  spec.seed = 5;
  const pc::LabeledBatch b = pc::labeled_id_batch(pc::generate_world(spec));
  std::mt19937_64 rng(1);
  // A deliberately large step so some iterates get worse.
  const pc::BatchMinimizeResult r = pc::batch_minimize(b, 0.05, random_w(3, 8, rng), 500, 0.05);
  for (std::size_t i = 1; i < r.best_loss_trace.size(); ++i) {
    EXPECT_LE(r.best_loss_trace[i], r.best_loss_trace[i - 1]);
  }
  EXPECT_EQ(r.best_loss_trace.back(), r.loss);
  EXPECT_NEAR(pc::supervised_loss(r.prototypes, b, 0.05), r.loss, 1e-9 * (1 + r.loss));
}

TEST(BatchMinimize, RejectsBadOptions) {
  const pc::LabeledBatch b = antipodal_batch();
  std::vector<pc::UnitVector> init{unit({1, 1, 0}), unit({-1, 1, 0})};
  EXPECT_THROW(pc::batch_minimize(b, 1.0, init, 0, 0.1), pc::Error);
  EXPECT_THROW(pc::batch_minimize(b, 1.0, init, 10, 0.0), pc::Error);
  EXPECT_THROW(pc::batch_minimize(b, 0.0, init, 10, 0.1), pc::Error);
}

TEST(FixedPointResidual, OptimumOfSmallInstance) {
  pc::FixedPointSettings s;
  s.instances = 1;
  const pc::FixedPointResult r = pc::verify_fixed_point(s);
  ASSERT_EQ(r.instances.size(), 1u);
  EXPECT_LT(r.max_residual, 1e-3);
}

TEST(FixedPointResidual, RotatedPrototypeIsFlagged) {
  pc::FixedPointSettings s;
  pc::SyntheticWorldSpec spec = s.world;
  spec.seed = 0;
  const pc::LabeledBatch b = pc::labeled_id_batch(pc::generate_world(spec));
  auto init = pc::class_sum_init(b);
  ASSERT_TRUE(init.has_value());
  const pc::BatchMinimizeResult r = pc::batch_minimize(
      pc::SoftBatch::from_labeled(b), 0.05, *init,
      pc::BatchMinimizeOptions{s.max_steps, s.step / 200.0, s.stall_tolerance});
  std::vector<pc::UnitVector> W = r.prototypes;
  // Rotate w_0 by 10 degrees toward a direction orthogonal to it.
  pc::Vec u(8, 0.0);
  u[0] = 1.0;
  pc::axpy(-pc::dot(u, W[0].values()), W[0].values(), u);
  const pc::UnitVector o = pc::l2_normalize(u);
  const double a = 10.0 * M_PI / 180.0;
  pc::Vec rotated(8, 0.0);
  pc::axpy(std::cos(a), W[0].values(), rotated);
  pc::axpy(std::sin(a), o.values(), rotated);
  W[0] = pc::l2_normalize(rotated);
  const pc::FixedPointResidual res = pc::fixed_point_residual(W, b, 0.05);
  ASSERT_TRUE(res[0].has_value());
  EXPECT_GT(*res[0], 0.05);
}

TEST(FixedPointResidual, DegenerateClassReported) {
  // Targets equal to the model's own softmax make every v_y vanish.
  const std::vector<pc::UnitVector> W{unit({1, 0}), unit({0, 1})};
  pc::SoftBatch b;
  b.label_count = 2;
  b.samples.push_back(unit({1, 1}));
  b.targets.push_back({{0.5, 0.5}});
  const pc::FixedPointResidual res = pc::fixed_point_residual(W, b, 0.05);
  EXPECT_FALSE(res[0].has_value());
  EXPECT_FALSE(res[1].has_value());
}

TEST(FixedPointResidual, ResidualsWithinRange) {
  std::mt19937_64 rng(9);
  pc::SyntheticWorldSpec spec;
  spec.d = 6;
  spec.k = 3;
  spec.l_true = 1;
  spec.l_protos = 0;
  spec.n_per_class = 10;
  const pc::LabeledBatch b = pc::labeled_id_batch(pc::generate_world(spec));
  for (int t = 0; t < 20; ++t) {
    for (const auto& x : pc::fixed_point_residual(random_w(3, 6, rng), b, 0.05)) {
      if (!x) continue;
      EXPECT_GE(*x, 0.0);
      EXPECT_LE(*x, 2.0 + 1e-12);
    }
  }
}
