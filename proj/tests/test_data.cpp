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


#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "protocalib/embedding_io.hpp"
#include "protocalib/gap.hpp"
#include "protocalib/stream.hpp"
#include "protocalib/synthetic.hpp"
#include "protocalib/verification.hpp"

namespace pc = protocalib;

namespace {

pc::UnitVector unit(pc::Vec v) { return pc::l2_normalize(v); }

pc::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const pc::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return pc::ErrorCode::kInvalidArgument;
}

double max_diff(const pc::UnitVector& a, const pc::UnitVector& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

pc::SyntheticWorldSpec small_spec() {
  pc::SyntheticWorldSpec s;
  s.d = 16;
  s.k = 3;
  s.l_true = 2;
  s.l_protos = 4;
  s.n_per_class = 10;
  s.seed = 11;
  return s;
}

std::string encoded(const pc::SyntheticWorld& w) {
  std::string out;
  auto add = [&](const std::vector<pc::UnitVector>& vs) {
    out += pc::encode_embeddings(pc::to_embedding_set(vs));
  };
  for (const auto& b : w.id_batches) add(b);
  for (const auto& b : w.ood_batches) add(b);
  add(w.text_id_prototypes);
  add(w.text_neg_prototypes);
  return out;
}

class TempDir {
 public:
  TempDir() : path_(std::filesystem::temp_directory_path() / "protocalib_data_test") {
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace

TEST(GenerateWorld, ShapesFollowSpec) {
  const pc::SyntheticWorld w = pc::generate_world(small_spec());
  ASSERT_EQ(w.id_batches.size(), 3u);
  ASSERT_EQ(w.ood_batches.size(), 2u);
  EXPECT_EQ(w.id_batches[1].size(), 10u);
  EXPECT_EQ(w.text_id_prototypes.size(), 3u);
  EXPECT_EQ(w.text_neg_prototypes.size(), 4u);
  EXPECT_EQ(w.text_id_prototypes[0].dim(), 16u);
}

TEST(GenerateWorld, NoiseFreeZeroGapCollapses) {
  pc::SyntheticWorldSpec s = small_spec();
  s.noise_sigma = 0.0;
  s.gap_angle_deg = 0.0;
  const pc::SyntheticWorld w = pc::generate_world(s);
  for (std::size_t y = 0; y < w.id_batches.size(); ++y) {
    EXPECT_LT(max_diff(w.text_id_prototypes[y], w.id_means[y]), 1e-12);
    for (const auto& z : w.id_batches[y]) EXPECT_LT(max_diff(z, w.id_means[y]), 1e-12);
  }
}

TEST(GenerateWorld, MeansRespectMinimumAngle) {
  const pc::SyntheticWorldSpec s = small_spec();
  const pc::SyntheticWorld w = pc::generate_world(s);
  std::vector<pc::UnitVector> means = w.id_means;
  means.insert(means.end(), w.ood_means.begin(), w.ood_means.end());
  const double max_cos = std::cos(s.min_mean_angle_deg * M_PI / 180.0);
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (std::size_t j = i + 1; j < means.size(); ++j) {
      EXPECT_LE(pc::dot(means[i], means[j]), max_cos + 1e-12);
    }
  }
  for (std::size_t y = 0; y < w.id_means.size(); ++y) {
    EXPECT_NEAR(std::acos(pc::dot(w.id_means[y], w.text_id_prototypes[y])) * 180.0 / M_PI,
                s.gap_angle_deg, 1e-9);
  }
}

TEST(GenerateWorld, RightAngleGapGivesMaximalBounds) {
  pc::SyntheticWorldSpec s;
  s.d = 32;
  s.k = 2;
  s.l_true = 1;
  s.l_protos = 0;
  s.n_per_class = 5;
  s.gap_angle_deg = 90.0;
  const pc::SyntheticWorld w = pc::generate_world(s);
  const pc::GapBound g = pc::modality_gap_bound(w.text_id_prototypes, pc::labeled_id_batch(w));
  for (double b : g.per_class_bound) EXPECT_NEAR(b, 2.0, 1e-9);
}

TEST(GenerateWorld, Deterministic) {
  EXPECT_EQ(encoded(pc::generate_world(small_spec())), encoded(pc::generate_world(small_spec())));
  pc::SyntheticWorldSpec other = small_spec();
  other.seed = 12;
  EXPECT_NE(encoded(pc::generate_world(small_spec())), encoded(pc::generate_world(other)));
}

TEST(GenerateWorld, InfeasibleAnglesExhaustRejection) {
  pc::SyntheticWorldSpec s = small_spec();
  s.d = 2;
  s.k = 5;
  s.l_true = 1;
  s.min_mean_angle_deg = 100.0;
  EXPECT_EQ(code_of([&] { pc::generate_world(s); }), pc::ErrorCode::kRejectionExhausted);
}

TEST(GenerateWorld, InvalidSpec) {
  pc::SyntheticWorldSpec s = small_spec();
  s.gap_angle_deg = 120.0;
  EXPECT_EQ(code_of([&] { s.validate(); }), pc::ErrorCode::kInvalidArgument);
  s = small_spec();
  s.k = 0;
  EXPECT_EQ(code_of([&] { s.validate(); }), pc::ErrorCode::kInvalidArgument);
}

TEST(Emb1, LayoutIsLittleEndian) {
  pc::EmbeddingSet set;
  set.dim = 2;
  set.labeled = true;
  set.records.push_back({-3, {1.0f, 0.0f}});
  const std::string bytes = pc::encode_embeddings(set);
  ASSERT_EQ(bytes.size(), 16u + 12u);
  const unsigned char expected[] = {'E', 'M', 'B', '1', 2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0,
                                    0xfd, 0xff, 0xff, 0xff, 0, 0, 0x80, 0x3f, 0, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data(), expected, sizeof expected), 0);
}

TEST(Emb1, FileRoundTripIsBitExact) {
  TempDir dir;
  const pc::SyntheticWorld w = pc::generate_world(small_spec());
  const std::vector<int> labels(w.id_batches[0].size(), 4);
  const pc::EmbeddingSet set = pc::to_embedding_set(w.id_batches[0], labels);
  pc::write_embeddings(dir / "a.emb1", set);
  const pc::EmbeddingSet back = pc::read_embeddings(dir / "a.emb1");
  EXPECT_EQ(back.dim, set.dim);
  EXPECT_TRUE(back.labeled);
  ASSERT_EQ(back.records.size(), set.records.size());
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    EXPECT_EQ(back.records[i].label, 4);
    EXPECT_EQ(std::memcmp(back.records[i].values.data(), set.records[i].values.data(),
                          set.dim * sizeof(float)),
              0);
  }
  EXPECT_EQ(pc::encode_embeddings(back), pc::encode_embeddings(set));
}

TEST(Emb1, BadMagic) {
  std::string bytes = pc::encode_embeddings(pc::to_embedding_set(std::vector{unit({1, 0})}));
  bytes.replace(0, 4, "XXXX");
  EXPECT_EQ(code_of([&] { pc::decode_embeddings(bytes); }), pc::ErrorCode::kBadMagic);
}

TEST(Emb1, NormViolationNamesRecord) {
  pc::EmbeddingSet set;
  set.dim = 2;
  set.records.push_back({-1, {1.0f, 0.0f}});
  set.records.push_back({-1, {0.5f, 0.0f}});
  const std::string bytes = pc::encode_embeddings(set);
  try {
    pc::decode_embeddings(bytes);
    FAIL();
  } catch (const pc::Error& e) {
    EXPECT_EQ(e.code(), pc::ErrorCode::kNormViolation);
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos);
  }
}

TEST(Emb1, TruncatedAndTrailingBytes) {
  const std::string bytes =
      pc::encode_embeddings(pc::to_embedding_set(std::vector{unit({1, 0}), unit({0, 1})}));
  EXPECT_EQ(code_of([&] { pc::decode_embeddings(bytes.substr(0, bytes.size() - 1)); }),
            pc::ErrorCode::kTruncatedFile);
  EXPECT_EQ(code_of([&] { pc::decode_embeddings(bytes.substr(0, 10)); }),
            pc::ErrorCode::kTruncatedFile);
  EXPECT_EQ(code_of([&] { pc::decode_embeddings(bytes + "x"); }),
            pc::ErrorCode::kDimensionMismatch);
}

TEST(Emb1, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { pc::read_embeddings("/nonexistent/protocalib/x.emb1"); }),
            pc::ErrorCode::kIoError);
}

TEST(EmbCsv, RoundTrip) {
  const pc::SyntheticWorld w = pc::generate_world(small_spec());
  const pc::EmbeddingSet set = pc::to_embedding_set(w.text_neg_prototypes);
  const std::string text = pc::encode_embeddings_csv(set);
  EXPECT_EQ(text.rfind("label,c0,c1,", 0), 0u);
  const pc::EmbeddingSet back = pc::decode_embeddings_csv(text);
  ASSERT_EQ(back.records.size(), set.records.size());
  EXPECT_FALSE(back.labeled);
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    EXPECT_EQ(back.records[i].values, set.records[i].values);
  }
}

TEST(MakeStream, SingleIdSample) {
  const std::vector<pc::UnitVector> id{unit({1, 0})};
  const pc::Stream s = pc::make_stream(id, {}, pc::StreamOrder::random(0));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].truth, pc::Truth::kId);
}

TEST(MakeStream, IdFirstAndOodFirst) {
  const pc::SyntheticWorld w = pc::generate_world(small_spec());
  std::vector<pc::UnitVector> id;
  for (const auto& b : w.id_batches) id.insert(id.end(), b.begin(), b.end());
  const std::vector<pc::NamedBatch> ood{{"a", w.ood_batches[0]}, {"b", w.ood_batches[1]}};
  const pc::Stream first = pc::make_stream(id, ood, pc::StreamOrder::id_first(1));
  ASSERT_EQ(first.size(), 50u);
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(first[i].truth, i < id.size() ? pc::Truth::kId : pc::Truth::kOod);
  }
  const pc::Stream last = pc::make_stream(id, ood, pc::StreamOrder::ood_first(1));
  for (std::size_t i = 0; i < last.size(); ++i) {
    EXPECT_EQ(last[i].truth, i < 20 ? pc::Truth::kOod : pc::Truth::kId);
  }
}

TEST(MakeStream, RandomIsSeededPermutation) {
  const pc::SyntheticWorld w = pc::generate_world(small_spec());
  const std::vector<pc::NamedBatch> ood{{"a", w.ood_batches[0]}};
  const pc::Stream x = pc::make_stream(w.id_batches[0], ood, pc::StreamOrder::random(5));
  const pc::Stream y = pc::make_stream(w.id_batches[0], ood, pc::StreamOrder::random(5));
  ASSERT_EQ(x.size(), 20u);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].z.vec(), y[i].z.vec());
}

TEST(MakeStream, TemporalBlocksInGivenOrder) {
  const pc::SyntheticWorld w = pc::generate_world(small_spec());
  std::vector<pc::UnitVector> id;
  for (const auto& b : w.id_batches) id.insert(id.end(), b.begin(), b.end());
  const std::vector<pc::NamedBatch> ood{{"A", w.ood_batches[0]}, {"B", w.ood_batches[1]}};
  for (const auto& names : {std::vector<std::string>{"A", "B"}, std::vector<std::string>{"B", "A"}}) {
    const pc::Stream s = pc::make_stream(id, ood, pc::StreamOrder::temporal(names, 3));
    ASSERT_EQ(s.size(), 50u);
    std::size_t last_first = 0, first_second = s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i].source == names[0]) last_first = i;
      if (s[i].source == names[1]) first_second = std::min(first_second, i);
    }
    EXPECT_LT(last_first, first_second);
  }
}

TEST(MakeStream, TemporalNameErrors) {
  const pc::SyntheticWorld w = pc::generate_world(small_spec());
  const std::vector<pc::NamedBatch> ood{{"A", w.ood_batches[0]}, {"B", w.ood_batches[1]}};
  EXPECT_EQ(code_of([&] {
              pc::make_stream(w.id_batches[0], ood, pc::StreamOrder::temporal({"A", "C"}, 0));
            }),
            pc::ErrorCode::kUnknownDatasetName);
  EXPECT_EQ(code_of([&] {
              pc::make_stream(w.id_batches[0], ood, pc::StreamOrder::temporal({"A", "A"}, 0));
            }),
            pc::ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] {
              pc::make_stream(w.id_batches[0], ood, pc::StreamOrder::temporal({"A"}, 0));
            }),
            pc::ErrorCode::kInvalidArgument);
}
