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


// Streams a small synthetic world through the detector one sample at a time
// and compares the online score against the frozen NegLabel score.

#include <cstdio>

#include "protocalib/metrics.hpp"
#include "protocalib/online.hpp"
#include "protocalib/stream.hpp"
#include "protocalib/synthetic.hpp"

namespace pc = protocalib;

int main() {
  pc::SyntheticWorldSpec spec;
  spec.d = 32;
  spec.k = 8;
  spec.l_true = 2;
  spec.l_protos = 8;
  spec.n_per_class = 100;
  spec.seed = 42;
  const pc::SyntheticWorld world = pc::generate_world(spec);

  std::vector<pc::UnitVector> id;
  for (const auto& batch : world.id_batches) id.insert(id.end(), batch.begin(), batch.end());
  std::vector<pc::NamedBatch> ood;
  for (std::size_t j = 0; j < world.ood_batches.size(); ++j) {
    ood.push_back({"cluster-" + std::to_string(j), world.ood_batches[j]});
  }
  const pc::Stream stream = pc::make_stream(id, ood, pc::StreamOrder::random(spec.seed));

  const pc::Hyperparams hp;  // tau 0.01, kappa 0.05, rho 0.1, beta 0.95
  pc::DetectorState state =
      pc::init_state(world.text_id_prototypes, world.text_neg_prototypes, hp);

  pc::ScoreSet online, baseline;
  for (const pc::StreamItem& item : stream) {
    const pc::StepTrace trace = pc::detector_step(state, item.z);
    const double frozen = pc::score_neglabel(item.z, state.frozen_bank, hp.tau);
    // Truth tags are only used here, for scoring the run.
    auto& a = item.truth == pc::Truth::kId ? online.id_scores : online.ood_scores;
    auto& b = item.truth == pc::Truth::kId ? baseline.id_scores : baseline.ood_scores;
    a.push_back(trace.final_score);
    b.push_back(frozen);
  }

  std::printf("samples %zu, positive updates %llu, negative updates %llu\n", stream.size(),
              static_cast<unsigned long long>(state.c_plus),
              static_cast<unsigned long long>(state.c_minus));
  std::printf("neglabel  AUROC %.4f  FPR95 %.4f\n", pc::auroc(baseline), pc::fpr_at_tpr(baseline));
  std::printf("online    AUROC %.4f  FPR95 %.4f\n", pc::auroc(online), pc::fpr_at_tpr(online));
  return 0;
}
