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


// Fits visual prototypes on a tiny labeled batch and compares their distance
// from the text prototypes with the projection lower bound, for a few gap
// angles.

#include <cstdio>

#include "protocalib/gap.hpp"
#include "protocalib/synthetic.hpp"

namespace pc = protocalib;

int main() {
  std::printf("%8s %12s %12s %s\n", "gap_deg", "bound", "||R-W*||^2", "holds");
  for (double gap : {10.0, 30.0, 60.0, 90.0}) {
    pc::SyntheticWorldSpec spec;
    spec.d = 32;
    spec.k = 3;
    spec.l_true = 1;
    spec.l_protos = 0;
    spec.n_per_class = 4;
    spec.noise_sigma = 0.2;
    spec.gap_angle_deg = gap;
    spec.seed = 5;
    const pc::SyntheticWorld world = pc::generate_world(spec);

    pc::LabeledBatch batch;
    for (int y = 0; y < spec.k; ++y) {
      batch.label_space.push_back(y);
      for (const pc::UnitVector& z : world.id_batches[y]) batch.rows.push_back({z, y});
    }
    const pc::GapReport r = pc::verify_gap_theorem(world.text_id_prototypes, batch, 0.05);
    std::printf("%8.1f %12.6f %12.6f %s\n", gap, r.bound_total, r.frobenius_gap,
                r.satisfied ? "yes" : "no");
  }
  return 0;
}
