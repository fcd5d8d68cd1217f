/*
 * Copyright 2026 The dance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Smallest end-to-end use of the library: cluster three Gaussian blobs with
// the full pipeline and print the score of each phase.
//
//   ./quickstart [seed]

#include <cstdlib>
#include <iostream>

#include "dance/dance.hpp"

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  dance::RunConfig config = dance::parse_config(R"(
    data = blobs
    blobs_k = 3
    blobs_per_cluster = 200
    blobs_dims = 8
    k = 3
    e_pre = 1500
    e_rim = 300
    n_rim = 5
    e_dec = 300
    encoder_widths = 32, 32
    decoder_widths = 32, 32
    decorrelator_widths = 32, 32
    rim_widths = 32, 32
  )");
  const dance::Prepared data = dance::prepare(config);
  const dance::RunOutcome run = dance::run_pipeline(config, data, seed, {true, true, true});
  if (!run.ok) {
    std::cerr << "failed in " << run.failure->phase << ": " << run.failure->message << '\n';
    return 1;
  }
  const auto& phases = run.report["phases"];
  std::cout << "decorrelator accuracy after pre-training: " << phases["pretrain"]["decorrelator_accuracy"] << '\n'
            << "RIM restart scores: " << phases["init"]["restart_scores"] << '\n'
            << "final ACC " << *run.acc << ", NMI " << *run.nmi << '\n';
  return 0;
}
