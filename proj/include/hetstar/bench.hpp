// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hetstar/model.hpp"

namespace hetstar {

struct BenchRow {
  std::size_t n = 0;
  std::size_t pairs = 0;            // star-graph score evaluations per layer and head
  std::size_t quadratic_pairs = 0;  // n^2, for a fully connected text graph
  double median_ms = 0.0;
};

/// Times the inference forward pass (encoder, graph layers, emissions and
/// Viterbi) on a synthetic sentence of each length. `sizes` must ascend.
std::vector<BenchRow> bench(const Config& config, const std::vector<std::size_t>& sizes, std::size_t repeats = 5,
                            std::uint64_t seed = 0);

/// "n,pairs,quadratic_pairs,median_ms" followed by one line per row.
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace hetstar
