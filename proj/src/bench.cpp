// SPDX-License-Identifier: Apache-2.0
#include "hetstar/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>

#include "hetstar/errors.hpp"
#include "hetstar/stargraph.hpp"

namespace hetstar {

std::vector<BenchRow> bench(const Config& config, const std::vector<std::size_t>& sizes, std::size_t repeats,
                            std::uint64_t seed) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw PreconditionError("bench sizes must ascend");
  if (repeats == 0) throw PreconditionError("bench needs at least one repeat");
  std::mt19937_64 rng(seed);
  constexpr std::size_t kWords = 64;
  Sentence words;
  for (std::size_t i = 0; i < kWords; ++i) words.tokens.push_back("tok" + std::to_string(i));
  Vocabulary vocab;
  vocab.extend({words});
  const Model model(config, vocab);

  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    if (n == 0) throw PreconditionError("bench sizes must be positive");
    Sentence s;
    for (std::size_t i = 0; i < n; ++i) s.tokens.push_back(words.tokens[rng() % kWords]);
    BenchRow row;
    row.n = n;
    row.pairs = count_attention_pairs(build_topology(n, config.types.size(), config.window)).pairs;
    row.quadratic_pairs = n * n;
    std::vector<double> ms;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto paths = model.best_paths(s);
      const auto t1 = std::chrono::steady_clock::now();
      if (paths.size() != config.types.size()) throw ContractError("bench: missing per-type paths");
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    row.median_ms = ms[ms.size() / 2];
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "n,pairs,quadratic_pairs,median_ms\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.3f\n", r.n, r.pairs, r.quadratic_pairs, r.median_ms);
    out += buf;
  }
  return out;
}

}  // namespace hetstar
