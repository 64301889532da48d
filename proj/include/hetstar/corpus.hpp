// SPDX-License-Identifier: Apache-2.0
//
// Labeled sentences, the JSON-lines dataset format and the synthetic nested
// corpus generator.
//
// Dataset line: {"tokens": [...], "pos": [...], "entities": [[start, end, "TYPE"], ...]}
// with 0-based inclusive spans; "pos" is optional.
#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "hetstar/encoder.hpp"
#include "hetstar/entities.hpp"

namespace hetstar {

struct Example {
  Sentence sentence;
  EntitySet entities;
};

/// Reads one example per non-blank line. Entity type names resolve against
/// `types`; unseen names are appended when `extend_types` is true and are a
/// ParseError otherwise. Errors name the 1-based line.
std::vector<Example> read_jsonl(std::istream& in, std::vector<std::string>& types, bool extend_types);

/// Writes examples with entities in (start, end, label) order.
void write_jsonl(std::ostream& out, const std::vector<Example>& examples, const std::vector<std::string>& types);

/// Synthetic grammar. Every entity token carries a character prefix naming
/// its type(s), so labels are learnable from surface form; fillers separate
/// top-level entities.
struct GrammarSpec {
  std::size_t vocab_size = 200;    // distinct filler words
  std::size_t entity_vocab = 20;   // distinct entity tokens per prefix
  std::size_t num_types = 3;
  std::vector<std::string> type_names;  // default T0, T1, ...
  std::size_t min_length = 5;
  std::size_t max_length = 20;
  /// Chance that an entity group is nested with one type (NST), nested across
  /// types (NDT), or a single span with two labels (ME). The remainder is
  /// flat. Must sum to at most 1.
  double p_nst = 0.0;
  double p_ndt = 0.0;
  double p_me = 0.0;
  std::size_t max_depth = 2;
  std::size_t sentences = 32;
  std::uint64_t seed = 0;

  /// Throws SpecError on an infeasible spec.
  void validate() const;
  std::vector<std::string> types() const;

  static GrammarSpec from_json(const std::string& text);
  std::string to_json() const;
};

/// Deterministic for a fixed spec. Every per-type entity subset of every
/// sentence passes is_representable and validate_entity_set.
std::vector<Example> generate_corpus(const GrammarSpec& spec);

}  // namespace hetstar
