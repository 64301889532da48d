// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "hetstar/corpus.hpp"
#include "hetstar/entities.hpp"

namespace hetstar {

class Model;

/// Exact-match counts. Ratios use the 0/0 -> 0 convention. The two match
/// counts agree except on relation rows, where a gold entity and its
/// matching prediction can fall in different rows.
struct Counts {
  std::size_t predicted = 0;
  std::size_t predicted_correct = 0;
  std::size_t gold = 0;
  std::size_t gold_found = 0;

  double precision() const { return predicted ? static_cast<double>(predicted_correct) / predicted : 0.0; }
  double recall() const { return gold ? static_cast<double>(gold_found) / gold : 0.0; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
};

enum class RelationRow { Flat = 0, NST = 1, NDT = 2, ME = 3 };
inline constexpr std::size_t kRelationRows = 4;
std::string_view to_string(RelationRow r);

/// Rows `span` belongs to given the other members of `set`: one row per
/// NST, NDT or ME relation it takes part in, Flat when it takes part in none.
std::vector<RelationRow> relation_rows(const EntitySpan& span, const EntitySet& set, std::size_t length);

struct EvalReport {
  Counts micro;
  std::vector<Counts> per_type;
  /// Gold entities are bucketed by relations within the gold set, predicted
  /// entities by relations within the predicted set.
  std::array<Counts, kRelationRows> per_relation{};
};

EvalReport score(const std::vector<EntitySet>& gold, const std::vector<EntitySet>& predicted,
                 const std::vector<std::size_t>& lengths, std::size_t num_types);

/// Predicts every example and scores against its gold entities.
EvalReport evaluate(const Model& model, const std::vector<Example>& data);

/// Single-line JSON summary.
std::string report_json(const EvalReport& report, const std::vector<std::string>& types, bool per_type,
                        bool per_relation);

}  // namespace hetstar
