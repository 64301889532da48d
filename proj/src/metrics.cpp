// SPDX-License-Identifier: Apache-2.0
#include "hetstar/metrics.hpp"

#include "hetstar/errors.hpp"
#include "hetstar/model.hpp"
#include "json_io.hpp"

namespace hetstar {

std::string_view to_string(RelationRow r) {
  switch (r) {
    case RelationRow::Flat: return "flat";
    case RelationRow::NST: return "NST";
    case RelationRow::NDT: return "NDT";
    case RelationRow::ME: return "ME";
  }
  return "?";
}

std::vector<RelationRow> relation_rows(const EntitySpan& span, const EntitySet& set, std::size_t length) {
  bool rows[kRelationRows] = {};
  for (const auto& other : set) {
    if (other == span) continue;
    switch (classify_pair(span, other, length)) {
      case NestingRelation::NST: rows[static_cast<int>(RelationRow::NST)] = true; break;
      case NestingRelation::NDT: rows[static_cast<int>(RelationRow::NDT)] = true; break;
      case NestingRelation::ME: rows[static_cast<int>(RelationRow::ME)] = true; break;
      default: break;
    }
  }
  std::vector<RelationRow> out;
  for (std::size_t r = 1; r < kRelationRows; ++r)
    if (rows[r]) out.push_back(static_cast<RelationRow>(r));
  if (out.empty()) out.push_back(RelationRow::Flat);
  return out;
}

EvalReport score(const std::vector<EntitySet>& gold, const std::vector<EntitySet>& predicted,
                 const std::vector<std::size_t>& lengths, std::size_t num_types) {
  if (gold.size() != predicted.size() || gold.size() != lengths.size()) {
    throw ContractError("score: gold, predicted and lengths differ in size");
  }
  EvalReport r;
  r.per_type.resize(num_types);
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const EntitySet& g = gold[s];
    const EntitySet& p = predicted[s];
    for (const auto& e : g) {
      const bool hit = p.count(e) != 0;
      auto found = [hit](Counts& c) {
        c.gold++;
        c.gold_found += hit;
      };
      found(r.micro);
      if (e.label < num_types) found(r.per_type[e.label]);
      for (RelationRow row : relation_rows(e, g, lengths[s])) found(r.per_relation[static_cast<std::size_t>(row)]);
    }
    for (const auto& e : p) {
      const bool hit = g.count(e) != 0;
      auto emitted = [hit](Counts& c) {
        c.predicted++;
        c.predicted_correct += hit;
      };
      emitted(r.micro);
      if (e.label < num_types) emitted(r.per_type[e.label]);
      for (RelationRow row : relation_rows(e, p, lengths[s])) emitted(r.per_relation[static_cast<std::size_t>(row)]);
    }
  }
  return r;
}

EvalReport evaluate(const Model& model, const std::vector<Example>& data) {
  std::vector<EntitySet> gold, predicted;
  std::vector<std::size_t> lengths;
  for (const auto& ex : data) {
    gold.push_back(ex.entities);
    predicted.push_back(model.predict(ex.sentence).entities);
    lengths.push_back(ex.sentence.tokens.size());
  }
  return score(gold, predicted, lengths, model.num_types());
}

namespace {

detail::json counts_json(const Counts& c) {
  return {{"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()},
          {"predicted", c.predicted},   {"predicted_correct", c.predicted_correct},
          {"gold", c.gold},             {"gold_found", c.gold_found}};
}

}  // namespace

std::string report_json(const EvalReport& report, const std::vector<std::string>& types, bool per_type,
                        bool per_relation) {
  detail::json j = counts_json(report.micro);
  if (per_type) {
    j["per_type"] = detail::json::object();
    for (std::size_t t = 0; t < report.per_type.size(); ++t) {
      j["per_type"][t < types.size() ? types[t] : std::to_string(t)] = counts_json(report.per_type[t]);
    }
  }
  if (per_relation) {
    j["per_relation"] = detail::json::object();
    for (std::size_t r = 0; r < kRelationRows; ++r) {
      j["per_relation"][std::string(to_string(static_cast<RelationRow>(r)))] = counts_json(report.per_relation[r]);
    }
  }
  return j.dump();
}

}  // namespace hetstar
