// SPDX-License-Identifier: Apache-2.0
#include "hetstar/corpus.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "hetstar/errors.hpp"
#include "json_io.hpp"

namespace hetstar {

using detail::json;

std::vector<Example> read_jsonl(std::istream& in, std::vector<std::string>& types, bool extend_types) {
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    Example ex;
    try {
      if (!j.is_object() || !j.contains("tokens")) throw ParseError(line_no, "expected an object with \"tokens\"");
      ex.sentence.tokens = j.at("tokens").get<std::vector<std::string>>();
      if (ex.sentence.tokens.empty()) throw ParseError(line_no, "empty token list");
      if (j.contains("pos")) {
        ex.sentence.pos = j.at("pos").get<std::vector<std::string>>();
        if (ex.sentence.pos.size() != ex.sentence.tokens.size()) {
          throw ParseError(line_no, "pos and tokens differ in length");
        }
      }
      if (j.contains("entities")) {
        for (const auto& e : j.at("entities")) {
          if (!e.is_array() || e.size() != 3) throw ParseError(line_no, "entity must be [start, end, \"TYPE\"]");
          const auto start = e.at(0).get<long long>();
          const auto end = e.at(1).get<long long>();
          const auto name = e.at(2).get<std::string>();
          if (start < 0 || end < start || end >= static_cast<long long>(ex.sentence.tokens.size())) {
            throw ParseError(line_no, "entity span [" + std::to_string(start) + ", " + std::to_string(end) +
                                          "] out of range");
          }
          auto it = std::find(types.begin(), types.end(), name);
          if (it == types.end()) {
            if (!extend_types) throw ParseError(line_no, "unknown entity type '" + name + "'");
            types.push_back(name);
            it = types.end() - 1;
          }
          ex.entities.insert({static_cast<std::size_t>(start), static_cast<std::size_t>(end),
                              static_cast<TypeId>(it - types.begin())});
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void write_jsonl(std::ostream& out, const std::vector<Example>& examples, const std::vector<std::string>& types) {
  for (const auto& ex : examples) {
    json j;
    j["tokens"] = ex.sentence.tokens;
    if (!ex.sentence.pos.empty()) j["pos"] = ex.sentence.pos;
    j["entities"] = json::array();
    for (const auto& e : ex.entities) {
      if (e.label >= types.size()) throw DataError("entity label " + std::to_string(e.label) + " has no name");
      j["entities"].push_back({e.start, e.end, types[e.label]});
    }
    out << j.dump() << '\n';
  }
}

void GrammarSpec::validate() const {
  for (auto [name, p] : {std::pair{"p_nst", p_nst}, {"p_ndt", p_ndt}, {"p_me", p_me}}) {
    if (!(p >= 0.0 && p <= 1.0)) throw SpecError(std::string(name) + " must lie in [0, 1]");
  }
  if (p_nst + p_ndt + p_me > 1.0 + 1e-12) throw SpecError("p_nst + p_ndt + p_me exceeds 1");
  if (num_types == 0 || num_types > 26) throw SpecError("num_types must be in [1, 26]");
  if (!type_names.empty() && type_names.size() != num_types) {
    throw SpecError("type_names has " + std::to_string(type_names.size()) + " entries for " +
                    std::to_string(num_types) + " types");
  }
  if ((p_ndt > 0.0 || p_me > 0.0) && num_types < 2) throw SpecError("NDT and ME need at least two types");
  if (vocab_size == 0 || entity_vocab == 0) throw SpecError("vocabularies must be nonempty");
  if (min_length == 0 || min_length > max_length) throw SpecError("need 1 <= min_length <= max_length");
  if (p_nst > 0.0 || p_ndt > 0.0) {
    if (max_depth < 2) throw SpecError("nesting needs max_depth >= 2");
    if (2 * max_depth - 1 > max_length) {
      throw SpecError("max_depth " + std::to_string(max_depth) + " does not fit in max_length " +
                      std::to_string(max_length));
    }
  }
}

std::vector<std::string> GrammarSpec::types() const {
  if (!type_names.empty()) return type_names;
  std::vector<std::string> out;
  for (std::size_t t = 0; t < num_types; ++t) out.push_back("T" + std::to_string(t));
  return out;
}

GrammarSpec GrammarSpec::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("grammar spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SpecError("grammar spec must be a JSON object");
  GrammarSpec s;
  const std::set<std::string> known = {"vocab_size", "entity_vocab", "num_types", "type_names", "min_length",
                                       "max_length", "p_nst", "p_ndt", "p_me", "max_depth", "sentences", "seed"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw SpecError("unknown key '" + key + "' in grammar spec");
  try {
    auto read = [&](const char* key, auto& out) {
      if (j.contains(key)) j.at(key).get_to(out);
    };
    read("vocab_size", s.vocab_size);
    read("entity_vocab", s.entity_vocab);
    read("num_types", s.num_types);
    read("type_names", s.type_names);
    read("min_length", s.min_length);
    read("max_length", s.max_length);
    read("p_nst", s.p_nst);
    read("p_ndt", s.p_ndt);
    read("p_me", s.p_me);
    read("max_depth", s.max_depth);
    read("sentences", s.sentences);
    read("seed", s.seed);
  } catch (const json::exception& e) {
    throw SpecError(e.what());
  }
  if (j.contains("type_names") && !j.contains("num_types")) s.num_types = s.type_names.size();
  return s;
}

std::string GrammarSpec::to_json() const {
  json j = {{"vocab_size", vocab_size}, {"entity_vocab", entity_vocab}, {"num_types", num_types},
            {"type_names", types()},    {"min_length", min_length},     {"max_length", max_length},
            {"p_nst", p_nst},           {"p_ndt", p_ndt},               {"p_me", p_me},
            {"max_depth", max_depth},   {"sentences", sentences},       {"seed", seed}};
  return j.dump(2);
}

namespace {

struct Group {
  std::vector<std::string> tokens;
  std::vector<std::string> pos;
  std::vector<EntitySpan> entities;  // relative to the group start
};

class Generator {
 public:
  explicit Generator(const GrammarSpec& spec) : spec_(spec), rng_(spec.seed) {}

  Example sentence() {
    const std::size_t L = uniform(spec_.min_length, spec_.max_length);
    Example ex;
    auto& toks = ex.sentence.tokens;
    auto& pos = ex.sentence.pos;
    while (true) {
      const std::size_t gap = uniform(toks.empty() ? 0 : 1, 2);
      Group g = group();
      if (toks.size() + gap + g.tokens.size() > L) break;
      for (std::size_t i = 0; i < gap; ++i) filler(ex);
      const std::size_t offset = toks.size();
      toks.insert(toks.end(), g.tokens.begin(), g.tokens.end());
      pos.insert(pos.end(), g.pos.begin(), g.pos.end());
      for (const auto& e : g.entities) ex.entities.insert({e.start + offset, e.end + offset, e.label});
    }
    while (toks.size() < L) filler(ex);
    return ex;
  }

 private:
  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  static char letter(TypeId t) { return static_cast<char>('a' + t); }

  void filler(Example& ex) {
    ex.sentence.tokens.push_back("w" + std::to_string(uniform(0, spec_.vocab_size - 1)));
    ex.sentence.pos.push_back("X");
  }

  std::string entity_token(const std::string& prefix) {
    return prefix + std::to_string(uniform(0, spec_.entity_vocab - 1));
  }

  TypeId other_type(TypeId t) {
    const auto u = static_cast<TypeId>(uniform(0, spec_.num_types - 2));
    return u >= t ? u + 1 : u;
  }

  // Body of 1..max_len tokens labeled with every type in `labels`.
  Group body(const std::vector<TypeId>& labels, std::size_t max_len) {
    std::string sig;
    for (TypeId t : labels) sig += letter(t);
    Group g;
    const std::size_t n = uniform(1, max_len);
    for (std::size_t i = 0; i < n; ++i) {
      g.tokens.push_back(entity_token(sig + "-"));
      g.pos.push_back("N");
    }
    for (TypeId t : labels) g.entities.push_back({0, n - 1, t});
    return g;
  }

  Group nested(std::size_t levels_left, TypeId type, bool same_type) {
    if (levels_left == 1) return body({type}, 2);
    Group inner = nested(levels_left - 1, same_type ? type : other_type(type), same_type);
    Group g;
    g.tokens.push_back(entity_token(std::string(1, letter(type)) + "["));
    g.pos.push_back("P");
    g.tokens.insert(g.tokens.end(), inner.tokens.begin(), inner.tokens.end());
    g.pos.insert(g.pos.end(), inner.pos.begin(), inner.pos.end());
    g.tokens.push_back(entity_token(std::string(1, letter(type)) + "]"));
    g.pos.push_back("P");
    for (const auto& e : inner.entities) g.entities.push_back({e.start + 1, e.end + 1, e.label});
    g.entities.push_back({0, g.tokens.size() - 1, type});
    return g;
  }

  Group group() {
    const double r = unit();
    const auto type = static_cast<TypeId>(uniform(0, spec_.num_types - 1));
    if (r < spec_.p_me) {
      TypeId a = type, b = other_type(type);
      if (a > b) std::swap(a, b);
      return body({a, b}, 3);
    }
    if (r < spec_.p_me + spec_.p_nst) return nested(uniform(2, spec_.max_depth), type, true);
    if (r < spec_.p_me + spec_.p_nst + spec_.p_ndt) return nested(uniform(2, spec_.max_depth), type, false);
    return body({type}, 3);
  }

  const GrammarSpec& spec_;
  std::mt19937_64 rng_;
};

bool lint_clean(const Example& ex) {
  return validate_entity_set(ex.entities, ex.sentence.tokens.size()).empty();
}

}  // namespace

std::vector<Example> generate_corpus(const GrammarSpec& spec) {
  spec.validate();
  Generator gen(spec);
  std::vector<Example> out;
  constexpr std::size_t kMaxAttempts = 1000;
  while (out.size() < spec.sentences) {
    bool ok = false;
    for (std::size_t attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      Example ex = gen.sentence();
      if (lint_clean(ex)) {
        out.push_back(std::move(ex));
        ok = true;
      }
    }
    if (!ok) throw SpecError("could not draw a representable sentence in " + std::to_string(kMaxAttempts) + " tries");
  }
  return out;
}

}  // namespace hetstar
