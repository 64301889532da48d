// SPDX-License-Identifier: Apache-2.0
#include "hetstar/model.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "hetstar/errors.hpp"
#include "json_io.hpp"

namespace hetstar {

namespace detail {

json config_to_json(const Config& c) {
  json j;
  j["dims"] = {{"d_C", c.dims.d_C}, {"d_K", c.dims.d_K}, {"d_W", c.dims.d_W},
               {"d_P", c.dims.d_P}, {"d_A", c.dims.d_A}, {"d_E", c.dims.d_E}};
  j["heads"] = c.heads;
  j["depth"] = c.depth;
  j["window"] = c.window;
  j["types"] = c.types;
  j["learning_rate"] = c.learning_rate;
  j["epochs"] = c.epochs;
  j["weight_decay"] = c.weight_decay;
  j["warmup_fraction"] = c.warmup_fraction;
  j["clip_norm"] = c.clip_norm;
  j["early_stop"] = c.early_stop;
  j["seed"] = c.seed;
  j["mask_constant"] = c.mask_constant;
  return j;
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

}  // namespace

Config config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"dims", "heads", "depth", "window", "types", "learning_rate", "epochs", "weight_decay",
                  "warmup_fraction", "clip_norm", "early_stop", "seed", "mask_constant"},
                 "config");
  Config c;
  if (j.contains("dims")) {
    const json& d = j.at("dims");
    if (!d.is_object()) throw ConfigError("'dims' must be an object");
    reject_unknown(d, {"d_C", "d_K", "d_W", "d_P", "d_A", "d_E"}, "dims");
    read(d, "d_C", c.dims.d_C);
    read(d, "d_K", c.dims.d_K);
    read(d, "d_W", c.dims.d_W);
    read(d, "d_P", c.dims.d_P);
    read(d, "d_A", c.dims.d_A);
    read(d, "d_E", c.dims.d_E);
  }
  read(j, "heads", c.heads);
  read(j, "depth", c.depth);
  read(j, "window", c.window);
  read(j, "types", c.types);
  read(j, "learning_rate", c.learning_rate);
  read(j, "epochs", c.epochs);
  read(j, "weight_decay", c.weight_decay);
  read(j, "warmup_fraction", c.warmup_fraction);
  read(j, "clip_norm", c.clip_norm);
  read(j, "early_stop", c.early_stop);
  read(j, "seed", c.seed);
  read(j, "mask_constant", c.mask_constant);
  return c;
}

}  // namespace detail

void Config::validate() const {
  const EncoderDims& d = dims;
  for (auto [name, v] : {std::pair{"d_C", d.d_C}, {"d_K", d.d_K}, {"d_W", d.d_W}, {"d_P", d.d_P}, {"d_A", d.d_A},
                         {"d_E", d.d_E}}) {
    if (v == 0) throw ConfigError(std::string(name) + " must be at least 1");
  }
  if (d.d_C % 2 || d.d_A % 2 || d.d_E % 2) throw ConfigError("d_C, d_A and d_E must be even");
  if (heads == 0 || d.d_E % heads) {
    throw ConfigError("d_E=" + std::to_string(d.d_E) + " is not divisible by heads=" + std::to_string(heads));
  }
  if (depth == 0) throw ConfigError("depth must be at least 1");
  if (types.empty()) throw ConfigError("at least one entity type is required");
  if (std::set<std::string>(types.begin(), types.end()).size() != types.size()) {
    throw ConfigError("duplicate entity type names");
  }
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) throw ConfigError("warmup_fraction must be in [0, 1]");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
  if (!(mask_constant < 0.0)) throw ConfigError("mask_constant must be negative");
}

Config Config::from_json(const std::string& text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return detail::config_from_json(j);
}

std::string Config::to_json() const { return detail::config_to_json(*this).dump(2); }

TypeId Config::type_id(const std::string& name) const {
  auto it = std::find(types.begin(), types.end(), name);
  if (it == types.end()) throw DataError("unknown entity type '" + name + "'");
  return static_cast<TypeId>(it - types.begin());
}

namespace {

ParameterStore fresh_parameters(const Config& c, const Vocabulary& vocab) {
  c.validate();
  ParameterStore store;
  std::mt19937_64 rng(c.seed);
  EncoderParams::create(store, c.dims, vocab, c.types.size(), rng);
  GraphParams::create(store, c.graph_dims(), rng);
  LabelerParams::create(store, c.dims.d_E, c.types.size(), rng);
  return store;
}

}  // namespace

Model::Model(Config config, Vocabulary vocab)
    : config_(std::move(config)), vocab_(std::move(vocab)), params_(fresh_parameters(config_, vocab_)) {
  bind();
}

Model::Model(Config config, Vocabulary vocab, ParameterStore params)
    : config_(std::move(config)), vocab_(std::move(vocab)), params_(std::move(params)) {
  const ParameterStore expected = fresh_parameters(config_, vocab_);
  if (expected.size() != params_.size()) {
    throw ConfigError("expected " + std::to_string(expected.size()) + " parameters, got " +
                      std::to_string(params_.size()));
  }
  for (const auto& [name, p] : expected) {
    if (!params_.contains(name)) throw ConfigError("missing parameter '" + name + "'");
    if (params_.get(name).value.shape() != p.value.shape()) {
      throw ConfigError("parameter '" + name + "' has shape " + to_string(params_.get(name).value.shape()) +
                        ", expected " + to_string(p.value.shape()));
    }
  }
  bind();
}

void Model::bind() {
  encoder_ = EncoderParams::bind(params_, num_types());
  graph_ = GraphParams::bind(params_, config_.graph_dims());
  labeler_ = LabelerParams::bind(params_, num_types());
}

GraphState Model::encode(ad::Tape& tape, const EncodedSentence& sentence) const {
  const ad::Var context = hybrid_embed(tape, encoder_, sentence);
  GraphState state{init_text_nodes(tape, encoder_, context), init_type_nodes(tape, encoder_, context), 0};
  const Topology topo = build_topology(sentence.size(), num_types(), config_.window);
  return run_layers(state, topo, graph_, config_.depth);
}

std::vector<TagSequence> gold_tags(const EntitySet& entities, std::size_t length, std::size_t num_types) {
  for (const auto& e : entities) {
    if (e.label >= num_types) throw DataError("entity label " + std::to_string(e.label) + " is not a known type");
  }
  std::vector<TagSequence> out;
  for (TypeId t = 0; t < num_types; ++t) out.push_back(encode_nested(spans_of_type(entities, t), length, t));
  return out;
}

ad::Var Model::loss(ad::Tape& tape, const Sentence& sentence, const EntitySet& gold) const {
  const EncodedSentence enc = encode_sentence(vocab_, sentence);
  const auto tags = gold_tags(gold, enc.size(), num_types());
  return labeler_loss(encode(tape, enc), labeler_, tags, config_.mask_constant);
}

TypedPrediction Model::predict(const Sentence& sentence) const {
  ad::Tape tape(false);
  const EncodedSentence enc = encode_sentence(vocab_, sentence);
  return predict_entities(encode(tape, enc), labeler_, config_.mask_constant);
}

std::vector<ViterbiResult> Model::best_paths(const Sentence& sentence) const {
  ad::Tape tape(false);
  const EncodedSentence enc = encode_sentence(vocab_, sentence);
  const GraphState state = encode(tape, enc);
  const Tensor A = mask_transitions(labeler_.A->value, config_.mask_constant);
  std::vector<ViterbiResult> out;
  for (std::size_t t = 0; t < num_types(); ++t) {
    const ad::Var P = emissions(labeler_.types[t], fuse(labeler_.types[t], state.text, ad::gather_rows(state.type, {t})));
    out.push_back(viterbi(P.value(), A));
  }
  return out;
}

}  // namespace hetstar
