// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hetstar/autodiff.hpp"
#include "hetstar/encoder.hpp"
#include "hetstar/entities.hpp"
#include "hetstar/labeler.hpp"
#include "hetstar/params.hpp"
#include "hetstar/stargraph.hpp"

namespace hetstar {

struct Config {
  EncoderDims dims;
  std::size_t heads = 4;
  std::size_t depth = 3;
  std::size_t window = 1;
  /// Entity type names; TypeId t refers to types[t].
  std::vector<std::string> types;

  double learning_rate = 1e-3;
  std::size_t epochs = 300;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  double clip_norm = 1.0;
  /// Stop once every training sentence is predicted exactly (micro-F1 = 1).
  bool early_stop = false;
  std::uint64_t seed = 0;
  double mask_constant = kMaskConstant;

  GraphDims graph_dims() const { return {dims.d_E, heads, depth, window}; }

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  static Config from_json(const std::string& text);
  std::string to_json() const;
  TypeId type_id(const std::string& name) const;
};

/// Encoder, star graph and labeler over one parameter store.
class Model {
 public:
  /// Fresh parameters drawn from config.seed.
  Model(Config config, Vocabulary vocab);
  /// Adopts existing parameters; throws ConfigError if any is missing or
  /// has the wrong shape.
  Model(Config config, Vocabulary vocab, ParameterStore params);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;

  const Config& config() const noexcept { return config_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

  std::size_t num_types() const noexcept { return config_.types.size(); }

  /// Final graph state of one sentence on `tape`.
  GraphState encode(ad::Tape& tape, const EncodedSentence& sentence) const;

  /// Summed per-type CRF NLL of the gold entities.
  ad::Var loss(ad::Tape& tape, const Sentence& sentence, const EntitySet& gold) const;

  TypedPrediction predict(const Sentence& sentence) const;

  /// Forward pass up to the per-type Viterbi paths, without nested decoding.
  std::vector<ViterbiResult> best_paths(const Sentence& sentence) const;

 private:
  void bind();

  Config config_;
  Vocabulary vocab_;
  ParameterStore params_;
  EncoderParams encoder_;
  GraphParams graph_;
  LabelerParams labeler_;
};

/// Per-type gold tag sequences for `entities` over a sentence of `length`.
std::vector<TagSequence> gold_tags(const EntitySet& entities, std::size_t length, std::size_t num_types);

}  // namespace hetstar
