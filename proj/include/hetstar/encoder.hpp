// SPDX-License-Identifier: Apache-2.0
//
// Token representations: character, token-surrogate, word and POS embeddings
// fused by a bidirectional GRU into the context matrix H^A, plus the initial
// text-node and type-node states derived from it.
#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "hetstar/autodiff.hpp"
#include "hetstar/params.hpp"

namespace hetstar {

struct Sentence {
  std::vector<std::string> tokens;
  /// Empty means every token carries the null POS tag.
  std::vector<std::string> pos;
};

/// Dense id maps for tokens, characters (bytes) and POS tags.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  /// POS id used when a sentence has no tags.
  static constexpr std::size_t kNullPos = 2;

  Vocabulary();

  /// Registers every token, byte and tag of `sentences`, in first-seen order.
  void extend(const std::vector<Sentence>& sentences);

  std::size_t token_id(const std::string& token) const;
  std::size_t char_id(unsigned char c) const;
  std::size_t pos_id(const std::string& tag) const;

  std::size_t token_count() const noexcept { return tokens_.size(); }
  std::size_t char_count() const noexcept { return chars_.size(); }
  std::size_t pos_count() const noexcept { return pos_.size(); }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::string>& chars() const noexcept { return chars_; }
  const std::vector<std::string>& pos_tags() const noexcept { return pos_; }

  /// Rebuilds a vocabulary from its id-ordered entry lists. The reserved
  /// entries must be present at their reserved ids.
  static Vocabulary from_lists(std::vector<std::string> tokens, std::vector<std::string> chars,
                               std::vector<std::string> pos);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.chars_ == b.chars_ && a.pos_ == b.pos_;
  }

 private:
  static void add(std::vector<std::string>& list, std::unordered_map<std::string, std::size_t>& index,
                  const std::string& entry);

  std::vector<std::string> tokens_, chars_, pos_;
  std::unordered_map<std::string, std::size_t> token_index_, char_index_, pos_index_;
};

struct EncodedSentence {
  std::vector<std::size_t> token_ids;
  std::vector<std::vector<std::size_t>> char_ids;
  std::vector<std::size_t> pos_ids;

  std::size_t size() const noexcept { return token_ids.size(); }
};

/// Maps a sentence to ids; unseen entries become kUnk. Throws DataError if
/// `pos` is present with the wrong length or the sentence is empty.
EncodedSentence encode_sentence(const Vocabulary& vocab, const Sentence& sentence);

/// Parameters of one GRU cell: r, z and n gates, each with an input and a
/// hidden weight matrix and bias.
struct GruParams {
  const Parameter* W_xr = nullptr;
  const Parameter* W_hr = nullptr;
  const Parameter* W_xz = nullptr;
  const Parameter* W_hz = nullptr;
  const Parameter* W_xn = nullptr;
  const Parameter* W_hn = nullptr;
  const Parameter* b_xr = nullptr;
  const Parameter* b_hr = nullptr;
  const Parameter* b_xz = nullptr;
  const Parameter* b_hz = nullptr;
  const Parameter* b_xn = nullptr;
  const Parameter* b_hn = nullptr;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  static void create(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                     std::size_t hidden_dim, std::mt19937_64& rng);
  static GruParams bind(const ParameterStore& store, const std::string& prefix);
};

/// One GRU step on a batch of rows: x is r x input_dim, h is r x hidden_dim.
///   r = sigma(W_xr x + b_xr + W_hr h + b_hr)
///   z = sigma(W_xz x + b_xz + W_hz h + b_hz)
///   n = tanh(W_xn x + b_xn + r * (W_hn h + b_hn))
///   o = (1 - z) * n + z * h
ad::Var gated_cell(const GruParams& p, ad::Var x, ad::Var h);

/// Bidirectional scan over the rows of `sequence`. Row i of the result is
/// [forward_i, backward_i]. `h0` (1 x hidden) seeds both directions; zero if
/// absent. Throws ContractError on an empty sequence.
ad::Var birnn(const GruParams& fwd, const GruParams& bwd, ad::Var sequence, std::optional<ad::Var> h0 = {});

struct EncoderDims {
  std::size_t d_C = 16;  // character features (even: split across directions)
  std::size_t d_K = 32;  // token-surrogate table
  std::size_t d_W = 32;  // word table
  std::size_t d_P = 8;   // POS table
  std::size_t d_A = 64;  // fused context width (even)
  std::size_t d_E = 64;  // node width
};

struct EncoderParams {
  const Parameter* char_table = nullptr;
  const Parameter* token_table = nullptr;
  const Parameter* word_table = nullptr;
  const Parameter* pos_table = nullptr;
  GruParams char_fwd, char_bwd;
  GruParams fuse_fwd, fuse_bwd;
  const Parameter* text_W = nullptr;
  const Parameter* text_b = nullptr;
  std::vector<const Parameter*> type_W;
  std::vector<const Parameter*> type_b;

  static void create(ParameterStore& store, const EncoderDims& dims, const Vocabulary& vocab,
                     std::size_t num_types, std::mt19937_64& rng);
  static EncoderParams bind(const ParameterStore& store, std::size_t num_types);
};

/// H^A: L x d_A. Each token contributes [K; C; W; P] where C is the mean of
/// its character BiGRU states.
ad::Var hybrid_embed(ad::Tape& tape, const EncoderParams& p, const EncodedSentence& sentence);

/// H^e = H^A W_e^T + b_e, L x d_E.
ad::Var init_text_nodes(ad::Tape& tape, const EncoderParams& p, ad::Var context);

/// Row t is the column-wise max over positions of H^A W_t^T + b_t; c x d_E.
ad::Var init_type_nodes(ad::Tape& tape, const EncoderParams& p, ad::Var context);

/// Overwrites rows of the word table from a whitespace-separated text file
/// (token followed by d_W floats per line). Returns the number of rows set;
/// tokens absent from the vocabulary are skipped.
std::size_t import_word_vectors(ParameterStore& store, const Vocabulary& vocab, std::istream& in);

}  // namespace hetstar
