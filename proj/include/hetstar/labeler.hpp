// SPDX-License-Identifier: Apache-2.0
//
// Per-type labeling: each entity type fuses its type node with the text
// nodes, scores BIOES tags per position and decodes a constrained linear-chain
// CRF. The per-type entity sets are unioned without cross-type deduplication.
//
// CRF states are the five tags (indexed as BioesTag) plus a virtual start
// (row 5) and end (column 6) of the 7 x 7 transition matrix A.
#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <vector>

#include "hetstar/autodiff.hpp"
#include "hetstar/encoder.hpp"
#include "hetstar/entities.hpp"
#include "hetstar/params.hpp"
#include "hetstar/stargraph.hpp"

namespace hetstar {

inline constexpr double kMaskConstant = -1e4;
inline constexpr std::size_t kStartState = kNumTags;
inline constexpr std::size_t kEndState = kNumTags + 1;
inline constexpr std::size_t kNumStates = kNumTags + 2;

/// allowed[from][to] over the 7 CRF states. Transitions into the start state
/// and out of the end state are never allowed.
struct ConstraintMask {
  std::array<std::array<bool, kNumStates>, kNumStates> allowed{};
  bool operator()(std::size_t from, std::size_t to) const { return allowed[from][to]; }
};

ConstraintMask build_constraint_mask();

/// Copy of the 7 x 7 matrix A with every illegal entry replaced by
/// `mask_constant`.
Tensor mask_transitions(const Tensor& A, double mask_constant = kMaskConstant);

/// A[start, y_0] + sum_i P[i, y_i] + sum_i A[y_i, y_i+1] + A[y_L-1, end].
double path_score(const Tensor& P, const Tensor& A_masked, const std::vector<BioesTag>& tags);

/// log of the sum of exp(path_score) over all 5^L tag sequences.
double log_partition(const Tensor& P, const Tensor& A_masked);

/// log_partition - path_score. Throws DataError if `gold` is not legal.
double nll(const Tensor& P, const Tensor& A_masked, const std::vector<BioesTag>& gold);

struct ViterbiResult {
  std::vector<BioesTag> tags;
  double score = 0.0;
};

/// Best path; among equal-scoring choices the lowest tag index wins at every
/// backtracking step.
ViterbiResult viterbi(const Tensor& P, const Tensor& A_masked);

/// NLL as one tape node over emissions P (L x 5) and raw transitions A
/// (7 x 7). Masking happens inside, so masked entries of A get no gradient.
ad::Var crf_nll(ad::Var P, ad::Var A, const std::vector<BioesTag>& gold, double mask_constant = kMaskConstant);

struct TypeLabelerParams {
  GruParams fwd, bwd;
  const Parameter* h0_W = nullptr;  // projects h^t to the GRU state width
  const Parameter* h0_b = nullptr;
  const Parameter* maxout_W[2] = {};
  const Parameter* maxout_b[2] = {};
  const Parameter* emit_W = nullptr;  // 5 x d_E
  const Parameter* emit_b = nullptr;
};

struct LabelerParams {
  std::vector<TypeLabelerParams> types;
  const Parameter* A = nullptr;

  static void create(ParameterStore& store, std::size_t d_E, std::size_t num_types, std::mt19937_64& rng);
  static LabelerParams bind(const ParameterStore& store, std::size_t num_types);
};

/// H_t (L x d_E): a BiGRU over the text nodes seeded with the projected type
/// node, then a two-piece maxout over [h' + h^e ; h^t] per position.
ad::Var fuse(const TypeLabelerParams& p, ad::Var text_nodes, ad::Var type_node);

/// L x 5 tag scores.
ad::Var emissions(const TypeLabelerParams& p, ad::Var fused);

struct TypedPrediction {
  std::vector<TagSequence> tags;      // one per type
  std::vector<EntitySet> per_type;    // X_t
  EntitySet entities;                 // union of X_t
};

/// Viterbi + nested decoding per type on the final graph state.
TypedPrediction predict_entities(const GraphState& state, const LabelerParams& params,
                                 double mask_constant = kMaskConstant);

/// Sum over types of the CRF NLL of each type's gold tag sequence.
ad::Var labeler_loss(const GraphState& state, const LabelerParams& params, const std::vector<TagSequence>& gold,
                     double mask_constant = kMaskConstant);

}  // namespace hetstar
