// SPDX-License-Identifier: Apache-2.0
//
// Star-topology graph over n text nodes and c type nodes. Text node i sees
// the text nodes within distance k (itself included) and every type node;
// each type node sees every text node and nothing else.
//
// Node indices: text nodes are 0..n-1, type node t is n + t.
#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "hetstar/autodiff.hpp"
#include "hetstar/encoder.hpp"
#include "hetstar/params.hpp"

namespace hetstar {

enum class NodeKind { Text = 0, Type = 1 };

struct Topology {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t k = 0;
  /// Ascending; text indices first, then type indices.
  std::vector<std::vector<std::size_t>> text_neighbors;
  std::vector<std::vector<std::size_t>> type_neighbors;

  NodeKind kind(std::size_t node) const noexcept { return node < n ? NodeKind::Text : NodeKind::Type; }
};

Topology build_topology(std::size_t n, std::size_t c, std::size_t k);

struct PairCount {
  std::size_t pairs = 0;
  /// Closed form with the configuration substituted, e.g.
  /// "n(2k+1) - k(k+1) + 2cn = 15 - 2 + 20 = 33".
  std::string formula;
};

/// Query-key score evaluations per layer and head: the sum of all neighbor
/// list sizes. Also checks the closed form against the lists.
PairCount count_attention_pairs(const Topology& topology);

/// Closed form of count_attention_pairs without building the lists.
std::size_t attention_pairs_closed_form(std::size_t n, std::size_t c, std::size_t k);

struct GraphDims {
  std::size_t d_E = 64;
  std::size_t heads = 4;
  std::size_t depth = 3;
  std::size_t window = 1;
};

/// One attention head of one layer. proj[mu][phi] maps a node of kind phi
/// into the space of query kind mu.
struct HeadParams {
  const Parameter* W[2][2] = {};
  const Parameter* b[2][2] = {};
  const Parameter* a_key = nullptr;    // 1 x d_h, multiplies the key
  const Parameter* a_query = nullptr;  // 1 x d_h, multiplies the query
  const Parameter* W_p = nullptr;      // d_h x d_h
};

struct LayerParams {
  std::vector<HeadParams> heads;
  GruParams text_gate;
  GruParams type_gate;
};

struct GraphParams {
  std::vector<LayerParams> layers;

  static void create(ParameterStore& store, const GraphDims& dims, std::mt19937_64& rng);
  static GraphParams bind(const ParameterStore& store, const GraphDims& dims);
};

struct GraphState {
  ad::Var text;  // n x d_E
  ad::Var type;  // c x d_E
  std::size_t layer = 0;
};

/// h W_{mu,phi}^T + b_{mu,phi} for each row of h.
ad::Var project(const HeadParams& head, NodeKind target, NodeKind source, ad::Var h);

/// LeakyReLU(a_key . key + a_query . query + key^T W_p query), on projected
/// 1 x d_h rows.
ad::Var hybrid_score(const HeadParams& head, ad::Var query, ad::Var key);

/// Concatenation-only score LeakyReLU(a_u . query + a_d . key) with a = [a_u; a_d].
/// Kept to demonstrate that its key ranking cannot depend on the query.
double baseline_gat_score(const Tensor& query, const Tensor& key, const Tensor& a);

/// Reference attention of one query over an explicit neighbor list, one
/// node at a time. Returns the 1 x d_h head output; `weights` receives the
/// softmax weights in neighbor order.
ad::Var attend(const HeadParams& head, const Topology& topology, const GraphState& state, std::size_t query,
               const std::vector<std::size_t>& neighbors, std::vector<double>* weights = nullptr);

struct LayerOptions {
  /// Drop type nodes from text-node neighborhoods (isolates the window).
  bool text_sees_types = true;
};

/// Dense per-head attention weights recorded by layer_step: text weights are
/// n x (n + c), type weights c x n; entries outside a neighborhood are 0.
struct AttentionTrace {
  std::vector<Tensor> text;
  std::vector<Tensor> type;
};

/// Text nodes aggregate and update first; type nodes then aggregate over the
/// updated text nodes. Cost is linear in n for fixed c and k.
GraphState layer_step(const GraphState& state, const Topology& topology, const LayerParams& params,
                      const LayerOptions& options = {}, AttentionTrace* trace = nullptr);

GraphState run_layers(const GraphState& state, const Topology& topology, const GraphParams& params,
                      std::size_t depth, const LayerOptions& options = {});

}  // namespace hetstar
