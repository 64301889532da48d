// SPDX-License-Identifier: Apache-2.0
#include "hetstar/stargraph.hpp"

#include <algorithm>
#include <cmath>

#include "hetstar/errors.hpp"

namespace hetstar {

using ad::Var;

Topology build_topology(std::size_t n, std::size_t c, std::size_t k) {
  if (n == 0 || c == 0) throw PreconditionError("topology needs n >= 1 and c >= 1");
  Topology t{n, c, k, {}, {}};
  t.text_neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= k ? i - k : 0;
    const std::size_t hi = std::min(n - 1, i + k);
    for (std::size_t j = lo; j <= hi; ++j) t.text_neighbors[i].push_back(j);
    for (std::size_t j = 0; j < c; ++j) t.text_neighbors[i].push_back(n + j);
  }
  t.type_neighbors.assign(c, {});
  for (auto& list : t.type_neighbors)
    for (std::size_t j = 0; j < n; ++j) list.push_back(j);
  return t;
}

std::size_t attention_pairs_closed_form(std::size_t n, std::size_t c, std::size_t k) {
  const std::size_t window = n > k ? n * (2 * k + 1) - k * (k + 1) : n * n;
  return window + 2 * c * n;
}

PairCount count_attention_pairs(const Topology& t) {
  PairCount out;
  for (const auto& l : t.text_neighbors) out.pairs += l.size();
  for (const auto& l : t.type_neighbors) out.pairs += l.size();
  const std::size_t closed = attention_pairs_closed_form(t.n, t.c, t.k);
  if (closed != out.pairs) {
    throw ContractError("neighbor lists hold " + std::to_string(out.pairs) + " pairs, closed form gives " +
                        std::to_string(closed));
  }
  const std::string cfg = " with n=" + std::to_string(t.n) + ", c=" + std::to_string(t.c) +
                          ", k=" + std::to_string(t.k) + ": ";
  const std::string types = std::to_string(2 * t.c * t.n);
  if (t.n > t.k) {
    out.formula = "n(2k+1) - k(k+1) + 2cn" + cfg + std::to_string(t.n * (2 * t.k + 1)) + " - " +
                  std::to_string(t.k * (t.k + 1)) + " + " + types + " = " + std::to_string(out.pairs);
  } else {
    out.formula = "n^2 + 2cn" + cfg + std::to_string(t.n * t.n) + " + " + types + " = " + std::to_string(out.pairs);
  }
  return out;
}

namespace {

std::string head_prefix(std::size_t layer, std::size_t head) {
  return "graph.l" + std::to_string(layer) + ".h" + std::to_string(head) + ".";
}

const char* kind_name(std::size_t k) { return k == 0 ? "text" : "type"; }

void check_dims(const GraphDims& d) {
  if (d.heads == 0 || d.d_E % d.heads != 0) {
    throw ConfigError("d_E=" + std::to_string(d.d_E) + " is not divisible by heads=" + std::to_string(d.heads));
  }
  if (d.depth == 0) throw ConfigError("depth must be at least 1");
}

}  // namespace

void GraphParams::create(ParameterStore& store, const GraphDims& d, std::mt19937_64& rng) {
  check_dims(d);
  const std::size_t dh = d.d_E / d.heads;
  for (std::size_t l = 0; l < d.depth; ++l) {
    for (std::size_t m = 0; m < d.heads; ++m) {
      const std::string p = head_prefix(l, m);
      for (std::size_t mu = 0; mu < 2; ++mu) {
        for (std::size_t phi = 0; phi < 2; ++phi) {
          const std::string suffix = std::string(kind_name(mu)) + "_" + kind_name(phi);
          store.add(p + "W_" + suffix, glorot_uniform(dh, d.d_E, rng));
          store.add(p + "b_" + suffix, Tensor({1, dh}));
        }
      }
      store.add(p + "a_key", glorot_uniform(1, dh, rng));
      store.add(p + "a_query", glorot_uniform(1, dh, rng));
      store.add(p + "W_p", glorot_uniform(dh, dh, rng));
    }
    const std::string g = "graph.l" + std::to_string(l) + ".gate_";
    GruParams::create(store, g + "text", d.d_E, d.d_E, rng);
    GruParams::create(store, g + "type", d.d_E, d.d_E, rng);
  }
}

GraphParams GraphParams::bind(const ParameterStore& store, const GraphDims& d) {
  check_dims(d);
  GraphParams out;
  for (std::size_t l = 0; l < d.depth; ++l) {
    LayerParams layer;
    for (std::size_t m = 0; m < d.heads; ++m) {
      const std::string p = head_prefix(l, m);
      HeadParams h;
      for (std::size_t mu = 0; mu < 2; ++mu) {
        for (std::size_t phi = 0; phi < 2; ++phi) {
          const std::string suffix = std::string(kind_name(mu)) + "_" + kind_name(phi);
          h.W[mu][phi] = &store.get(p + "W_" + suffix);
          h.b[mu][phi] = &store.get(p + "b_" + suffix);
        }
      }
      h.a_key = &store.get(p + "a_key");
      h.a_query = &store.get(p + "a_query");
      h.W_p = &store.get(p + "W_p");
      layer.heads.push_back(h);
    }
    const std::string g = "graph.l" + std::to_string(l) + ".gate_";
    layer.text_gate = GruParams::bind(store, g + "text");
    layer.type_gate = GruParams::bind(store, g + "type");
    out.layers.push_back(std::move(layer));
  }
  return out;
}

Var project(const HeadParams& head, NodeKind target, NodeKind source, Var h) {
  const auto mu = static_cast<std::size_t>(target), phi = static_cast<std::size_t>(source);
  if (!head.W[mu][phi] || !head.b[mu][phi]) {
    throw ConfigError(std::string("no projection from ") + kind_name(phi) + " into " + kind_name(mu) + " space");
  }
  ad::Tape& t = *h.tape();
  return ad::affine(h, t.param(*head.W[mu][phi]), t.param(*head.b[mu][phi]));
}

Var hybrid_score(const HeadParams& head, Var query, Var key) {
  ad::Tape& t = *query.tape();
  const Var g = ad::add(ad::matmul_nt(key, t.param(*head.a_key)), ad::matmul_nt(query, t.param(*head.a_query)));
  const Var p = ad::matmul_nt(key, ad::matmul_nt(query, t.param(*head.W_p)));
  return ad::leaky_relu(ad::add(g, p));
}

double baseline_gat_score(const Tensor& query, const Tensor& key, const Tensor& a) {
  const std::size_t d = query.size();
  if (key.size() != d || a.size() != 2 * d) {
    throw ShapeError("baseline_gat_score: query " + to_string(query.shape()) + ", key " + to_string(key.shape()) +
                     ", a " + to_string(a.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += a[i] * query[i] + a[d + i] * key[i];
  return s > 0.0 ? s : 0.01 * s;
}

Var attend(const HeadParams& head, const Topology& topo, const GraphState& state, std::size_t query,
           const std::vector<std::size_t>& neighbors, std::vector<double>* weights) {
  if (neighbors.empty()) throw ContractError("attend over an empty neighbor set");
  auto node_row = [&](std::size_t j) {
    return topo.kind(j) == NodeKind::Text ? ad::gather_rows(state.text, {j})
                                          : ad::gather_rows(state.type, {j - topo.n});
  };
  const NodeKind mu = topo.kind(query);
  const Var q = project(head, mu, mu, node_row(query));
  std::vector<Var> keys, scores;
  for (std::size_t j : neighbors) {
    keys.push_back(project(head, mu, topo.kind(j), node_row(j)));
    scores.push_back(hybrid_score(head, q, keys.back()));
  }
  const Var alpha = ad::masked_softmax(ad::concat_cols(scores));
  if (weights) {
    const auto w = alpha.value().data();
    weights->assign(w.begin(), w.end());
  }
  return ad::matmul(alpha, ad::concat_rows(keys));
}

namespace {

// Head output for every text query, using one gathered key matrix per
// window offset so the work is O(n (2k + 1 + c)).
Var text_head(const HeadParams& head, const Topology& topo, const GraphState& state, bool with_types,
              Tensor* dense_weights) {
  using namespace ad;
  Tape& t = *state.text.tape();
  const std::size_t n = topo.n, c = topo.c, k = topo.k;
  const std::size_t width = 2 * k + 1;
  const Var Pt = project(head, NodeKind::Text, NodeKind::Text, state.text);
  const Var Qp = matmul_nt(Pt, t.param(*head.W_p));
  const Var g_query = matmul_nt(Pt, t.param(*head.a_query));
  const Var g_key_text = matmul_nt(Pt, t.param(*head.a_key));

  std::vector<Var> band_keys, cols;
  std::vector<std::uint8_t> mask(n * (width + (with_types ? c : 0)), 0);
  const std::size_t stride = width + (with_types ? c : 0);
  for (std::size_t d = 0; d < width; ++d) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) {
      const long j = static_cast<long>(i) + static_cast<long>(d) - static_cast<long>(k);
      const bool live = j >= 0 && j < static_cast<long>(n);
      idx[i] = live ? static_cast<std::size_t>(j) : i;
      mask[i * stride + d] = live;
    }
    band_keys.push_back(gather_rows(Pt, idx));
    cols.push_back(add(sum_axis(mul(Qp, band_keys.back()), 1), gather_rows(g_key_text, idx)));
  }
  Var Pc;
  if (with_types) {
    Pc = project(head, NodeKind::Text, NodeKind::Type, state.type);
    cols.push_back(add(matmul_nt(Qp, Pc), matmul_nt(t.param(*head.a_key), Pc)));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) mask[i * stride + width + j] = 1;
  }
  const Var alpha = masked_softmax(leaky_relu(add(concat_cols(cols), g_query)), mask);

  if (dense_weights) {
    *dense_weights = Tensor({n, n + c});
    const Tensor& a = alpha.value();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < width; ++d) {
        if (!mask[i * stride + d]) continue;
        (*dense_weights)(i, i + d - k) = a(i, d);
      }
      if (with_types)
        for (std::size_t j = 0; j < c; ++j) (*dense_weights)(i, n + j) = a(i, width + j);
    }
  }

  Var out = mul(band_keys[0], slice_cols(alpha, 0, 1));
  for (std::size_t d = 1; d < width; ++d) out = add(out, mul(band_keys[d], slice_cols(alpha, d, 1)));
  if (with_types) out = add(out, matmul(slice_cols(alpha, width, c), Pc));
  return out;
}

Var type_head(const HeadParams& head, Var type_nodes, Var text_nodes, Tensor* dense_weights) {
  using namespace ad;
  Tape& t = *type_nodes.tape();
  const Var Q = project(head, NodeKind::Type, NodeKind::Type, type_nodes);
  const Var K = project(head, NodeKind::Type, NodeKind::Text, text_nodes);
  const Var bilinear = matmul_nt(matmul_nt(Q, t.param(*head.W_p)), K);
  // c x n bilinear term, plus the 1 x n key term and the c x 1 query term.
  const Var scores = add(add(bilinear, matmul_nt(t.param(*head.a_key), K)), matmul_nt(Q, t.param(*head.a_query)));
  const Var alpha = masked_softmax(leaky_relu(scores));
  if (dense_weights) *dense_weights = alpha.value();
  return matmul(alpha, K);
}

}  // namespace

GraphState layer_step(const GraphState& state, const Topology& topo, const LayerParams& params,
                      const LayerOptions& options, AttentionTrace* trace) {
  if (state.text.rows() != topo.n || state.type.rows() != topo.c) {
    throw ShapeError("layer_step: state has " + std::to_string(state.text.rows()) + " text and " +
                     std::to_string(state.type.rows()) + " type rows for a topology of n=" + std::to_string(topo.n) +
                     ", c=" + std::to_string(topo.c));
  }
  const std::size_t M = params.heads.size();
  if (trace) {
    trace->text.assign(M, {});
    trace->type.assign(M, {});
  }
  std::vector<Var> text_heads, type_heads;
  for (std::size_t m = 0; m < M; ++m) {
    text_heads.push_back(
        text_head(params.heads[m], topo, state, options.text_sees_types, trace ? &trace->text[m] : nullptr));
  }
  GraphState next;
  next.text = gated_cell(params.text_gate, ad::concat_cols(text_heads), state.text);
  for (std::size_t m = 0; m < M; ++m) {
    type_heads.push_back(type_head(params.heads[m], state.type, next.text, trace ? &trace->type[m] : nullptr));
  }
  next.type = gated_cell(params.type_gate, ad::concat_cols(type_heads), state.type);
  next.layer = state.layer + 1;
  return next;
}

GraphState run_layers(const GraphState& state, const Topology& topo, const GraphParams& params, std::size_t depth,
                      const LayerOptions& options) {
  if (depth == 0) throw PreconditionError("run_layers needs depth >= 1");
  if (depth > params.layers.size()) {
    throw ConfigError("depth " + std::to_string(depth) + " exceeds the " + std::to_string(params.layers.size()) +
                      " configured layers");
  }
  GraphState s = state;
  for (std::size_t l = 0; l < depth; ++l) s = layer_step(s, topo, params.layers[l], options);
  return s;
}

}  // namespace hetstar
