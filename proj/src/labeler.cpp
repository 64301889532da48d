// SPDX-License-Identifier: Apache-2.0
#include "hetstar/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hetstar/errors.hpp"

namespace hetstar {

using ad::Var;

ConstraintMask build_constraint_mask() {
  ConstraintMask m;
  for (std::size_t to = 0; to < kNumTags; ++to) {
    const auto t = static_cast<BioesTag>(to);
    m.allowed[kStartState][to] = transition_allowed(std::nullopt, t);
    m.allowed[to][kEndState] = transition_allowed(t, std::nullopt);
    for (std::size_t from = 0; from < kNumTags; ++from)
      m.allowed[from][to] = transition_allowed(static_cast<BioesTag>(from), t);
  }
  return m;
}

namespace {

const ConstraintMask& mask() {
  static const ConstraintMask m = build_constraint_mask();
  return m;
}

void check_crf_shapes(const Tensor& P, const Tensor& A) {
  if (P.rank() != 2 || P.cols() != kNumTags || P.rows() == 0) {
    throw ShapeError("emissions must be L x 5 with L >= 1, got " + to_string(P.shape()));
  }
  if (A.rank() != 2 || A.rows() != kNumStates || A.cols() != kNumStates) {
    throw ShapeError("transitions must be 7 x 7, got " + to_string(A.shape()));
  }
}

double lse(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(v[i] - m);
  return m + std::log(z);
}

// alpha[i][y]: log-sum of scores of prefixes ending in y at position i.
std::vector<std::array<double, kNumTags>> forward_scores(const Tensor& P, const Tensor& A) {
  const std::size_t L = P.rows();
  std::vector<std::array<double, kNumTags>> alpha(L);
  for (std::size_t y = 0; y < kNumTags; ++y) alpha[0][y] = A(kStartState, y) + P(0, y);
  std::array<double, kNumTags> tmp{};
  for (std::size_t i = 1; i < L; ++i) {
    for (std::size_t y = 0; y < kNumTags; ++y) {
      for (std::size_t p = 0; p < kNumTags; ++p) tmp[p] = alpha[i - 1][p] + A(p, y);
      alpha[i][y] = P(i, y) + lse(tmp.data(), kNumTags);
    }
  }
  return alpha;
}

// beta[i][y]: log-sum of scores of suffixes after position i given y at i.
std::vector<std::array<double, kNumTags>> backward_scores(const Tensor& P, const Tensor& A) {
  const std::size_t L = P.rows();
  std::vector<std::array<double, kNumTags>> beta(L);
  for (std::size_t y = 0; y < kNumTags; ++y) beta[L - 1][y] = A(y, kEndState);
  std::array<double, kNumTags> tmp{};
  for (std::size_t i = L - 1; i-- > 0;) {
    for (std::size_t y = 0; y < kNumTags; ++y) {
      for (std::size_t q = 0; q < kNumTags; ++q) tmp[q] = A(y, q) + P(i + 1, q) + beta[i + 1][q];
      beta[i][y] = lse(tmp.data(), kNumTags);
    }
  }
  return beta;
}

double final_log_partition(const std::vector<std::array<double, kNumTags>>& alpha, const Tensor& A) {
  std::array<double, kNumTags> tmp{};
  for (std::size_t y = 0; y < kNumTags; ++y) tmp[y] = alpha.back()[y] + A(y, kEndState);
  return lse(tmp.data(), kNumTags);
}

void check_gold(const std::vector<BioesTag>& gold, std::size_t L) {
  if (gold.size() != L) {
    throw DataError("gold sequence has " + std::to_string(gold.size()) + " tags for " + std::to_string(L) +
                    " positions");
  }
  if (auto bad = first_illegal_position(gold)) {
    const std::size_t i = *bad;
    const std::string from = i == 0 ? "start" : std::string(1, to_char(gold[i - 1]));
    const std::string to = i == gold.size() ? "end" : std::string(1, to_char(gold[i]));
    throw DataError("illegal gold transition " + from + "->" + to + " at position " + std::to_string(i));
  }
}

}  // namespace

Tensor mask_transitions(const Tensor& A, double mask_constant) {
  if (A.rank() != 2 || A.rows() != kNumStates || A.cols() != kNumStates) {
    throw ShapeError("transitions must be 7 x 7, got " + to_string(A.shape()));
  }
  Tensor out = A;
  for (std::size_t i = 0; i < kNumStates; ++i)
    for (std::size_t j = 0; j < kNumStates; ++j)
      if (!mask()(i, j)) out(i, j) = mask_constant;
  return out;
}

double path_score(const Tensor& P, const Tensor& A, const std::vector<BioesTag>& tags) {
  check_crf_shapes(P, A);
  if (tags.size() != P.rows()) throw ShapeError("path has " + std::to_string(tags.size()) + " tags for " +
                                                std::to_string(P.rows()) + " positions");
  std::size_t prev = kStartState;
  double s = 0.0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto y = static_cast<std::size_t>(tags[i]);
    s += A(prev, y) + P(i, y);
    prev = y;
  }
  return s + A(prev, kEndState);
}

double log_partition(const Tensor& P, const Tensor& A) {
  check_crf_shapes(P, A);
  return final_log_partition(forward_scores(P, A), A);
}

double nll(const Tensor& P, const Tensor& A, const std::vector<BioesTag>& gold) {
  check_crf_shapes(P, A);
  check_gold(gold, P.rows());
  return log_partition(P, A) - path_score(P, A, gold);
}

ViterbiResult viterbi(const Tensor& P, const Tensor& A) {
  check_crf_shapes(P, A);
  const std::size_t L = P.rows();
  std::vector<std::array<double, kNumTags>> delta(L);
  std::vector<std::array<std::size_t, kNumTags>> back(L);
  for (std::size_t y = 0; y < kNumTags; ++y) delta[0][y] = A(kStartState, y) + P(0, y);
  for (std::size_t i = 1; i < L; ++i) {
    for (std::size_t y = 0; y < kNumTags; ++y) {
      std::size_t arg = 0;
      double best = delta[i - 1][0] + A(0, y);
      for (std::size_t p = 1; p < kNumTags; ++p) {
        const double v = delta[i - 1][p] + A(p, y);
        if (v > best) {
          best = v;
          arg = p;
        }
      }
      delta[i][y] = best + P(i, y);
      back[i][y] = arg;
    }
  }
  std::size_t last = 0;
  double best = delta[L - 1][0] + A(0, kEndState);
  for (std::size_t y = 1; y < kNumTags; ++y) {
    const double v = delta[L - 1][y] + A(y, kEndState);
    if (v > best) {
      best = v;
      last = y;
    }
  }
  ViterbiResult r;
  r.score = best;
  r.tags.resize(L);
  std::size_t y = last;
  for (std::size_t i = L; i-- > 0;) {
    r.tags[i] = static_cast<BioesTag>(y);
    if (i > 0) y = back[i][y];
  }
  return r;
}

Var crf_nll(Var P, Var A, const std::vector<BioesTag>& gold, double mask_constant) {
  if (!P.valid() || P.tape() != A.tape()) throw ContractError("crf_nll operands live on different tapes");
  const Tensor& Pv = P.value();
  check_crf_shapes(Pv, A.value());
  check_gold(gold, Pv.rows());
  const Tensor Am = mask_transitions(A.value(), mask_constant);
  auto alpha = forward_scores(Pv, Am);
  const double logZ = final_log_partition(alpha, Am);
  const double loss = logZ - path_score(Pv, Am, gold);
  const std::size_t pi = P.id(), ai = A.id();
  return P.tape()->push(
      "crf_nll", Tensor::scalar(loss), {pi, ai},
      [pi, ai, gold, Am, alpha = std::move(alpha), logZ](ad::Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        const Tensor& Pv = t.value(pi);
        const std::size_t L = Pv.rows();
        const auto beta = backward_scores(Pv, Am);
        // d loss = expected counts under the model - gold counts.
        Tensor dP({L, kNumTags});
        Tensor dA({kNumStates, kNumStates});
        for (std::size_t i = 0; i < L; ++i) {
          for (std::size_t y = 0; y < kNumTags; ++y) dP(i, y) = std::exp(alpha[i][y] + beta[i][y] - logZ);
        }
        for (std::size_t y = 0; y < kNumTags; ++y) {
          dA(kStartState, y) += dP(0, y);
          dA(y, kEndState) += dP(L - 1, y);
        }
        for (std::size_t i = 0; i + 1 < L; ++i)
          for (std::size_t y = 0; y < kNumTags; ++y)
            for (std::size_t q = 0; q < kNumTags; ++q)
              dA(y, q) += std::exp(alpha[i][y] + Am(y, q) + Pv(i + 1, q) + beta[i + 1][q] - logZ);
        std::size_t prev = kStartState;
        for (std::size_t i = 0; i < L; ++i) {
          const auto y = static_cast<std::size_t>(gold[i]);
          dP(i, y) -= 1.0;
          dA(prev, y) -= 1.0;
          prev = y;
        }
        dA(prev, kEndState) -= 1.0;
        if (t.requires_grad(pi)) t.grad(pi).mat() += g * dP.mat();
        if (t.requires_grad(ai)) {
          Tensor& gA = t.grad(ai);
          for (std::size_t i = 0; i < kNumStates; ++i)
            for (std::size_t j = 0; j < kNumStates; ++j)
              if (mask()(i, j)) gA(i, j) += g * dA(i, j);
        }
      });
}

void LabelerParams::create(ParameterStore& store, std::size_t d_E, std::size_t num_types, std::mt19937_64& rng) {
  if (d_E % 2 != 0) throw ConfigError("d_E must be even");
  for (std::size_t t = 0; t < num_types; ++t) {
    const std::string p = "label.type" + std::to_string(t) + ".";
    GruParams::create(store, p + "gru.fwd", d_E, d_E / 2, rng);
    GruParams::create(store, p + "gru.bwd", d_E, d_E / 2, rng);
    store.add(p + "h0.W", glorot_uniform(d_E / 2, d_E, rng));
    store.add(p + "h0.b", Tensor({1, d_E / 2}));
    for (const char* piece : {"maxout0", "maxout1"}) {
      store.add(p + piece + ".W", glorot_uniform(d_E, 2 * d_E, rng));
      store.add(p + piece + ".b", Tensor({1, d_E}));
    }
    store.add(p + "emit.W", glorot_uniform(kNumTags, d_E, rng));
    store.add(p + "emit.b", Tensor({1, kNumTags}));
  }
  store.add("crf.A", Tensor({kNumStates, kNumStates}));
}

LabelerParams LabelerParams::bind(const ParameterStore& store, std::size_t num_types) {
  LabelerParams out;
  for (std::size_t t = 0; t < num_types; ++t) {
    const std::string p = "label.type" + std::to_string(t) + ".";
    TypeLabelerParams tp;
    tp.fwd = GruParams::bind(store, p + "gru.fwd");
    tp.bwd = GruParams::bind(store, p + "gru.bwd");
    tp.h0_W = &store.get(p + "h0.W");
    tp.h0_b = &store.get(p + "h0.b");
    for (int k = 0; k < 2; ++k) {
      tp.maxout_W[k] = &store.get(p + "maxout" + std::to_string(k) + ".W");
      tp.maxout_b[k] = &store.get(p + "maxout" + std::to_string(k) + ".b");
    }
    tp.emit_W = &store.get(p + "emit.W");
    tp.emit_b = &store.get(p + "emit.b");
    out.types.push_back(tp);
  }
  out.A = &store.get("crf.A");
  return out;
}

Var fuse(const TypeLabelerParams& p, Var text_nodes, Var type_node) {
  using namespace ad;
  Tape& t = *text_nodes.tape();
  const std::size_t L = text_nodes.rows();
  const Var h0 = affine(type_node, t.param(*p.h0_W), t.param(*p.h0_b));
  const Var scanned = birnn(p.fwd, p.bwd, text_nodes, h0);
  const Var broadcast = gather_rows(type_node, std::vector<std::size_t>(L, 0));
  const Var u = concat_cols({add(scanned, text_nodes), broadcast});
  return maximum(affine(u, t.param(*p.maxout_W[0]), t.param(*p.maxout_b[0])),
                 affine(u, t.param(*p.maxout_W[1]), t.param(*p.maxout_b[1])));
}

Var emissions(const TypeLabelerParams& p, Var fused) {
  ad::Tape& t = *fused.tape();
  return ad::affine(fused, t.param(*p.emit_W), t.param(*p.emit_b));
}

TypedPrediction predict_entities(const GraphState& state, const LabelerParams& params, double mask_constant) {
  const Tensor A = mask_transitions(params.A->value, mask_constant);
  TypedPrediction out;
  for (std::size_t t = 0; t < params.types.size(); ++t) {
    const Var type_node = ad::gather_rows(state.type, {t});
    const Var P = emissions(params.types[t], fuse(params.types[t], state.text, type_node));
    TagSequence seq{viterbi(P.value(), A).tags, static_cast<TypeId>(t)};
    try {
      out.per_type.push_back(decode_nested(seq));
    } catch (const DecodeError& e) {
      throw DecodeError(e.index(), std::string(e.what()) + " while decoding type " + std::to_string(t));
    }
    out.entities.insert(out.per_type.back().begin(), out.per_type.back().end());
    out.tags.push_back(std::move(seq));
  }
  return out;
}

Var labeler_loss(const GraphState& state, const LabelerParams& params, const std::vector<TagSequence>& gold,
                 double mask_constant) {
  if (gold.size() != params.types.size()) {
    throw ContractError("labeler_loss: " + std::to_string(gold.size()) + " gold sequences for " +
                        std::to_string(params.types.size()) + " types");
  }
  ad::Tape& t = *state.text.tape();
  const Var A = t.param(*params.A);
  Var total;
  for (std::size_t k = 0; k < params.types.size(); ++k) {
    const Var type_node = ad::gather_rows(state.type, {k});
    const Var P = emissions(params.types[k], fuse(params.types[k], state.text, type_node));
    const Var loss = crf_nll(P, A, gold[k].tags, mask_constant);
    total = total.valid() ? ad::add(total, loss) : loss;
  }
  return total;
}

}  // namespace hetstar
