// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>
#include <sstream>

#include "hetstar/encoder.hpp"
#include "hetstar/errors.hpp"

using namespace hetstar;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace {

Mat as_mat(const Tensor& t) { return t.mat(); }
Vec as_vec(const Tensor& t) { return Eigen::Map<const Vec>(t.data().data(), static_cast<Eigen::Index>(t.size())); }
Tensor as_row(const Vec& v) { return Tensor::row({v.data(), static_cast<std::size_t>(v.size())}); }

Vec sigm(const Vec& v) { return v.unaryExpr([](double a) { return 1.0 / (1.0 + std::exp(-a)); }); }
Vec tanhv(const Vec& v) { return v.array().tanh().matrix(); }

// Column-vector GRU written straight from the gate equations.
struct OracleGru {
  Mat Wxr, Whr, Wxz, Whz, Wxn, Whn;
  Vec bxr, bhr, bxz, bhz, bxn, bhn;

  OracleGru(const ParameterStore& s, const std::string& p) {
    auto M = [&](const char* n) { return as_mat(s.get(p + "." + n).value); };
    auto V = [&](const char* n) { return as_vec(s.get(p + "." + n).value); };
    Wxr = M("W_xr"), Whr = M("W_hr"), Wxz = M("W_xz"), Whz = M("W_hz"), Wxn = M("W_xn"), Whn = M("W_hn");
    bxr = V("b_xr"), bhr = V("b_hr"), bxz = V("b_xz"), bhz = V("b_hz"), bxn = V("b_xn"), bhn = V("b_hn");
  }

  Vec step(const Vec& x, const Vec& h) const {
    const Vec r = sigm(Wxr * x + bxr + Whr * h + bhr);
    const Vec z = sigm(Wxz * x + bxz + Whz * h + bhz);
    const Vec n = tanhv(Wxn * x + bxn + (r.array() * (Whn * h + bhn).array()).matrix());
    return ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
  }

  std::size_t hidden() const { return static_cast<std::size_t>(Whr.rows()); }
};

Mat oracle_birnn(const OracleGru& f, const OracleGru& b, const std::vector<Vec>& xs) {
  const std::size_t L = xs.size();
  const auto hf = static_cast<Eigen::Index>(f.hidden()), hb = static_cast<Eigen::Index>(b.hidden());
  Mat out(static_cast<Eigen::Index>(L), hf + hb);
  Vec h = Vec::Zero(hf);
  for (std::size_t i = 0; i < L; ++i) out.row(static_cast<Eigen::Index>(i)).head(hf) = h = f.step(xs[i], h);
  h = Vec::Zero(hb);
  for (std::size_t i = L; i-- > 0;) out.row(static_cast<Eigen::Index>(i)).tail(hb) = h = b.step(xs[i], h);
  return out;
}

ParameterStore single_cell(std::size_t in, std::size_t hidden, std::uint64_t seed) {
  ParameterStore s;
  std::mt19937_64 rng(seed);
  GruParams::create(s, "cell", in, hidden, rng);
  return s;
}

void zero_all(ParameterStore& s) {
  for (auto& [_, p] : s) p.value.fill(0.0);
}

void randomize_biases(ParameterStore& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (auto& [name, p] : s)
    if (name.find(".b") != std::string::npos)
      for (auto& v : p.value.data()) v = d(rng);
}

Sentence sentence(std::vector<std::string> tokens, std::vector<std::string> pos = {}) {
  return {std::move(tokens), std::move(pos)};
}

struct EncoderFixture {
  Vocabulary vocab;
  ParameterStore store;
  EncoderDims dims{4, 6, 5, 3, 8, 6};
  EncoderParams params;

  explicit EncoderFixture(std::uint64_t seed, std::size_t types = 2) {
    vocab.extend({sentence({"The", "p53", "gene"}, {"DT", "NN", "NN"})});
    std::mt19937_64 rng(seed);
    EncoderParams::create(store, dims, vocab, types, rng);
    randomize_biases(store, rng);
    params = EncoderParams::bind(store, types);
  }
};

void expect_near(const Tensor& a, const Mat& b, double tol) {
  ASSERT_EQ(a.rows(), static_cast<std::size_t>(b.rows()));
  ASSERT_EQ(a.cols(), static_cast<std::size_t>(b.cols()));
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      EXPECT_NEAR(a(r, c), b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)), tol);
}

}  // namespace

TEST(Vocabulary, ReservedIdsAndUnknowns) {
  Vocabulary v;
  v.extend({sentence({"a", "b", "a"}, {"N", "V", "N"})});
  EXPECT_EQ(v.token_id("a"), 2u);
  EXPECT_EQ(v.token_id("b"), 3u);
  EXPECT_EQ(v.token_id("zzz"), Vocabulary::kUnk);
  EXPECT_EQ(v.pos_id("N"), 3u);
  EXPECT_EQ(v.pos_id("ADJ"), Vocabulary::kUnk);
  EXPECT_EQ(v.char_id('a'), 2u);
  EXPECT_EQ(v.char_id('#'), Vocabulary::kUnk);
  EXPECT_EQ(Vocabulary::from_lists(v.tokens(), v.chars(), v.pos_tags()), v);
}

TEST(Vocabulary, EncodeSentence) {
  Vocabulary v;
  v.extend({sentence({"ab", "c"})});
  const EncodedSentence e = encode_sentence(v, sentence({"ab", "x"}));
  EXPECT_EQ(e.token_ids, (std::vector<std::size_t>{2, Vocabulary::kUnk}));
  EXPECT_EQ(e.char_ids[0].size(), 2u);
  EXPECT_EQ(e.pos_ids, (std::vector<std::size_t>{Vocabulary::kNullPos, Vocabulary::kNullPos}));
  EXPECT_THROW(encode_sentence(v, sentence({})), DataError);
  EXPECT_THROW(encode_sentence(v, sentence({"ab"}, {"N", "V"})), DataError);
}

TEST(GatedCell, ZeroParametersHalveTheState) {
  ParameterStore s = single_cell(3, 4, 1);
  zero_all(s);
  const GruParams p = GruParams::bind(s, "cell");
  ad::Tape t;
  const Tensor h = Tensor::matrix(1, 4, {1.0, -2.0, 0.5, 4.0});
  const Tensor o = gated_cell(p, t.constant(Tensor::matrix(1, 3, {9, -9, 3})), t.constant(h)).value();
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(o[i], 0.5 * h[i]);
}

TEST(GatedCell, SaturatedUpdateGateKeepsTheState) {
  ParameterStore s = single_cell(3, 4, 2);
  s.get("cell.b_xz").value.fill(50.0);
  s.get("cell.b_hz").value.fill(50.0);
  const GruParams p = GruParams::bind(s, "cell");
  ad::Tape t;
  const Tensor h = Tensor::matrix(1, 4, {0.3, -0.7, 0.1, 0.9});
  const Tensor o = gated_cell(p, t.constant(Tensor::matrix(1, 3, {1, -1, 2})), t.constant(h)).value();
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(o[i], h[i], 1e-12);
}

TEST(GatedCell, MatchesIndependentEvaluation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ParameterStore s = single_cell(5, 3, seed);
    std::mt19937_64 rng(seed + 100);
    randomize_biases(s, rng);
    const GruParams p = GruParams::bind(s, "cell");
    const OracleGru oracle(s, "cell");
    std::uniform_real_distribution<double> d(-1, 1);
    Vec x(5), h(3);
    for (auto& v : x) v = d(rng);
    for (auto& v : h) v = d(rng);
    ad::Tape t;
    const Tensor o = gated_cell(p, t.constant(as_row(x)), t.constant(as_row(h))).value();
    expect_near(o, oracle.step(x, h).transpose(), 1e-14);
  }
}

TEST(GatedCell, OutputLiesBetweenCandidateAndState) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    ParameterStore s = single_cell(4, 4, rng());
    randomize_biases(s, rng);
    const OracleGru oracle(s, "cell");
    std::uniform_real_distribution<double> d(-2, 2);
    Vec x(4), h(4);
    for (auto& v : x) v = d(rng);
    for (auto& v : h) v = d(rng);
    const Vec r = sigm(oracle.Wxr * x + oracle.bxr + oracle.Whr * h + oracle.bhr);
    const Vec n = tanhv(oracle.Wxn * x + oracle.bxn + (r.array() * (oracle.Whn * h + oracle.bhn).array()).matrix());
    ad::Tape t;
    const Tensor o = gated_cell(GruParams::bind(s, "cell"), t.constant(as_row(x)), t.constant(as_row(h))).value();
    for (Eigen::Index i = 0; i < 4; ++i) {
      EXPECT_GE(o[static_cast<std::size_t>(i)], std::min(n[i], h[i]) - 1e-15);
      EXPECT_LE(o[static_cast<std::size_t>(i)], std::max(n[i], h[i]) + 1e-15);
    }
  }
}

TEST(GatedCell, ShapeMismatch) {
  ParameterStore s = single_cell(3, 4, 1);
  ad::Tape t;
  EXPECT_THROW(gated_cell(GruParams::bind(s, "cell"), t.constant(Tensor({1, 2})), t.constant(Tensor({1, 4}))),
               ShapeError);
}

TEST(Birnn, LengthOneIsTwoCells) {
  ParameterStore s;
  std::mt19937_64 rng(3);
  GruParams::create(s, "f", 3, 2, rng);
  GruParams::create(s, "b", 3, 2, rng);
  randomize_biases(s, rng);
  const GruParams f = GruParams::bind(s, "f"), b = GruParams::bind(s, "b");
  ad::Tape t;
  const ad::Var x = t.constant(Tensor::matrix(1, 3, {0.1, 0.2, -0.3}));
  const ad::Var h0 = t.constant(Tensor::matrix(1, 2, {0.5, -0.5}));
  const Tensor out = birnn(f, b, x, h0).value();
  const Tensor ef = gated_cell(f, x, h0).value(), eb = gated_cell(b, x, h0).value();
  EXPECT_EQ(out, Tensor::matrix(1, 4, {ef[0], ef[1], eb[0], eb[1]}));
}

TEST(Birnn, ZeroParametersHalveEachStep) {
  ParameterStore s;
  std::mt19937_64 rng(3);
  GruParams::create(s, "f", 2, 2, rng);
  GruParams::create(s, "b", 2, 2, rng);
  zero_all(s);
  ad::Tape t;
  const Tensor out = birnn(GruParams::bind(s, "f"), GruParams::bind(s, "b"), t.constant(Tensor({2, 2}, 1.0)),
                           t.constant(Tensor::matrix(1, 2, {4.0, -8.0})))
                         .value();
  // forward: 0.5 h0 then 0.25 h0; backward mirrors.
  EXPECT_EQ(out, Tensor::matrix(2, 4, {2, -4, 1, -2, 1, -2, 2, -4}));
}

TEST(Birnn, ReversalSymmetry) {
  // Swapping the direction cells and reversing the input mirrors the output.
  ParameterStore s;
  std::mt19937_64 rng(8);
  GruParams::create(s, "f", 3, 2, rng);
  GruParams::create(s, "b", 3, 2, rng);
  randomize_biases(s, rng);
  const GruParams f = GruParams::bind(s, "f"), b = GruParams::bind(s, "b");
  const Tensor x = Tensor::matrix(4, 3, {1, 2, 3, -1, 0, 1, 0.5, 0.5, -2, 3, -1, 0});
  Tensor xr({4, 3});
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) xr(r, c) = x(3 - r, c);
  ad::Tape t;
  const Tensor a = birnn(f, b, t.constant(x)).value();
  const Tensor m = birnn(b, f, t.constant(xr)).value();
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      EXPECT_EQ(a(r, c), m(3 - r, c + 2));
      EXPECT_EQ(a(r, c + 2), m(3 - r, c));
    }
}

TEST(Birnn, EmptySequenceIsAContractError) {
  ParameterStore s;
  std::mt19937_64 rng(3);
  GruParams::create(s, "f", 3, 2, rng);
  ad::Tape t;
  const GruParams f = GruParams::bind(s, "f");
  EXPECT_THROW(birnn(f, f, t.constant(Tensor({0, 3}))), ContractError);
}

TEST(HybridEmbed, AllZeroParametersGiveZeroContext) {
  EncoderFixture fx(1);
  zero_all(fx.store);
  ad::Tape t;
  const Tensor h = hybrid_embed(t, fx.params, encode_sentence(fx.vocab, sentence({"p53"}, {"NN"}))).value();
  EXPECT_EQ(h.rows(), 1u);
  EXPECT_EQ(h.cols(), fx.dims.d_A);
  for (double v : h.data()) EXPECT_EQ(v, 0.0);
}

TEST(HybridEmbed, MatchesStepByStepOracle) {
  EncoderFixture fx(4);
  const Sentence s = sentence({"The", "p53", "gene"}, {"DT", "NN", "NN"});
  const EncodedSentence e = encode_sentence(fx.vocab, s);
  const OracleGru cf(fx.store, "embed.char_gru.fwd"), cb(fx.store, "embed.char_gru.bwd");
  const OracleGru ff(fx.store, "embed.fuse_gru.fwd"), fb(fx.store, "embed.fuse_gru.bwd");
  const Mat C = as_mat(fx.store.get("embed.char").value), K = as_mat(fx.store.get("embed.token").value);
  const Mat W = as_mat(fx.store.get("embed.word").value), P = as_mat(fx.store.get("embed.pos").value);
  std::vector<Vec> fused;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    std::vector<Vec> cs;
    for (unsigned char ch : s.tokens[i]) cs.push_back(C.row(static_cast<Eigen::Index>(fx.vocab.char_id(ch))).transpose());
    const Vec char_feature = oracle_birnn(cf, cb, cs).colwise().mean().transpose();
    Vec x(K.cols() + char_feature.size() + W.cols() + P.cols());
    x << K.row(static_cast<Eigen::Index>(e.token_ids[i])).transpose(), char_feature,
        W.row(static_cast<Eigen::Index>(e.token_ids[i])).transpose(), P.row(static_cast<Eigen::Index>(e.pos_ids[i])).transpose();
    fused.push_back(x);
  }
  ad::Tape t;
  expect_near(hybrid_embed(t, fx.params, e).value(), oracle_birnn(ff, fb, fused), 1e-13);
}

TEST(HybridEmbed, DependsOnTokenOrder) {
  EncoderFixture fx(5);
  ad::Tape t;
  const Tensor a = hybrid_embed(t, fx.params, encode_sentence(fx.vocab, sentence({"The", "p53", "gene"}))).value();
  const Tensor b = hybrid_embed(t, fx.params, encode_sentence(fx.vocab, sentence({"p53", "The", "gene"}))).value();
  bool differs = false;
  for (std::size_t c = 0; c < a.cols(); ++c) differs |= a(2, c) != b(2, c);
  EXPECT_TRUE(differs);
}

TEST(NodeInit, TextNodesIdentityAndBias) {
  EncoderFixture fx(6);
  ad::Tape t;
  const Tensor H = Tensor::matrix(2, 6, {1, 2, 3, 4, 5, 6, -1, -2, -3, -4, -5, -6});
  Parameter& W = fx.store.get("nodes.text.W");
  Parameter& b = fx.store.get("nodes.text.b");
  ParameterStore sq;
  EncoderParams p;
  p.text_W = &sq.add("W", Tensor({6, 6}));
  p.text_b = &sq.add("b", Tensor({1, 6}));
  for (std::size_t i = 0; i < 6; ++i) sq.get("W").value(i, i) = 1.0;
  EXPECT_EQ(init_text_nodes(t, p, t.constant(H)).value(), H);
  sq.get("W").value.fill(0.0);
  sq.get("b").value = Tensor::matrix(1, 6, {1, 0, 0, 0, 0, -1});
  const Tensor only_bias = init_text_nodes(t, p, t.constant(H)).value();
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(only_bias(r, c), sq.get("b").value[c]);
  const Tensor HA = Tensor::matrix(3, 8, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, -1, 1, -1, 1, -1, 1, -1, 1,
                                          2, 0, 0, 2, 0, 0, 2, 0});
  const Mat expected = (as_mat(HA) * as_mat(W.value).transpose()).rowwise() + as_vec(b.value).transpose();
  expect_near(init_text_nodes(t, fx.params, t.constant(HA)).value(), expected, 1e-14);
}

TEST(NodeInit, TypeNodesArePerTypeMaxPools) {
  EncoderFixture fx(7);
  const Tensor HA = Tensor::matrix(3, 8, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, -1, 1, -1, 1, -1, 1, -1, 1,
                                          2, 0, 0, 2, 0, 0, 2, 0});
  ad::Tape t;
  const Tensor types = init_type_nodes(t, fx.params, t.constant(HA)).value();
  ASSERT_EQ(types.rows(), 2u);
  for (std::size_t ty = 0; ty < 2; ++ty) {
    const Mat proj = (as_mat(HA) * as_mat(fx.params.type_W[ty]->value).transpose()).rowwise() +
                     as_vec(fx.params.type_b[ty]->value).transpose();
    const Vec pooled = proj.colwise().maxCoeff().transpose();
    const Tensor own = ad::affine(t.constant(HA), t.param(*fx.params.type_W[ty]), t.param(*fx.params.type_b[ty])).value();
    for (std::size_t c = 0; c < types.cols(); ++c) {
      double best = own(0, c);
      for (std::size_t r = 1; r < own.rows(); ++r) best = std::max(best, own(r, c));
      EXPECT_EQ(types(ty, c), best);
      EXPECT_NEAR(types(ty, c), pooled[static_cast<Eigen::Index>(c)], 1e-15);
    }
  }
  bool distinct = false;
  for (std::size_t c = 0; c < types.cols(); ++c) distinct |= types(0, c) != types(1, c);
  EXPECT_TRUE(distinct);

  // One position: the pool is the projection itself.
  const Tensor single = init_type_nodes(t, fx.params, t.constant(Tensor({1, 8}, 0.25))).value();
  const Vec expected = as_mat(fx.params.type_W[0]->value) * Vec::Constant(8, 0.25) + as_vec(fx.params.type_b[0]->value);
  for (std::size_t c = 0; c < single.cols(); ++c) EXPECT_NEAR(single(0, c), expected[static_cast<Eigen::Index>(c)], 1e-15);
}

TEST(WordVectors, ImportOverwritesKnownRows) {
  EncoderFixture fx(8);
  std::istringstream in("p53 1 2 3 4 5\nunseen 1 1 1 1 1\n\ngene 0 0 0 0 0\n");
  EXPECT_EQ(import_word_vectors(fx.store, fx.vocab, in), 2u);
  const Tensor& W = fx.store.get("embed.word").value;
  const std::size_t id = fx.vocab.token_id("p53");
  for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(W(id, c), static_cast<double>(c + 1));
  std::istringstream bad("p53 1 2\n");
  EXPECT_THROW(import_word_vectors(fx.store, fx.vocab, bad), ParseError);
}
