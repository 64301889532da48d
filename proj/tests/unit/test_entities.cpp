// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "hetstar/entities.hpp"
#include "hetstar/errors.hpp"

using namespace hetstar;

namespace {

constexpr TypeId PRO = 0;
constexpr TypeId DNA = 1;

EntitySet spans(std::initializer_list<std::pair<std::size_t, std::size_t>> list, TypeId type = 0) {
  EntitySet out;
  for (auto [s, e] : list) out.insert({s, e, type});
  return out;
}

// Relation from token-index sets, written without interval arithmetic.
NestingRelation oracle_relation(const EntitySpan& a, const EntitySpan& b) {
  std::set<std::size_t> A, B, both;
  for (std::size_t i = a.start; i <= a.end; ++i) A.insert(i);
  for (std::size_t i = b.start; i <= b.end; ++i) B.insert(i);
  std::set_intersection(A.begin(), A.end(), B.begin(), B.end(), std::inserter(both, both.end()));
  const bool same = a.label == b.label;
  if (A == B) return same ? NestingRelation::Identical : NestingRelation::ME;
  if (both == A || both == B) return same ? NestingRelation::NST : NestingRelation::NDT;
  if (!both.empty()) return same ? NestingRelation::OST : NestingRelation::ODT;
  if (A.count(b.start - 1) || A.count(b.end + 1)) return NestingRelation::Touching;
  return NestingRelation::Disjoint;
}

// Laminar family where every child lies strictly inside its parent and
// siblings are separated by at least one token.
void grow(std::size_t s, std::size_t e, int depth, std::mt19937_64& rng, EntitySet& out) {
  if (depth == 0 || e < s + 2) return;
  std::size_t pos = s + 1;
  while (pos + 1 <= e) {
    pos += rng() % 3;
    if (pos >= e) break;
    const std::size_t room = e - pos;  // child must end before e
    const std::size_t len = 1 + rng() % std::min<std::size_t>(room, 6);
    const std::size_t cs = pos, ce = pos + len - 1;
    if (ce >= e) break;
    out.insert({cs, ce, 0});
    grow(cs, ce, depth - 1, rng, out);
    pos = ce + 2;
  }
}

EntitySet random_nested_set(std::size_t L, std::mt19937_64& rng) {
  EntitySet out;
  std::size_t pos = rng() % 2;
  while (pos < L) {
    const std::size_t len = 1 + rng() % std::min<std::size_t>(L - pos, 10);
    const std::size_t s = pos, e = pos + len - 1;
    if (rng() % 4 != 0) {
      out.insert({s, e, 0});
      grow(s, e, 2, rng, out);  // top level plus two nested levels
    }
    pos = e + 2 + rng() % 2;
  }
  return out;
}

std::size_t nesting_depth(const EntitySet& x) {
  std::size_t best = 0;
  for (const auto& a : x) {
    std::size_t d = 0;
    for (const auto& b : x)
      if (b.start <= a.start && a.end <= b.end) ++d;
    best = std::max(best, d);
  }
  return best;
}

std::vector<BioesTag> nth_sequence(std::size_t code, std::size_t L) {
  std::vector<BioesTag> tags(L);
  for (std::size_t i = 0; i < L; ++i) {
    tags[i] = static_cast<BioesTag>(code % kNumTags);
    code /= kNumTags;
  }
  return tags;
}

std::size_t pow5(std::size_t L) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < L; ++i) n *= kNumTags;
  return n;
}

}  // namespace

TEST(ClassifyPair, WorkedExamples) {
  EXPECT_EQ(classify_pair({0, 2, PRO}, {0, 2, DNA}, 6), NestingRelation::ME);
  EXPECT_EQ(classify_pair({0, 4, PRO}, {1, 2, PRO}, 6), NestingRelation::NST);
  EXPECT_EQ(classify_pair({0, 2, PRO}, {0, 2, PRO}, 6), NestingRelation::Identical);
  EXPECT_EQ(classify_pair({0, 3, PRO}, {2, 5, PRO}, 6), NestingRelation::OST);
  EXPECT_EQ(classify_pair({0, 3, PRO}, {1, 2, DNA}, 6), NestingRelation::NDT);
  EXPECT_EQ(classify_pair({0, 3, PRO}, {2, 5, DNA}, 6), NestingRelation::ODT);
}

TEST(ClassifyPair, InvalidSpanIsAPreconditionError) {
  EXPECT_THROW(classify_pair({3, 2, PRO}, {0, 0, PRO}, 6), PreconditionError);
  EXPECT_THROW(classify_pair({0, 6, PRO}, {0, 0, PRO}, 6), PreconditionError);
}

TEST(ClassifyPair, ExhaustiveSymmetricAndMatchesSetOracle) {
  for (std::size_t L = 1; L <= 6; ++L) {
    std::vector<EntitySpan> all;
    for (std::size_t s = 0; s < L; ++s)
      for (std::size_t e = s; e < L; ++e)
        for (TypeId t : {PRO, DNA}) all.push_back({s, e, t});
    for (const auto& a : all) {
      for (const auto& b : all) {
        const NestingRelation r = classify_pair(a, b, L);
        EXPECT_EQ(r, classify_pair(b, a, L));
        EXPECT_EQ(r, oracle_relation(a, b)) << a.start << "," << a.end << " vs " << b.start << "," << b.end;
      }
    }
  }
}

TEST(EncodeNested, WorkedExamples) {
  EXPECT_EQ(encode_nested({}, 3, 0).str(), "OOO");
  EXPECT_EQ(encode_nested(spans({{1, 1}}), 3, 0).str(), "OSO");
  EXPECT_EQ(encode_nested(spans({{0, 2}, {1, 1}}), 3, 0).str(), "BSE");
  EXPECT_EQ(encode_nested(spans({{0, 3}, {0, 1}}), 4, 0).str(), "BEIE");
}

TEST(EncodeNested, Errors) {
  EXPECT_THROW(encode_nested(spans({{0, 3}, {2, 5}}), 6, 0), RepresentabilityError);
  EXPECT_THROW(encode_nested(spans({{0, 3}}), 3, 0), PreconditionError);
}

TEST(EncodeNested, OrderIndependent) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t L = 1 + rng() % 24;
    const EntitySet x = random_nested_set(L, rng);
    std::vector<EntitySpan> order(x.begin(), x.end());
    std::shuffle(order.begin(), order.end(), rng);
    EntitySet rebuilt;
    for (const auto& s : order) rebuilt.insert(s);
    EXPECT_EQ(encode_nested(rebuilt, L, 0).tags, encode_nested(x, L, 0).tags);
  }
}

TEST(DecodeNested, WorkedExamples) {
  EXPECT_EQ(decode_nested(TagSequence::parse("OOO")), EntitySet{});
  EXPECT_EQ(decode_nested(TagSequence::parse("BSE")), spans({{0, 2}, {1, 1}}));
  EXPECT_EQ(decode_nested(TagSequence::parse("BEIE")), spans({{0, 1}, {0, 3}}));
  EXPECT_EQ(decode_nested(TagSequence::parse("BIE")), spans({{0, 2}}));
}

TEST(DecodeNested, TypeIsCarriedThrough) {
  EXPECT_EQ(decode_nested(TagSequence::parse("OSO", DNA)), spans({{1, 1}}, DNA));
}

TEST(DecodeNested, MalformedSequencesNameTheIndex) {
  auto index_of = [](const char* letters) -> std::size_t {
    try {
      decode_nested(TagSequence::parse(letters));
    } catch (const DecodeError& e) {
      return e.index();
    }
    return 999;
  };
  EXPECT_EQ(index_of("OBO"), 2u);   // unclosed B
  EXPECT_EQ(index_of("OOB"), 3u);   // sequence ends inside an entity
  EXPECT_EQ(index_of("OIE"), 1u);   // I with no enclosing pair
  EXPECT_EQ(index_of("EOO"), 0u);
}

TEST(IsRepresentable, Examples) {
  EXPECT_TRUE(is_representable(spans({{0, 2}, {1, 1}}), 3));
  EXPECT_FALSE(is_representable(spans({{0, 3}, {2, 5}}), 6));
  EXPECT_TRUE(is_representable({}, 4));
  // Two adjacent children that exactly tile their parent leave no tag for it.
  EXPECT_FALSE(is_representable(spans({{0, 3}, {0, 1}, {2, 3}}), 4));
}

TEST(ValidateEntitySet, Examples) {
  EXPECT_TRUE(validate_entity_set({{0, 2, PRO}, {0, 2, DNA}}, 6).empty());
  EXPECT_TRUE(validate_entity_set({}, 6).empty());
  const auto d = validate_entity_set({{0, 3, PRO}, {2, 5, PRO}}, 6);
  ASSERT_EQ(d.size(), 1u);
  ASSERT_EQ(d[0].spans.size(), 2u);
  EXPECT_EQ(d[0].spans[0], (EntitySpan{0, 3, PRO}));
  EXPECT_EQ(d[0].spans[1], (EntitySpan{2, 5, PRO}));
  EXPECT_EQ(d[0].relation, NestingRelation::OST);
}

TEST(ValidateEntitySet, CrossTypeOverlapIsAllowed) {
  EXPECT_TRUE(validate_entity_set({{0, 3, PRO}, {2, 5, DNA}}, 6).empty());
}

TEST(ValidateEntitySet, ReportsAmbiguousNesting) {
  const auto d = validate_entity_set(spans({{0, 3}, {0, 1}, {2, 3}}), 4);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_FALSE(d[0].relation.has_value());
  EXPECT_NE(d[0].message.find("ambiguous"), std::string::npos);
}

TEST(Codec, RoundTripOnRandomNestedSets) {
  std::mt19937_64 rng(20240611);
  std::size_t nested = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t L = 1 + rng() % 24;
    const EntitySet x = random_nested_set(L, rng);
    ASSERT_LE(nesting_depth(x), 3u);
    nested += nesting_depth(x) > 1;
    const TagSequence tags = encode_nested(x, L, 0);
    ASSERT_EQ(decode_nested(tags), x) << tags.str();
    ASSERT_TRUE(is_representable(x, L));
  }
  EXPECT_GT(nested, 2000u);
}

TEST(Codec, DecoderIsTotalOnLegalSequences) {
  for (std::size_t L = 1; L <= 6; ++L) {
    std::size_t legal = 0;
    for (std::size_t code = 0; code < pow5(L); ++code) {
      TagSequence t{nth_sequence(code, L), 0};
      if (first_illegal_position(t.tags)) {
        EXPECT_THROW(decode_nested(t), DecodeError) << t.str();
        continue;
      }
      ++legal;
      EntitySet x;
      ASSERT_NO_THROW(x = decode_nested(t)) << t.str();
      for (const auto& s : x) EXPECT_LT(s.end, L);
    }
    EXPECT_GT(legal, 0u);
  }
}

TEST(Codec, EncodedSequencesAreLegal) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t L = 1 + rng() % 24;
    EXPECT_FALSE(first_illegal_position(encode_nested(random_nested_set(L, rng), L, 0).tags).has_value());
  }
}

TEST(Transitions, AutomatonTable) {
  using T = BioesTag;
  const std::optional<T> start, end;
  EXPECT_FALSE(transition_allowed(T::B, T::O));
  EXPECT_TRUE(transition_allowed(T::B, T::I));
  EXPECT_FALSE(transition_allowed(T::I, end));
  EXPECT_FALSE(transition_allowed(T::B, end));
  EXPECT_FALSE(transition_allowed(T::O, T::I));
  EXPECT_FALSE(transition_allowed(start, T::I));
  EXPECT_FALSE(transition_allowed(start, T::E));
  EXPECT_TRUE(transition_allowed(start, T::B));
  // A closed inner entity may be followed by the rest of its enclosing one.
  EXPECT_TRUE(transition_allowed(T::E, T::I));
  EXPECT_TRUE(transition_allowed(T::S, T::E));
}

TEST(TagSequence, ParseAndPrint) {
  EXPECT_EQ(TagSequence::parse("BIOES").str(), "BIOES");
  EXPECT_THROW(TagSequence::parse("BX"), std::exception);
}
