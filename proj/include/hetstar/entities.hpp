// SPDX-License-Identifier: Apache-2.0
//
// Entity spans, the nesting taxonomy, and the nested BIOES codec.
//
// Spans use 0-based inclusive [start, end] token indices. One TagSequence
// annotates the entities of a single type; entities of different types never
// share a sequence, which is how multi-label and cross-type nested entities
// are supported.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hetstar {

using TypeId = std::uint32_t;

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  TypeId label = 0;

  std::size_t length() const noexcept { return end - start + 1; }
  friend auto operator<=>(const EntitySpan&, const EntitySpan&) = default;
};

/// Duplicate-free set of spans, ordered by (start, end, label).
using EntitySet = std::set<EntitySpan>;

enum class NestingRelation { Identical, ME, NST, NDT, OST, ODT, Disjoint, Touching };

std::string_view to_string(NestingRelation r);

enum class BioesTag : std::uint8_t { B = 0, I = 1, O = 2, E = 3, S = 4 };

inline constexpr std::size_t kNumTags = 5;

char to_char(BioesTag t);
BioesTag tag_from_char(char c);

struct TagSequence {
  std::vector<BioesTag> tags;
  TypeId type_id = 0;

  std::size_t size() const noexcept { return tags.size(); }
  std::string str() const;
  static TagSequence parse(std::string_view letters, TypeId type = 0);
};

/// Whether `from` may be followed by `to` in a nested BIOES sequence.
/// std::nullopt stands for the virtual start state (as `from`) or the
/// virtual end state (as `to`). This is the single source of truth for the
/// CRF constraint mask and for decoder input validation.
bool transition_allowed(std::optional<BioesTag> from, std::optional<BioesTag> to);

/// Index of the first position whose incoming transition is illegal, or
/// `tags.size()` when the final transition into the end state is illegal.
/// Returns std::nullopt for legal sequences.
std::optional<std::size_t> first_illegal_position(const std::vector<BioesTag>& tags);

/// Throws PreconditionError unless start <= end < length.
void check_span(const EntitySpan& span, std::size_t length);

NestingRelation classify_pair(const EntitySpan& a, const EntitySpan& b, std::size_t length);

/// Nested BIOES tagging: I over every interior, then B/E on multi-token
/// boundaries, then S on single-token spans. All spans must carry `type`.
/// Throws RepresentabilityError on a same-type partial overlap.
TagSequence encode_nested(const EntitySet& spans, std::size_t length, TypeId type);

/// Inside-out detagging; see entities.cpp for the pairing rules. Throws
/// DecodeError on sequences the constraint automaton rejects.
EntitySet decode_nested(const TagSequence& tags);

/// True iff decode_nested(encode_nested(spans)) reproduces `spans`.
/// Sets with a same-type partial overlap are never representable.
bool is_representable(const EntitySet& spans, std::size_t length);

struct Diagnostic {
  std::vector<EntitySpan> spans;
  std::optional<NestingRelation> relation;
  std::string message;
};

/// Dataset lint: every same-type partial overlap, plus one entry per type
/// whose nested annotation does not survive a BIOES round trip.
std::vector<Diagnostic> validate_entity_set(const EntitySet& spans, std::size_t length);

/// Spans of one label.
EntitySet spans_of_type(const EntitySet& spans, TypeId type);

}  // namespace hetstar
