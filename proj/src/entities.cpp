// SPDX-License-Identifier: Apache-2.0
#include "hetstar/entities.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "hetstar/errors.hpp"

namespace hetstar {

std::string_view to_string(NestingRelation r) {
  switch (r) {
    case NestingRelation::Identical: return "Identical";
    case NestingRelation::ME: return "ME";
    case NestingRelation::NST: return "NST";
    case NestingRelation::NDT: return "NDT";
    case NestingRelation::OST: return "OST";
    case NestingRelation::ODT: return "ODT";
    case NestingRelation::Disjoint: return "Disjoint";
    case NestingRelation::Touching: return "Touching";
  }
  return "?";
}

char to_char(BioesTag t) { return "BIOES"[static_cast<int>(t)]; }

BioesTag tag_from_char(char c) {
  switch (c) {
    case 'B': return BioesTag::B;
    case 'I': return BioesTag::I;
    case 'O': return BioesTag::O;
    case 'E': return BioesTag::E;
    case 'S': return BioesTag::S;
    default: throw PreconditionError(std::string("not a BIOES tag: '") + c + "'");
  }
}

std::string TagSequence::str() const {
  std::string s;
  s.reserve(tags.size());
  for (BioesTag t : tags) s.push_back(to_char(t));
  return s;
}

TagSequence TagSequence::parse(std::string_view letters, TypeId type) {
  TagSequence seq;
  seq.type_id = type;
  for (char c : letters) seq.tags.push_back(tag_from_char(c));
  return seq;
}

bool transition_allowed(std::optional<BioesTag> from, std::optional<BioesTag> to) {
  using T = BioesTag;
  if (!from && !to) return false;
  // Sequences open with B, O or S.
  if (!from) return *to == T::B || *to == T::O || *to == T::S;
  // An open entity (B or I) can neither be followed by O nor by the end.
  if (!to) return *from == T::O || *from == T::E || *from == T::S;
  if (*from == T::B || *from == T::I) return *to != T::O;
  // Outside any entity, I and E have nothing to belong to.
  if (*from == T::O) return *to == T::B || *to == T::O || *to == T::S;
  return true;  // E and S may be followed by anything
}

std::optional<std::size_t> first_illegal_position(const std::vector<BioesTag>& tags) {
  std::optional<BioesTag> prev;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!transition_allowed(prev, tags[i])) return i;
    prev = tags[i];
  }
  if (!tags.empty() && !transition_allowed(prev, std::nullopt)) return tags.size();
  return std::nullopt;
}

void check_span(const EntitySpan& span, std::size_t length) {
  if (span.start > span.end || span.end >= length) {
    throw PreconditionError("span (" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                            ") is invalid for sentence length " + std::to_string(length));
  }
}

NestingRelation classify_pair(const EntitySpan& a, const EntitySpan& b, std::size_t length) {
  check_span(a, length);
  check_span(b, length);
  const bool same_label = a.label == b.label;
  if (a.start == b.start && a.end == b.end) return same_label ? NestingRelation::Identical : NestingRelation::ME;
  const bool contains = (a.start <= b.start && b.end <= a.end) || (b.start <= a.start && a.end <= b.end);
  if (contains) return same_label ? NestingRelation::NST : NestingRelation::NDT;
  if (std::max(a.start, b.start) <= std::min(a.end, b.end)) {
    return same_label ? NestingRelation::OST : NestingRelation::ODT;
  }
  if (a.end + 1 == b.start || b.end + 1 == a.start) return NestingRelation::Touching;
  return NestingRelation::Disjoint;
}

namespace {

bool partially_overlap(const EntitySpan& a, const EntitySpan& b) {
  const bool intersect = std::max(a.start, b.start) <= std::min(a.end, b.end);
  const bool contains = (a.start <= b.start && b.end <= a.end) || (b.start <= a.start && a.end <= b.end);
  return intersect && !contains;
}

std::optional<std::pair<EntitySpan, EntitySpan>> find_same_type_overlap(const EntitySet& spans) {
  for (auto i = spans.begin(); i != spans.end(); ++i) {
    for (auto j = std::next(i); j != spans.end(); ++j) {
      if (j->start > i->end) break;  // ordered by start: nothing later intersects i
      if (i->label == j->label && partially_overlap(*i, *j)) return std::make_pair(*i, *j);
    }
  }
  return std::nullopt;
}

std::string span_str(const EntitySpan& s) {
  return "(" + std::to_string(s.start) + ", " + std::to_string(s.end) + ")";
}

// Decodes one maximal run [a, b] of non-O tags.
//
// Every tag is read as a demand on the entity set: B needs a span starting
// there, E a span ending there, S a single-token span (and may also hide the
// start or the end of longer spans), I a span strictly covering it. Spans are
// paired inside-out: an E closes the innermost start that has not been used
// yet; when every start is used, the E re-uses the nearest start that keeps
// the set laminar and covers any I still waiting for an enclosing span.
// Starts left open at the end of the run close at the nearest end beyond the
// pending I tags, and remaining uncovered I tags get the tightest enclosing
// span. The result never crosses itself and re-encodes to the input run.
class SegmentDecoder {
 public:
  SegmentDecoder(const std::vector<BioesTag>& tags, std::size_t a, std::size_t b)
      : tags_(tags), a_(a), b_(b), covered_(tags.size(), false) {}

  void run(EntitySet& out, TypeId type) {
    using T = BioesTag;
    std::vector<std::size_t> open_starts;
    for (std::size_t p = a_; p <= b_; ++p) {
      if (tags_[p] == T::S) singletons_.push_back(p);
      if (tags_[p] == T::B) {
        open_starts.push_back(p);
      } else if (tags_[p] == T::E) {
        std::optional<std::size_t> s;
        if (!open_starts.empty() && admissible(open_starts.back(), p)) {
          s = open_starts.back();
          open_starts.pop_back();
        } else {
          s = reuse_start_for(p);
        }
        if (!s) throw DecodeError(p, "end tag without an admissible start");
        emit(*s, p);
      }
    }
    while (!open_starts.empty()) {
      const std::size_t s = open_starts.back();
      open_starts.pop_back();
      const auto e = end_for(s, s + 1);
      if (!e) throw DecodeError(s, "begin tag is never closed");
      emit(s, *e);
    }
    for (std::size_t q = a_; q <= b_; ++q) {
      if (tags_[q] != BioesTag::I || covered_[q]) continue;
      bool done = false;
      for (std::size_t s = q; s-- > a_ && !done;) {
        if (!is_start(s)) continue;
        if (const auto e = end_for(s, q + 1)) {
          emit(s, *e);
          done = true;
        }
      }
      if (!done) throw DecodeError(q, "inside tag without an enclosing entity");
    }
    for (std::size_t p : singletons_) out.insert({p, p, type});
    for (const auto& [s, e] : multi_) out.insert({s, e, type});
  }

 private:
  bool is_start(std::size_t p) const { return tags_[p] == BioesTag::B || tags_[p] == BioesTag::S; }
  bool is_end(std::size_t p) const { return tags_[p] == BioesTag::E || tags_[p] == BioesTag::S; }

  bool admissible(std::size_t s, std::size_t e) const {
    for (const auto& [x, y] : multi_) {
      if (x == s && y == e) return false;
      if ((s < x && x <= e && e < y) || (x < s && s <= y && y < e)) return false;
    }
    return true;
  }

  std::optional<std::size_t> first_uncovered_inside(std::size_t from, std::size_t to) const {
    for (std::size_t q = from; q < to; ++q)
      if (tags_[q] == BioesTag::I && !covered_[q]) return q;
    return std::nullopt;
  }

  std::optional<std::size_t> last_uncovered_inside(std::size_t from) const {
    for (std::size_t q = b_ + 1; q-- > from;)
      if (tags_[q] == BioesTag::I && !covered_[q]) return q;
    return std::nullopt;
  }

  // Start for an end tag at p once every explicit start is in use.
  std::optional<std::size_t> reuse_start_for(std::size_t p) const {
    const auto pending = first_uncovered_inside(a_, p);
    for (std::size_t limit : {pending.value_or(p), p}) {
      for (std::size_t s = limit; s-- > a_;)
        if (is_start(s) && admissible(s, p)) return s;
    }
    return std::nullopt;
  }

  // Nearest admissible end for start s at or after `from`, preferring ends
  // that also cover the last pending inside tag.
  std::optional<std::size_t> end_for(std::size_t s, std::size_t from) const {
    const auto last_pending = last_uncovered_inside(s + 1);
    std::optional<std::size_t> nearest;
    for (std::size_t e = from; e <= b_; ++e) {
      if (!is_end(e) || !admissible(s, e)) continue;
      if (!nearest) nearest = e;
      if (!last_pending || e > *last_pending) return e;
    }
    return nearest;
  }

  void emit(std::size_t s, std::size_t e) {
    multi_.emplace_back(s, e);
    for (std::size_t q = s + 1; q < e; ++q) covered_[q] = true;
  }

  const std::vector<BioesTag>& tags_;
  std::size_t a_, b_;
  std::vector<bool> covered_;
  std::vector<std::pair<std::size_t, std::size_t>> multi_;
  std::vector<std::size_t> singletons_;
};

}  // namespace

TagSequence encode_nested(const EntitySet& spans, std::size_t length, TypeId type) {
  for (const auto& s : spans) {
    check_span(s, length);
    if (s.label != type) {
      throw PreconditionError("span " + span_str(s) + " has label " + std::to_string(s.label) +
                              ", expected " + std::to_string(type));
    }
  }
  if (auto overlap = find_same_type_overlap(spans)) {
    throw RepresentabilityError("same-type partial overlap between " + span_str(overlap->first) + " and " +
                                span_str(overlap->second));
  }
  TagSequence seq;
  seq.type_id = type;
  seq.tags.assign(length, BioesTag::O);
  for (const auto& s : spans)
    for (std::size_t p = s.start + 1; p < s.end; ++p) seq.tags[p] = BioesTag::I;
  for (const auto& s : spans) {
    if (s.start == s.end) continue;
    seq.tags[s.start] = BioesTag::B;
    seq.tags[s.end] = BioesTag::E;
  }
  for (const auto& s : spans)
    if (s.start == s.end) seq.tags[s.start] = BioesTag::S;
  return seq;
}

EntitySet decode_nested(const TagSequence& seq) {
  const auto& tags = seq.tags;
  if (auto bad = first_illegal_position(tags)) {
    const std::size_t i = *bad;
    const std::string what = i == tags.size() ? "sequence ends inside an open entity"
                                              : std::string("illegal transition into '") + to_char(tags[i]) + "'";
    throw DecodeError(i, what);
  }
  EntitySet out;
  std::size_t p = 0;
  while (p < tags.size()) {
    if (tags[p] == BioesTag::O) {
      ++p;
      continue;
    }
    const std::size_t a = p;
    while (p < tags.size() && tags[p] != BioesTag::O) ++p;
    SegmentDecoder(tags, a, p - 1).run(out, seq.type_id);
  }
  return out;
}

bool is_representable(const EntitySet& spans, std::size_t length) {
  if (spans.empty()) return true;
  const TypeId type = spans.begin()->label;
  for (const auto& s : spans) {
    check_span(s, length);
    if (s.label != type) throw PreconditionError("is_representable expects spans of a single type");
  }
  if (find_same_type_overlap(spans)) return false;
  return decode_nested(encode_nested(spans, length, type)) == spans;
}

EntitySet spans_of_type(const EntitySet& spans, TypeId type) {
  EntitySet out;
  for (const auto& s : spans)
    if (s.label == type) out.insert(s);
  return out;
}

std::vector<Diagnostic> validate_entity_set(const EntitySet& spans, std::size_t length) {
  std::vector<Diagnostic> out;
  std::map<TypeId, EntitySet> by_type;
  for (const auto& s : spans) {
    if (s.start > s.end || s.end >= length) {
      out.push_back({{s}, std::nullopt, "span " + span_str(s) + " is out of range"});
      continue;
    }
    by_type[s.label].insert(s);
  }
  for (const auto& [type, subset] : by_type) {
    bool overlap = false;
    for (auto i = subset.begin(); i != subset.end(); ++i) {
      for (auto j = std::next(i); j != subset.end(); ++j) {
        if (partially_overlap(*i, *j)) {
          overlap = true;
          out.push_back({{*i, *j}, NestingRelation::OST, "same-type partial overlap is not supported"});
        }
      }
    }
    if (overlap) continue;
    const EntitySet decoded = decode_nested(encode_nested(subset, length, type));
    if (decoded != subset) {
      Diagnostic d;
      std::set_difference(subset.begin(), subset.end(), decoded.begin(), decoded.end(), std::back_inserter(d.spans));
      d.message = "nested annotation of type " + std::to_string(type) + " is ambiguous under BIOES";
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace hetstar
