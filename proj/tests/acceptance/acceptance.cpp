// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hetstar/bench.hpp"
#include "hetstar/checkpoint.hpp"
#include "hetstar/corpus.hpp"
#include "hetstar/entities.hpp"
#include "hetstar/labeler.hpp"
#include "hetstar/metrics.hpp"
#include "hetstar/model.hpp"
#include "hetstar/stargraph.hpp"
#include "hetstar/train.hpp"

using namespace hetstar;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Tensor uniform(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Tensor t({r, c});
  for (auto& v : t.data()) v = d(rng);
  return t;
}

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

// ---- 1. CRF against exhaustive enumeration ---------------------------------

std::vector<BioesTag> nth_sequence(std::size_t code, std::size_t L) {
  std::vector<BioesTag> tags(L);
  for (auto& t : tags) {
    t = static_cast<BioesTag>(code % kNumTags);
    code /= kNumTags;
  }
  return tags;
}

double oracle_score(const Tensor& P, const Tensor& A, const std::vector<BioesTag>& y) {
  auto id = [](BioesTag t) { return static_cast<std::size_t>(t); };
  double s = A(kStartState, id(y.front())) + A(id(y.back()), kEndState);
  for (std::size_t i = 0; i < y.size(); ++i) s += P(i, id(y[i]));
  for (std::size_t i = 1; i < y.size(); ++i) s += A(id(y[i - 1]), id(y[i]));
  return s;
}

Outcome crf_oracle() {
  std::mt19937_64 rng(2024);
  const ConstraintMask mask = build_constraint_mask();
  double worst_logz = 0.0;
  std::size_t viterbi_mismatch = 0, tie_instances = 0;
  for (std::size_t inst = 0; inst < 200; ++inst) {
    const std::size_t L = 1 + inst % 6;
    // Every fourth instance uses small integers so that equal-score paths occur.
    const bool integral = inst % 4 == 3;
    Tensor P = uniform(L, kNumTags, rng, 3.0), A = uniform(kNumStates, kNumStates, rng, 2.0);
    if (integral) {
      for (auto& v : P.data()) v = std::round(v / 3.0);
      for (auto& v : A.data()) v = std::round(v / 2.0);
    }
    const Tensor Am = mask_transitions(A);

    std::size_t paths = 1;
    for (std::size_t i = 0; i < L; ++i) paths *= kNumTags;
    std::vector<double> scores(paths);
    std::vector<BioesTag> best;
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_count = 0;
    for (std::size_t code = 0; code < paths; ++code) {
      const auto y = nth_sequence(code, L);
      scores[code] = oracle_score(P, Am, y);
      bool legal = mask(kStartState, static_cast<std::size_t>(y.front())) &&
                   mask(static_cast<std::size_t>(y.back()), kEndState);
      for (std::size_t i = 1; i < L; ++i)
        legal = legal && mask(static_cast<std::size_t>(y[i - 1]), static_cast<std::size_t>(y[i]));
      if (!legal) continue;
      // Ties go to the smaller tag at the last position, then the one before.
      if (scores[code] > best_score) {
        best = y;
        best_score = scores[code];
        best_count = 1;
      } else if (scores[code] == best_score) {
        ++best_count;
        if (std::lexicographical_compare(y.rbegin(), y.rend(), best.rbegin(), best.rend())) best = y;
      }
    }
    const double m = *std::max_element(scores.begin(), scores.end());
    double acc = 0.0;
    for (double s : scores) acc += std::exp(s - m);
    worst_logz = std::max(worst_logz, std::abs(log_partition(P, Am) - (m + std::log(acc))));
    viterbi_mismatch += viterbi(P, Am).tags != best;
    tie_instances += best_count > 1;
  }
  return {worst_logz <= 1e-8 && viterbi_mismatch == 0,
          fmt("max |logZ - brute| = %.2e, viterbi mismatches %zu/200, instances with tied optima %zu", worst_logz,
              viterbi_mismatch, tie_instances)};
}

// ---- 2. Codec round trip -----------------------------------------------------

// Laminar family: children lie inside their parent and may share a boundary
// with it; siblings are disjoint and may touch.
void fill(std::size_t s, std::size_t e, int depth, bool has_parent, std::mt19937_64& rng, EntitySet& out) {
  if (depth == 0) return;
  std::size_t pos = s + rng() % 3;
  while (pos <= e) {
    const std::size_t len = 1 + rng() % std::min<std::size_t>(e - pos + 1, 8);
    const std::size_t cs = pos, ce = pos + len - 1;
    if (!(has_parent && cs == s && ce == e) && rng() % 5 != 0) {
      out.insert({cs, ce, 0});
      fill(cs, ce, depth - 1, true, rng, out);
    }
    pos = ce + 1 + rng() % 3;
  }
}

bool strictly_nested(const EntitySet& x) {
  for (const auto& a : x)
    for (const auto& b : x) {
      if (a == b) continue;
      const bool inside = a.start > b.start && a.end < b.end;
      const bool apart = a.end + 1 < b.start || b.end + 1 < a.start;
      const bool contains = b.start > a.start && b.end < a.end;
      if (!inside && !apart && !contains) return false;
    }
  return true;
}

EntitySet spans(std::initializer_list<std::pair<std::size_t, std::size_t>> list) {
  EntitySet out;
  for (auto [s, e] : list) out.insert({s, e, 0});
  return out;
}

Outcome codec_round_trip() {
  std::size_t checked = 0, failures = 0, shared_boundary = 0, nested = 0, strict_rejected = 0;
  std::mt19937_64 rng(11);
  while (checked < 10000) {
    const std::size_t L = 1 + rng() % 24;
    EntitySet x;
    fill(0, L - 1, 3, false, rng, x);
    if (!is_representable(x, L)) {
      strict_rejected += strictly_nested(x);
      continue;
    }
    ++checked;
    failures += decode_nested(encode_nested(x, L, 0)) != x;
    bool any_nested = false, any_shared = false;
    for (const auto& a : x)
      for (const auto& b : x)
        if (!(a == b) && b.start <= a.start && a.end <= b.end) {
          any_nested = true;
          any_shared |= a.start == b.start || a.end == b.end;
        }
    nested += any_nested;
    shared_boundary += any_shared;
  }
  std::size_t examples = 0;
  examples += encode_nested(spans({{0, 2}, {1, 1}}), 3, 0).str() == "BSE";
  examples += encode_nested(spans({{0, 3}, {0, 1}}), 4, 0).str() == "BEIE";
  examples += decode_nested(TagSequence::parse("BSE")) == spans({{0, 2}, {1, 1}});
  examples += decode_nested(TagSequence::parse("BEIE")) == spans({{0, 1}, {0, 3}});
  return {failures == 0 && examples == 4 && strict_rejected == 0 && nested > 0,
          fmt("%zu sets (%zu nested, %zu with shared boundaries), %zu round-trip failures, worked examples %zu/4, "
              "strictly nested sets rejected %zu",
              checked, nested, shared_boundary, failures, examples, strict_rejected)};
}

// ---- 3. Full-model gradient check ------------------------------------------

Outcome gradient_check() {
  Config config = Config::from_json(R"({"types":["A","B"],"depth":3,
      "dims":{"d_C":8,"d_K":8,"d_W":8,"d_P":4,"d_A":16,"d_E":16},"heads":4})");
  GradCheckOptions opt;
  opt.epsilon = 1e-5;
  opt.samples_per_param = 64;
  const GradCheckResult r = check_model_gradients(config, opt);
  // Central differences cannot resolve a derivative below a few ulps of the
  // loss divided by the step. Reported for diagnosis only.
  const double ulp = std::nextafter(r.loss, std::numeric_limits<double>::infinity()) - r.loss;
  const double floor = 4.0 * ulp / (2.0 * opt.epsilon) / 1e-4;
  double resolved_max = 0.0;
  std::size_t below = 0;
  for (const auto& e : r.entries) {
    if (std::abs(e.analytic) + std::abs(e.numeric) >= floor) {
      resolved_max = std::max(resolved_max, e.rel_error);
    } else {
      ++below;
    }
  }
  return {r.max_rel_error <= 1e-4,
          fmt("max rel error %.2e over %zu coordinates (worst %s[%zu]: analytic %.3e, numeric %.3e); "
              "coordinates with |a|+|n| >= %.1e: max %.2e, %zu below",
              r.max_rel_error, r.coordinates, r.worst_param.c_str(), r.worst_index, r.worst_analytic,
              r.worst_numeric, floor, resolved_max, below)};
}

// ---- 4. Baseline attention ranks keys identically for every query -----------

// Parameter seed at which the hybrid score ranks the same keys differently for
// two type queries.
constexpr std::uint64_t kHybridWitnessSeed = 3;

struct Draw {
  ParameterStore store;
  HeadParams head;
  ad::Tape tape;
  ad::Var Q, K;  // 2 type queries, 6 shared text keys
};

void make_draw(Draw& d, std::uint64_t seed) {
  const GraphDims dims{8, 1, 1, 1};
  std::mt19937_64 rng(seed);
  GraphParams::create(d.store, dims, rng);
  d.head = GraphParams::bind(d.store, dims).layers[0].heads[0];
  d.K = project(d.head, NodeKind::Type, NodeKind::Text, d.tape.constant(uniform(6, 8, rng)));
  d.Q = project(d.head, NodeKind::Type, NodeKind::Type, d.tape.constant(uniform(2, 8, rng)));
}

std::vector<double> row_scores(const Draw& d, std::size_t q, const std::function<double(ad::Var, ad::Var)>& f) {
  std::vector<double> s;
  for (std::size_t j = 0; j < 6; ++j) s.push_back(f(ad::gather_rows(d.Q, {q}), ad::gather_rows(d.K, {j})));
  return s;
}

Outcome baseline_pathology() {
  std::size_t identical = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Draw d;
    make_draw(d, 1000 + seed);
    std::mt19937_64 rng(seed);
    const Tensor a = uniform(1, 2 * d.K.cols(), rng);
    auto baseline = [&](ad::Var q, ad::Var k) { return baseline_gat_score(q.value(), k.value(), a); };
    identical += argsort(row_scores(d, 0, baseline)) == argsort(row_scores(d, 1, baseline));
  }
  Draw w;
  make_draw(w, kHybridWitnessSeed);
  auto hybrid = [&](ad::Var q, ad::Var k) { return hybrid_score(w.head, q, k).value().item(); };
  const bool witness = argsort(row_scores(w, 0, hybrid)) != argsort(row_scores(w, 1, hybrid));
  return {identical == 100 && witness,
          fmt("baseline identical key orderings %zu/100; hybrid witness (seed %llu) orders differ: %s", identical,
              static_cast<unsigned long long>(kHybridWitnessSeed), witness ? "yes" : "no")};
}

// ---- 5. Linear attention cost ------------------------------------------------

Outcome complexity() {
  bool counts_ok = count_attention_pairs(build_topology(5, 2, 1)).pairs == 33;
  for (std::size_t n : {8u, 16u, 32u, 64u}) {
    const Topology t = build_topology(n, 3, 1);
    std::size_t enumerated = 0;
    for (const auto& l : t.text_neighbors) enumerated += l.size();
    for (const auto& l : t.type_neighbors) enumerated += l.size();
    counts_ok = counts_ok && count_attention_pairs(t).pairs == enumerated;
  }
  bool affine = true;
  const std::size_t step = count_attention_pairs(build_topology(9, 3, 1)).pairs -
                           count_attention_pairs(build_topology(8, 3, 1)).pairs;
  for (std::size_t n = 9; n <= 64; ++n)
    affine = affine && count_attention_pairs(build_topology(n, 3, 1)).pairs -
                               count_attention_pairs(build_topology(n - 1, 3, 1)).pairs ==
                           step;

  Config config;
  config.types = {"T0", "T1", "T2"};
  config.heads = 4;
  config.depth = 3;
  config.window = 1;
  const auto rows = bench(config, {128, 1024}, 5);
  const double ratio = rows[1].median_ms / rows[0].median_ms;
  return {counts_ok && affine && ratio < 12.0,
          fmt("pair counts match enumeration: %s; first difference constant (%zu per token): %s; "
              "forward %.1f ms at n=128, %.1f ms at n=1024, ratio %.2f",
              counts_ok ? "yes" : "no", step, affine ? "yes" : "no", rows[0].median_ms, rows[1].median_ms, ratio)};
}

// ---- 6. Synthetic learning ---------------------------------------------------

GrammarSpec learning_grammar(std::size_t sentences, std::uint64_t seed) {
  GrammarSpec spec;
  spec.num_types = 3;
  spec.p_nst = 0.25;
  spec.p_ndt = 0.25;
  spec.p_me = 0.2;
  spec.max_depth = 3;
  spec.sentences = sentences;
  spec.seed = seed;
  return spec;
}

Outcome synthetic_learning() {
  const auto train_set = generate_corpus(learning_grammar(32, 7));
  const auto held = generate_corpus(learning_grammar(200, 1007));
  Config config;
  config.types = learning_grammar(32, 7).types();
  config.epochs = 300;
  Vocabulary vocab;
  std::vector<Sentence> sentences;
  for (const auto& ex : train_set) sentences.push_back(ex.sentence);
  vocab.extend(sentences);
  Model model(config, vocab);
  std::size_t first_perfect = 0;
  train(model, train_set, [&](std::size_t epoch, double, double f1) {
    if (f1 >= 1.0 && first_perfect == 0) first_perfect = epoch + 1;
    return true;
  });
  const EvalReport tr = evaluate(model, train_set);
  const EvalReport ho = evaluate(model, held);
  const double nst = ho.per_relation[static_cast<std::size_t>(RelationRow::NST)].recall();
  const double ndt = ho.per_relation[static_cast<std::size_t>(RelationRow::NDT)].recall();
  const double me = ho.per_relation[static_cast<std::size_t>(RelationRow::ME)].recall();
  return {first_perfect > 0 && ho.micro.f1() >= 0.8 && nst > 0 && ndt > 0 && me > 0,
          fmt("training F1 first 1.0 at epoch %zu (final %.3f); held-out micro-F1 %.3f; recall NST %.3f, NDT "
              "%.3f, ME %.3f",
              first_perfect, tr.micro.f1(), ho.micro.f1(), nst, ndt, me)};
}

// ---- 7. Determinism and checkpoints ------------------------------------------

Outcome determinism() {
  GrammarSpec spec = learning_grammar(12, 21);
  spec.num_types = 2;
  const auto data = generate_corpus(spec);
  Config config = Config::from_json(R"({"dims":{"d_C":8,"d_K":8,"d_W":8,"d_P":4,"d_A":16,"d_E":16},
      "heads":2,"epochs":4,"seed":5})");
  config.types = spec.types();
  Vocabulary vocab;
  std::vector<Sentence> sentences;
  for (const auto& ex : data) sentences.push_back(ex.sentence);
  vocab.extend(sentences);

  Model first(config, vocab), second(config, vocab);
  const TrainResult a = train(first, data), b = train(second, data);
  bool identical = a.step_losses.size() == b.step_losses.size() && !a.step_losses.empty();
  for (std::size_t i = 0; identical && i < a.step_losses.size(); ++i)
    identical = std::bit_cast<std::uint64_t>(a.step_losses[i]) == std::bit_cast<std::uint64_t>(b.step_losses[i]);

  const Model restored = load_checkpoint(save_checkpoint(first));
  std::size_t same = 0;
  for (const auto& ex : data) same += restored.predict(ex.sentence).entities == first.predict(ex.sentence).entities;
  return {identical && same == data.size(),
          fmt("%zu-step loss traces bit-identical: %s; checkpoint predictions equal on %zu/%zu sentences",
              a.step_losses.size(), identical ? "yes" : "no", same, data.size())};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"crf-oracle", 10, crf_oracle},
      {"codec-round-trip", 5, codec_round_trip},
      {"gradient-check", 60, gradient_check},
      {"baseline-pathology", 0, baseline_pathology},
      {"linear-complexity", 0, complexity},
      {"synthetic-learning", 600, synthetic_learning},
      {"determinism", 0, determinism},
  };
  int failed = 0;
  int index = 1;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    const bool in_time = c.budget_s == 0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %d %s: %s; %.2f s%s\n", pass ? "PASS" : "FAIL", index++, c.name, o.detail.c_str(), secs,
                in_time ? "" : fmt(" (budget %.0f s)", c.budget_s).c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
