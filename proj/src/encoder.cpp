// SPDX-License-Identifier: Apache-2.0
#include "hetstar/encoder.hpp"

#include <sstream>

#include "hetstar/errors.hpp"

namespace hetstar {

namespace {

const std::string kPadEntry = "<pad>";
const std::string kUnkEntry = "<unk>";
const std::string kNullEntry = "<null>";

Tensor zero_row(std::size_t n) { return Tensor({1, n}); }

}  // namespace

Vocabulary::Vocabulary() {
  for (auto [list, index] : {std::pair{&tokens_, &token_index_}, std::pair{&chars_, &char_index_},
                              std::pair{&pos_, &pos_index_}}) {
    add(*list, *index, kPadEntry);
    add(*list, *index, kUnkEntry);
  }
  add(pos_, pos_index_, kNullEntry);
}

void Vocabulary::add(std::vector<std::string>& list, std::unordered_map<std::string, std::size_t>& index,
                     const std::string& entry) {
  if (index.emplace(entry, list.size()).second) list.push_back(entry);
}

void Vocabulary::extend(const std::vector<Sentence>& sentences) {
  for (const auto& s : sentences) {
    for (const auto& tok : s.tokens) {
      add(tokens_, token_index_, tok);
      for (unsigned char c : tok) add(chars_, char_index_, std::string(1, static_cast<char>(c)));
    }
    for (const auto& tag : s.pos) add(pos_, pos_index_, tag);
  }
}

std::size_t Vocabulary::token_id(const std::string& token) const {
  auto it = token_index_.find(token);
  return it == token_index_.end() ? kUnk : it->second;
}

std::size_t Vocabulary::char_id(unsigned char c) const {
  auto it = char_index_.find(std::string(1, static_cast<char>(c)));
  return it == char_index_.end() ? kUnk : it->second;
}

std::size_t Vocabulary::pos_id(const std::string& tag) const {
  auto it = pos_index_.find(tag);
  return it == pos_index_.end() ? kUnk : it->second;
}

Vocabulary Vocabulary::from_lists(std::vector<std::string> tokens, std::vector<std::string> chars,
                                  std::vector<std::string> pos) {
  auto reserved_ok = [](const std::vector<std::string>& l) {
    return l.size() >= 2 && l[kPad] == kPadEntry && l[kUnk] == kUnkEntry;
  };
  if (!reserved_ok(tokens) || !reserved_ok(chars) || !reserved_ok(pos) || pos.size() < 3 ||
      pos[kNullPos] != kNullEntry) {
    throw DataError("vocabulary lists lack the reserved entries");
  }
  Vocabulary v;
  v.tokens_.clear();
  v.chars_.clear();
  v.pos_.clear();
  v.token_index_.clear();
  v.char_index_.clear();
  v.pos_index_.clear();
  for (auto& t : tokens) add(v.tokens_, v.token_index_, t);
  for (auto& c : chars) add(v.chars_, v.char_index_, c);
  for (auto& p : pos) add(v.pos_, v.pos_index_, p);
  if (v.tokens_.size() != tokens.size() || v.chars_.size() != chars.size() || v.pos_.size() != pos.size()) {
    throw DataError("vocabulary lists contain duplicates");
  }
  return v;
}

EncodedSentence encode_sentence(const Vocabulary& vocab, const Sentence& sentence) {
  if (sentence.tokens.empty()) throw DataError("empty sentence");
  if (!sentence.pos.empty() && sentence.pos.size() != sentence.tokens.size()) {
    throw DataError("pos has " + std::to_string(sentence.pos.size()) + " tags for " +
                    std::to_string(sentence.tokens.size()) + " tokens");
  }
  EncodedSentence out;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const std::string& tok = sentence.tokens[i];
    out.token_ids.push_back(vocab.token_id(tok));
    std::vector<std::size_t> chars;
    for (unsigned char c : tok) chars.push_back(vocab.char_id(c));
    if (chars.empty()) chars.push_back(Vocabulary::kPad);
    out.char_ids.push_back(std::move(chars));
    out.pos_ids.push_back(sentence.pos.empty() ? Vocabulary::kNullPos : vocab.pos_id(sentence.pos[i]));
  }
  return out;
}

void GruParams::create(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                       std::size_t hidden_dim, std::mt19937_64& rng) {
  for (const char* gate : {"r", "z", "n"}) {
    store.add(prefix + ".W_x" + gate, glorot_uniform(hidden_dim, input_dim, rng));
    store.add(prefix + ".W_h" + gate, glorot_uniform(hidden_dim, hidden_dim, rng));
    store.add(prefix + ".b_x" + gate, Tensor({1, hidden_dim}));
    store.add(prefix + ".b_h" + gate, Tensor({1, hidden_dim}));
  }
}

GruParams GruParams::bind(const ParameterStore& store, const std::string& prefix) {
  GruParams p;
  auto get = [&](const char* name) { return &store.get(prefix + "." + name); };
  p.W_xr = get("W_xr");
  p.W_hr = get("W_hr");
  p.W_xz = get("W_xz");
  p.W_hz = get("W_hz");
  p.W_xn = get("W_xn");
  p.W_hn = get("W_hn");
  p.b_xr = get("b_xr");
  p.b_hr = get("b_hr");
  p.b_xz = get("b_xz");
  p.b_hz = get("b_hz");
  p.b_xn = get("b_xn");
  p.b_hn = get("b_hn");
  p.hidden_dim = p.W_xr->value.rows();
  p.input_dim = p.W_xr->value.cols();
  return p;
}

ad::Var gated_cell(const GruParams& p, ad::Var x, ad::Var h) {
  using namespace ad;
  if (x.cols() != p.input_dim || h.cols() != p.hidden_dim || x.rows() != h.rows()) {
    throw ShapeError("gated_cell: input " + to_string(x.value().shape()) + " and state " +
                     to_string(h.value().shape()) + " for a cell of input " + std::to_string(p.input_dim) +
                     ", hidden " + std::to_string(p.hidden_dim));
  }
  Tape& t = *x.tape();
  auto lin = [&](const Parameter* W, const Parameter* b, Var v) { return affine(v, t.param(*W), t.param(*b)); };
  Var r = sigmoid(add(lin(p.W_xr, p.b_xr, x), lin(p.W_hr, p.b_hr, h)));
  Var z = sigmoid(add(lin(p.W_xz, p.b_xz, x), lin(p.W_hz, p.b_hz, h)));
  Var n = tanh(add(lin(p.W_xn, p.b_xn, x), mul(r, lin(p.W_hn, p.b_hn, h))));
  // (1 - z) n + z h == n + z (h - n)
  return add(n, mul(z, sub(h, n)));
}

ad::Var birnn(const GruParams& fwd, const GruParams& bwd, ad::Var sequence, std::optional<ad::Var> h0) {
  using namespace ad;
  const std::size_t L = sequence.rows();
  if (L == 0) throw ContractError("birnn over an empty sequence");
  Tape& t = *sequence.tape();
  const Var init_f = h0 ? *h0 : t.constant(zero_row(fwd.hidden_dim));
  const Var init_b = h0 ? *h0 : t.constant(zero_row(bwd.hidden_dim));
  std::vector<Var> rows(L);
  for (std::size_t i = 0; i < L; ++i) rows[i] = gather_rows(sequence, {i});
  std::vector<Var> f(L), b(L);
  Var h = init_f;
  for (std::size_t i = 0; i < L; ++i) f[i] = h = gated_cell(fwd, rows[i], h);
  h = init_b;
  for (std::size_t i = L; i-- > 0;) b[i] = h = gated_cell(bwd, rows[i], h);
  return concat_cols({concat_rows(f), concat_rows(b)});
}

void EncoderParams::create(ParameterStore& store, const EncoderDims& d, const Vocabulary& vocab,
                           std::size_t num_types, std::mt19937_64& rng) {
  if (d.d_C % 2 != 0 || d.d_A % 2 != 0) throw ConfigError("d_C and d_A must be even");
  store.add("embed.char", glorot_uniform(vocab.char_count(), d.d_C, rng));
  store.add("embed.token", glorot_uniform(vocab.token_count(), d.d_K, rng));
  store.add("embed.word", glorot_uniform(vocab.token_count(), d.d_W, rng));
  store.add("embed.pos", glorot_uniform(vocab.pos_count(), d.d_P, rng));
  GruParams::create(store, "embed.char_gru.fwd", d.d_C, d.d_C / 2, rng);
  GruParams::create(store, "embed.char_gru.bwd", d.d_C, d.d_C / 2, rng);
  const std::size_t concat = d.d_K + d.d_C + d.d_W + d.d_P;
  GruParams::create(store, "embed.fuse_gru.fwd", concat, d.d_A / 2, rng);
  GruParams::create(store, "embed.fuse_gru.bwd", concat, d.d_A / 2, rng);
  store.add("nodes.text.W", glorot_uniform(d.d_E, d.d_A, rng));
  store.add("nodes.text.b", Tensor({1, d.d_E}));
  for (std::size_t t = 0; t < num_types; ++t) {
    store.add("nodes.type" + std::to_string(t) + ".W", glorot_uniform(d.d_E, d.d_A, rng));
    store.add("nodes.type" + std::to_string(t) + ".b", Tensor({1, d.d_E}));
  }
}

EncoderParams EncoderParams::bind(const ParameterStore& store, std::size_t num_types) {
  EncoderParams p;
  p.char_table = &store.get("embed.char");
  p.token_table = &store.get("embed.token");
  p.word_table = &store.get("embed.word");
  p.pos_table = &store.get("embed.pos");
  p.char_fwd = GruParams::bind(store, "embed.char_gru.fwd");
  p.char_bwd = GruParams::bind(store, "embed.char_gru.bwd");
  p.fuse_fwd = GruParams::bind(store, "embed.fuse_gru.fwd");
  p.fuse_bwd = GruParams::bind(store, "embed.fuse_gru.bwd");
  p.text_W = &store.get("nodes.text.W");
  p.text_b = &store.get("nodes.text.b");
  for (std::size_t t = 0; t < num_types; ++t) {
    p.type_W.push_back(&store.get("nodes.type" + std::to_string(t) + ".W"));
    p.type_b.push_back(&store.get("nodes.type" + std::to_string(t) + ".b"));
  }
  return p;
}

ad::Var hybrid_embed(ad::Tape& tape, const EncoderParams& p, const EncodedSentence& s) {
  using namespace ad;
  if (s.size() == 0) throw ContractError("hybrid_embed on an empty sentence");
  const Var chars = tape.param(*p.char_table);
  std::vector<Var> char_features;
  char_features.reserve(s.size());
  for (const auto& ids : s.char_ids) {
    char_features.push_back(mean_pool(birnn(p.char_fwd, p.char_bwd, gather_rows(chars, ids)), 0));
  }
  const Var K = gather_rows(tape.param(*p.token_table), s.token_ids);
  const Var W = gather_rows(tape.param(*p.word_table), s.token_ids);
  const Var P = gather_rows(tape.param(*p.pos_table), s.pos_ids);
  const Var fused_input = concat_cols({K, concat_rows(char_features), W, P});
  return birnn(p.fuse_fwd, p.fuse_bwd, fused_input);
}

ad::Var init_text_nodes(ad::Tape& tape, const EncoderParams& p, ad::Var context) {
  return ad::affine(context, tape.param(*p.text_W), tape.param(*p.text_b));
}

ad::Var init_type_nodes(ad::Tape& tape, const EncoderParams& p, ad::Var context) {
  if (p.type_W.empty()) throw ContractError("init_type_nodes needs at least one type");
  std::vector<ad::Var> rows;
  for (std::size_t t = 0; t < p.type_W.size(); ++t) {
    rows.push_back(ad::max_pool(ad::affine(context, tape.param(*p.type_W[t]), tape.param(*p.type_b[t])), 0));
  }
  return ad::concat_rows(rows);
}

std::size_t import_word_vectors(ParameterStore& store, const Vocabulary& vocab, std::istream& in) {
  Parameter& table = store.get("embed.word");
  const std::size_t d = table.value.cols();
  std::size_t set = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> values;
    double v;
    while (ls >> v) values.push_back(v);
    if (!ls.eof()) throw ParseError(line_no, "non-numeric vector entry");
    if (values.size() != d) {
      throw ParseError(line_no, "expected " + std::to_string(d) + " values, got " + std::to_string(values.size()));
    }
    const std::size_t id = vocab.token_id(token);
    if (id == Vocabulary::kUnk && token != "<unk>") continue;
    for (std::size_t c = 0; c < d; ++c) table.value(id, c) = values[c];
    ++set;
  }
  return set;
}

}  // namespace hetstar
