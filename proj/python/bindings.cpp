// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hetstar/checkpoint.hpp"
#include "hetstar/corpus.hpp"
#include "hetstar/errors.hpp"
#include "hetstar/labeler.hpp"
#include "hetstar/metrics.hpp"
#include "hetstar/stargraph.hpp"
#include "hetstar/train.hpp"

namespace py = pybind11;
using namespace hetstar;

namespace {

using Span = std::tuple<std::size_t, std::size_t>;

Tensor to_tensor(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array, got " + std::to_string(a.ndim()) + " dimensions");
  const auto r = static_cast<std::size_t>(a.shape(0)), c = static_cast<std::size_t>(a.shape(1));
  return Tensor({r, c}, std::vector<double>(a.data(), a.data() + r * c));
}

py::array_t<double> to_array(const Tensor& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

EntitySet to_set(const std::vector<Span>& spans, TypeId type) {
  EntitySet out;
  for (auto [s, e] : spans) out.insert({s, e, type});
  return out;
}

std::vector<Span> to_spans(const EntitySet& set) {
  std::vector<Span> out;
  for (const auto& s : set) out.emplace_back(s.start, s.end);
  return out;
}

std::vector<Example> parse_jsonl(const std::string& text, std::vector<std::string>& types, bool extend) {
  std::istringstream in(text);
  return read_jsonl(in, types, extend);
}

// Owns a trained or restored model for the Python side.
class PyModel {
 public:
  explicit PyModel(Model m) : model_(std::move(m)) {}

  static PyModel fit(const std::string& config_json, const std::string& jsonl) {
    Config config = Config::from_json(config_json);
    const bool derive = config.types.empty();
    const auto data = parse_jsonl(jsonl, config.types, derive);
    config.validate();
    Vocabulary vocab;
    std::vector<Sentence> sentences;
    for (const auto& ex : data) sentences.push_back(ex.sentence);
    vocab.extend(sentences);
    PyModel out(Model(config, vocab));
    out.losses_ = train(out.model_, data).epoch_losses;
    return out;
  }

  std::vector<std::tuple<std::size_t, std::size_t, std::string>> predict(const std::vector<std::string>& tokens) const {
    std::vector<std::tuple<std::size_t, std::size_t, std::string>> out;
    for (const auto& s : model_.predict({tokens, {}}).entities) out.emplace_back(s.start, s.end, model_.config().types[s.label]);
    return out;
  }

  double micro_f1(const std::string& jsonl) const {
    std::vector<std::string> types = model_.config().types;
    return evaluate(model_, parse_jsonl(jsonl, types, false)).micro.f1();
  }

  std::vector<std::string> types() const { return model_.config().types; }
  const std::vector<double>& epoch_losses() const { return losses_; }
  std::string checkpoint() const { return save_checkpoint(model_); }

 private:
  Model model_;
  std::vector<double> losses_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nested named-entity recognition with a heterogeneous star graph.";

  py::register_exception<Error>(m, "HetstarError", PyExc_ValueError);

  m.def(
      "encode_nested",
      [](const std::vector<Span>& spans, std::size_t length) { return encode_nested(to_set(spans, 0), length, 0).str(); },
      py::arg("spans"), py::arg("length"), "Tag string such as 'BSE' for one type's spans.");
  m.def(
      "decode_nested", [](const std::string& tags) { return to_spans(decode_nested(TagSequence::parse(tags))); },
      py::arg("tags"));
  m.def(
      "is_representable",
      [](const std::vector<Span>& spans, std::size_t length) { return is_representable(to_set(spans, 0), length); },
      py::arg("spans"), py::arg("length"));
  m.def(
      "classify_pair",
      [](Span a, Span b, std::size_t length) {
        return std::string(to_string(
            classify_pair({std::get<0>(a), std::get<1>(a), 0}, {std::get<0>(b), std::get<1>(b), 0}, length)));
      },
      py::arg("a"), py::arg("b"), py::arg("length"), "Relation of two same-type spans.");

  m.def(
      "mask_transitions", [](const py::array_t<double>& A) { return to_array(mask_transitions(to_tensor(A))); },
      py::arg("A"));
  m.def(
      "log_partition",
      [](const py::array_t<double>& P, const py::array_t<double>& A) {
        return log_partition(to_tensor(P), mask_transitions(to_tensor(A)));
      },
      py::arg("P"), py::arg("A"), "A is the raw 7 x 7 transition matrix; the constraint mask is applied here.");
  m.def(
      "viterbi",
      [](const py::array_t<double>& P, const py::array_t<double>& A) {
        const ViterbiResult r = viterbi(to_tensor(P), mask_transitions(to_tensor(A)));
        return py::make_tuple(TagSequence{r.tags, 0}.str(), r.score);
      },
      py::arg("P"), py::arg("A"));

  m.def(
      "count_attention_pairs",
      [](std::size_t n, std::size_t c, std::size_t k) {
        const PairCount p = count_attention_pairs(build_topology(n, c, k));
        return py::make_tuple(p.pairs, p.formula);
      },
      py::arg("n"), py::arg("c"), py::arg("k"));

  m.def(
      "generate_corpus",
      [](const std::string& spec_json) {
        const GrammarSpec spec = GrammarSpec::from_json(spec_json);
        std::ostringstream out;
        write_jsonl(out, generate_corpus(spec), spec.types());
        return out.str();
      },
      py::arg("spec_json"), "JSON-lines corpus for a grammar spec.");

  m.def(
      "gradient_check",
      [](const std::string& config_json, double epsilon, std::size_t samples) {
        GradCheckOptions opt;
        opt.epsilon = epsilon;
        opt.samples_per_param = samples;
        const GradCheckResult r = check_model_gradients(Config::from_json(config_json), opt);
        py::dict d;
        d["max_rel_error"] = r.max_rel_error;
        d["coordinates"] = r.coordinates;
        d["worst_param"] = r.worst_param;
        return d;
      },
      py::arg("config_json"), py::arg("epsilon") = 1e-5, py::arg("samples") = 64);

  py::class_<PyModel>(m, "Model")
      .def_static("fit", &PyModel::fit, py::arg("config_json"), py::arg("jsonl"),
                  py::call_guard<py::gil_scoped_release>())
      .def_static(
          "from_checkpoint", [](const std::string& doc) { return PyModel(load_checkpoint(doc)); }, py::arg("document"))
      .def("predict", &PyModel::predict, py::arg("tokens"), "Entities as (start, end, type) with inclusive ends.")
      .def("micro_f1", &PyModel::micro_f1, py::arg("jsonl"))
      .def("checkpoint", &PyModel::checkpoint)
      .def_property_readonly("types", &PyModel::types)
      .def_property_readonly("epoch_losses", &PyModel::epoch_losses);
}
