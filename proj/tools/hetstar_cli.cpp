// SPDX-License-Identifier: Apache-2.0
//
// hetstar: generate-data | train | eval | predict | bench | gradcheck
//
// Failures print one JSON line {"error": "<kind>", "message": "..."} on
// stderr and exit with status 1 (2 for usage errors).
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "hetstar/bench.hpp"
#include "hetstar/checkpoint.hpp"
#include "hetstar/corpus.hpp"
#include "hetstar/errors.hpp"
#include "hetstar/metrics.hpp"
#include "hetstar/model.hpp"
#include "hetstar/train.hpp"

namespace {

using json = nlohmann::json;
using namespace hetstar;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

std::vector<Example> read_data(const std::string& path, std::vector<std::string>& types, bool extend) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  return read_jsonl(in, types, extend);
}

int fail(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested named-entity recognition over a heterogeneous star graph"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("generate-data", "Write a synthetic nested-entity corpus as JSON lines");
  std::string spec_path, out_path;
  gen->add_option("--spec", spec_path, "Grammar spec (JSON)")->required();
  gen->add_option("--out", out_path, "Output JSON-lines file")->required();
  gen->add_option("--seed", seed, "Override the spec seed");

  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  std::string config_path, data_path, ckpt_path, trace_path;
  tr->add_option("--config", config_path, "Model and optimizer config (JSON)")->required();
  tr->add_option("--data", data_path, "Training data (JSON lines)")->required();
  tr->add_option("--out", ckpt_path, "Checkpoint to write")->required();
  tr->add_option("--trace", trace_path, "Write the per-step loss trace here");
  tr->add_option("--seed", seed, "Override the config seed");

  auto* ev = app.add_subcommand("eval", "Score a checkpoint against labeled data");
  bool per_type = false, per_relation = false;
  ev->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  ev->add_option("--data", data_path, "Labeled data (JSON lines)")->required();
  ev->add_flag("--per-type", per_type, "Add per-type rows");
  ev->add_flag("--per-relation", per_relation, "Add flat/NST/NDT/ME rows");
  ev->add_option("--seed", seed, "Accepted for uniformity; evaluation is deterministic");

  auto* pr = app.add_subcommand("predict", "Annotate sentences with a checkpoint");
  std::string in_path;
  pr->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  pr->add_option("--in", in_path, "Sentences (JSON lines; entities ignored)")->required();
  pr->add_option("--out", out_path, "Annotated output (JSON lines)")->required();
  pr->add_option("--seed", seed, "Accepted for uniformity; prediction is deterministic");

  auto* be = app.add_subcommand("bench", "Time the forward pass against sentence length");
  std::vector<std::size_t> sizes;
  std::size_t repeats = 5;
  be->add_option("--config", config_path, "Model config (JSON)")->required();
  be->add_option("--sizes", sizes, "Ascending sentence lengths")->required()->delimiter(',');
  be->add_option("--repeats", repeats, "Timed runs per size (median reported)")->check(CLI::PositiveNumber);
  be->add_option("--seed", seed, "Seed for the synthetic sentences");

  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  double eps = 1e-5;
  std::size_t samples = 64;
  gc->add_option("--config", config_path, "Model config (JSON)")->required();
  gc->add_option("--eps", eps, "Central-difference step");
  gc->add_option("--samples", samples, "Coordinates sampled per parameter");
  gc->add_option("--seed", seed, "Override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << std::endl;
    return 2;
  }

  try {
    if (*gen) {
      GrammarSpec spec = GrammarSpec::from_json(read_file(spec_path));
      if (seed) spec.seed = *seed;
      const auto corpus = generate_corpus(spec);
      auto out = open_out(out_path);
      write_jsonl(out, corpus, spec.types());
      std::cout << json{{"sentences", corpus.size()}, {"seed", spec.seed}}.dump() << std::endl;
    } else if (*tr) {
      Config config = Config::from_json(read_file(config_path));
      if (seed) config.seed = *seed;
      const bool derive_types = config.types.empty();
      const auto data = read_data(data_path, config.types, derive_types);
      config.validate();
      Vocabulary vocab;
      std::vector<Sentence> sentences;
      for (const auto& ex : data) sentences.push_back(ex.sentence);
      vocab.extend(sentences);
      Model model(config, vocab);
      const auto t0 = std::chrono::steady_clock::now();
      const TrainResult r = train(model, data);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      save_checkpoint_file(model, ckpt_path);
      if (!trace_path.empty()) {
        auto out = open_out(trace_path);
        out.precision(17);
        for (double v : r.step_losses) out << v << '\n';
      }
      std::cout << json{{"epochs", r.epochs_run},
                        {"final_epoch_loss", r.epoch_losses.back()},
                        {"train_f1", r.epoch_train_f1.back()},
                        {"seconds", secs},
                        {"seed", config.seed}}
                       .dump()
                << std::endl;
    } else if (*ev) {
      const Model model = load_checkpoint_file(ckpt_path);
      std::vector<std::string> types = model.config().types;
      const auto data = read_data(data_path, types, false);
      std::cout << report_json(evaluate(model, data), types, per_type, per_relation) << std::endl;
    } else if (*pr) {
      const Model model = load_checkpoint_file(ckpt_path);
      std::vector<std::string> types = model.config().types;
      auto data = read_data(in_path, types, true);
      for (auto& ex : data) ex.entities = model.predict(ex.sentence).entities;
      auto out = open_out(out_path);
      write_jsonl(out, data, model.config().types);
    } else if (*be) {
      Config config = Config::from_json(read_file(config_path));
      config.validate();
      std::cout << bench_csv(bench(config, sizes, repeats, seed.value_or(0))) << std::flush;
    } else if (*gc) {
      Config config = Config::from_json(read_file(config_path));
      if (seed) config.seed = *seed;
      GradCheckOptions opt;
      opt.epsilon = eps;
      opt.samples_per_param = samples;
      opt.seed = config.seed;
      const auto t0 = std::chrono::steady_clock::now();
      const GradCheckResult r = check_model_gradients(config, opt);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << json{{"max_rel_error", r.max_rel_error},
                        {"coordinates", r.coordinates},
                        {"worst_param", r.worst_param},
                        {"worst_index", r.worst_index},
                        {"worst_analytic", r.worst_analytic},
                        {"worst_numeric", r.worst_numeric},
                        {"seconds", secs}}
                       .dump()
                << std::endl;
    }
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
