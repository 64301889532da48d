// SPDX-License-Identifier: Apache-2.0
#include "hetstar/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hetstar/errors.hpp"
#include "hetstar/metrics.hpp"

namespace hetstar {

void AdamW::step(ParameterStore& params, double lr) {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    auto [it, fresh] = moments_.try_emplace(name);
    if (fresh) it->second = {Tensor(p.value.shape()), Tensor(p.value.shape())};
    auto& [m, v] = it->second;
    const bool has_grad = p.grad.same_shape(p.value);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = has_grad ? p.grad[i] : 0.0;
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + options_.eps);
      p.value[i] -= lr * (update + options_.weight_decay * p.value[i]);
    }
  }
}

double warmup_decay_lr(double peak, std::size_t step, std::size_t warmup, std::size_t total) {
  if (step >= total) return 0.0;
  if (step < warmup) return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
  return peak * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

double clip_gradients(ParameterStore& params, double max_norm) {
  double sq = 0.0;
  for (auto& [_, p] : params)
    for (double g : p.grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double k = max_norm / norm;
    for (auto& [_, p] : params)
      for (double& g : p.grad.data()) g *= k;
  }
  return norm;
}

TrainResult train(Model& model, const std::vector<Example>& data, const EpochCallback& on_epoch) {
  if (data.empty()) throw DataError("training set is empty");
  const Config& cfg = model.config();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!validate_entity_set(data[i].entities, data[i].sentence.tokens.size()).empty()) {
      throw TrainError(i, "gold entities fail the representability lint");
    }
  }
  ParameterStore& params = model.params();
  AdamW opt({0.9, 0.999, 1e-8, cfg.weight_decay});
  const std::size_t total = cfg.epochs * data.size();
  const auto warmup = static_cast<std::size_t>(std::llround(cfg.warmup_fraction * static_cast<double>(total)));
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const Example& ex = data[idx];
      ad::Tape tape;
      const ad::Var loss = model.loss(tape, ex.sentence, ex.entities);
      const double value = loss.value().item();
      if (!std::isfinite(value)) throw TrainError(idx, "non-finite loss");
      tape.backward(loss);
      params.zero_grad();
      for (const auto& [p, g] : tape.parameter_gradients()) params.get(p->name).grad = *g;
      if (!std::isfinite(clip_gradients(params, cfg.clip_norm))) throw TrainError(idx, "non-finite gradient");
      opt.step(params, warmup_decay_lr(cfg.learning_rate, step, warmup, total));
      ++step;
      result.step_losses.push_back(value);
      epoch_loss += value;
    }
    const double f1 = evaluate(model, data).micro.f1();
    result.epoch_losses.push_back(epoch_loss);
    result.epoch_train_f1.push_back(f1);
    result.epochs_run = epoch + 1;
    const bool keep_going = on_epoch ? on_epoch(epoch, epoch_loss, f1) : true;
    if (!keep_going || (cfg.early_stop && f1 >= 1.0)) break;
  }
  return result;
}

Example gradient_check_instance(const Config& config) {
  Example ex;
  ex.sentence.tokens = {"The", "p53", "gene", "binds", "DNA"};
  ex.sentence.pos = {"DT", "NN", "NN", "VB", "NN"};
  ex.entities = {{1, 2, 0}, {1, 1, 0}, {4, 4, 0}};
  if (config.types.size() > 1) {
    ex.entities.insert({1, 1, 1});  // multi-label with (1, 1, 0)
    ex.entities.insert({0, 2, 1});  // contains the type-0 spans
  }
  return ex;
}

GradCheckResult check_model_gradients(const Config& config, const GradCheckOptions& options) {
  const Example ex = gradient_check_instance(config);
  Vocabulary vocab;
  vocab.extend({ex.sentence});
  Model model(config, vocab);
  const LossFn loss = [&](ad::Tape& tape) { return model.loss(tape, ex.sentence, ex.entities); };
  return grad_check(loss, model.params(), options);
}

}  // namespace hetstar
