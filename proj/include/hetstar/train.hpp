// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hetstar/corpus.hpp"
#include "hetstar/gradcheck.hpp"
#include "hetstar/model.hpp"
#include "hetstar/params.hpp"

namespace hetstar {

/// Adam with decoupled weight decay. Moment buffers are keyed by parameter
/// name.
class AdamW {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  explicit AdamW(Options options) : options_(options) {}

  /// One update of every trainable parameter from its `grad` at rate `lr`.
  void step(ParameterStore& params, double lr);
  std::size_t steps() const noexcept { return t_; }

 private:
  Options options_;
  std::size_t t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

/// Linear warm-up over the first `warmup` steps, then linear decay to zero
/// at `total`. `step` is 0-based.
double warmup_decay_lr(double peak, std::size_t step, std::size_t warmup, std::size_t total);

/// Scales every gradient so that their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_gradients(ParameterStore& params, double max_norm);

struct TrainResult {
  std::vector<double> step_losses;   // one per sentence update, in order
  std::vector<double> epoch_losses;  // summed per epoch
  std::vector<double> epoch_train_f1;
  std::size_t epochs_run = 0;
};

/// Called after every epoch with its index and training F1; returning false
/// stops training.
using EpochCallback = std::function<bool(std::size_t epoch, double loss, double train_f1)>;

/// One sentence per step in a seeded shuffled order. Throws TrainError with
/// the sentence index on a non-finite loss or gradient.
TrainResult train(Model& model, const std::vector<Example>& data, const EpochCallback& on_epoch = {});

/// Five-token instance with nested gold entities over the configured types.
Example gradient_check_instance(const Config& config);

/// grad_check of the full model loss on gradient_check_instance(config),
/// with parameters drawn from config.seed.
GradCheckResult check_model_gradients(const Config& config, const GradCheckOptions& options = {});

}  // namespace hetstar
