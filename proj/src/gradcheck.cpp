// SPDX-License-Identifier: Apache-2.0
#include "hetstar/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "hetstar/errors.hpp"

namespace hetstar {

namespace {

double evaluate(const LossFn& loss) {
  ad::Tape tape(false);
  return loss(tape).value().item();
}

}  // namespace

GradCheckResult grad_check(const LossFn& loss, ParameterStore& params, const GradCheckOptions& options) {
  if (options.epsilon < 1e-6 || options.epsilon > 1e-4) {
    throw ContractError("grad_check epsilon must lie in [1e-6, 1e-4]");
  }
  const double first = evaluate(loss);
  const double second = evaluate(loss);
  if (first != second) throw DeterminismError("loss function returned different values for identical inputs");

  params.zero_grad();
  {
    ad::Tape tape(true);
    ad::Var l = loss(tape);
    tape.backward(l);
    for (auto [param, grad] : tape.parameter_gradients()) params.get(param->name).grad.mat() += grad->mat();
  }

  GradCheckResult result;
  result.loss = first;
  std::mt19937_64 rng(options.seed);
  const double eps = options.epsilon;
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.samples_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.samples_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double saved = p.value[i];
      p.value[i] = saved + eps;
      const double up = p.value[i];
      const double plus = evaluate(loss);
      p.value[i] = saved - eps;
      const double down = p.value[i];
      const double minus = evaluate(loss);
      p.value[i] = saved;
      // Divide by the step actually taken, not the nominal 2 * eps.
      const double numeric = (plus - minus) / (up - down);
      const double analytic = p.grad[i];
      const double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++result.coordinates;
      result.entries.push_back({name, i, analytic, numeric, rel});
      if (rel > result.max_rel_error || result.worst_param.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        if (rel >= result.max_rel_error) {
          result.worst_param = name;
          result.worst_index = i;
          result.worst_analytic = analytic;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace hetstar
