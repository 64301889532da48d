// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hetstar/autodiff.hpp"
#include "hetstar/params.hpp"

namespace hetstar {

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Coordinates sampled per parameter; parameters with fewer are checked in full.
  std::size_t samples_per_param = 64;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckResult {
  double loss = 0.0;  // at the unperturbed parameters
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  std::vector<GradCheckEntry> entries;  // one per checked coordinate, in check order
};

using LossFn = std::function<ad::Var(ad::Tape&)>;

/// Compares backward() against central differences on every trainable
/// parameter in `params`. Values are perturbed in place and restored.
/// The relative error per coordinate is |a - n| / max(1e-8, |a| + |n|).
GradCheckResult grad_check(const LossFn& loss, ParameterStore& params, const GradCheckOptions& options = {});

}  // namespace hetstar
