// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <string>

#include "hetstar/tensor.hpp"

namespace hetstar {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

/// Named parameters of a model. Names are unique; iteration is in name
/// order, which fixes the layout of checkpoints and optimizer state.
class ParameterStore {
 public:
  using Map = std::map<std::string, Parameter>;

  Parameter& add(const std::string& name, Tensor value, bool trainable = true);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  void zero_grad();
  std::size_t scalar_count() const;
  std::size_t size() const noexcept { return params_.size(); }

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }

 private:
  Map params_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)) for a rows x cols weight.
Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

}  // namespace hetstar
