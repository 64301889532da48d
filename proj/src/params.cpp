// SPDX-License-Identifier: Apache-2.0
#include "hetstar/params.hpp"

#include <cmath>

#include "hetstar/errors.hpp"

namespace hetstar {

Parameter& ParameterStore::add(const std::string& name, Tensor value, bool trainable) {
  if (params_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  Tensor grad(value.shape());
  auto [it, ok] = params_.emplace(name, Parameter{name, std::move(value), std::move(grad), trainable});
  return it->second;
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t({rows, cols});
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace hetstar
