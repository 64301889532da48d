// SPDX-License-Identifier: Apache-2.0
#include "hetstar/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hetstar/errors.hpp"

namespace hetstar::ad {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(id_);
}

Var Tape::constant(Tensor value) { return push("constant", std::move(value), {}, nullptr); }

Var Tape::param(const Parameter& p) {
  if (auto it = param_leaves_.find(&p); it != param_leaves_.end()) return Var(this, it->second);
  Node node;
  node.op = "param";
  node.external = &p.value;
  node.param = &p;
  node.requires_grad = recording_ && p.trainable;
  nodes_.push_back(std::move(node));
  const std::size_t id = nodes_.size() - 1;
  param_leaves_.emplace(&p, id);
  return Var(this, id);
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad_ready) {
    n.grad = Tensor(value(id).shape());
    n.grad_ready = true;
  }
  return n.grad;
}

Var Tape::push(std::string_view op, Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
  Node node;
  node.op = op;
  node.value = std::move(value);
  if (recording_) {
    node.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                     [this](std::size_t i) { return nodes_[i].requires_grad; });
    if (node.requires_grad) {
      node.inputs = std::move(inputs);
      node.backward = std::move(fn);
    }
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("backward() on a Var from another tape");
  if (!recording_) throw ContractError("backward() on a non-recording tape");
  if (value(loss.id()).size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + to_string(value(loss.id()).shape()));
  }
  grad(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad_ready && n.backward) n.backward(*this, i);
  }
}

std::vector<std::pair<const Parameter*, const Tensor*>> Tape::parameter_gradients() const {
  std::vector<std::pair<const Parameter*, const Tensor*>> out;
  for (const auto& [param, id] : param_leaves_) {
    if (nodes_[id].grad_ready) out.emplace_back(param, &nodes_[id].grad);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first->name < b.first->name; });
  return out;
}

namespace {

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) throw ContractError("operands live on different tapes");
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractError("use of an unbound Var");
  return *a.tape();
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 operand, got " + to_string(t.shape()));
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                   to_string(b.shape()));
}

enum class Bcast { Same, Row, Col, Scalar };

Bcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  require_rank2(a, op);
  require_rank2(b, op);
  if (a.shape() == b.shape()) return Bcast::Same;
  if (b.rows() == 1 && b.cols() == 1) return Bcast::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::Row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Bcast::Col;
  mismatch(op, a, b);
}

double bval(const Tensor& b, Bcast k, std::size_t r, std::size_t c) {
  switch (k) {
    case Bcast::Same: return b(r, c);
    case Bcast::Row: return b(0, c);
    case Bcast::Col: return b(r, 0);
    case Bcast::Scalar: return b[0];
  }
  return 0.0;
}

double& bref(Tensor& b, Bcast k, std::size_t r, std::size_t c) {
  switch (k) {
    case Bcast::Same: return b(r, c);
    case Bcast::Row: return b(0, c);
    case Bcast::Col: return b(r, 0);
    case Bcast::Scalar: return b[0];
  }
  return b[0];
}

template <typename F>
Tensor elementwise(const Tensor& a, const Tensor& b, Bcast k, F f) {
  Tensor out(a.shape());
  const std::size_t R = a.rows(), C = a.cols();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out(r, c) = f(a(r, c), bval(b, k, r, c));
  return out;
}

template <typename F>
Tensor unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

int check_axis(int axis, const char* op) {
  if (axis != 0 && axis != 1) throw ShapeError(std::string(op) + ": axis must be 0 or 1");
  return axis;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) mismatch("matmul", av, bv);
  Tensor out({av.rows(), bv.cols()});
  out.mat().noalias() = av.mat() * bv.mat();
  const std::size_t ai = a.id(), bi = b.id();
  return t.push("matmul", std::move(out), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) t.grad(ai).mat().noalias() += g.mat() * t.value(bi).mat().transpose();
    if (t.requires_grad(bi)) t.grad(bi).mat().noalias() += t.value(ai).mat().transpose() * g.mat();
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul_nt");
  require_rank2(bv, "matmul_nt");
  if (av.cols() != bv.cols()) mismatch("matmul_nt", av, bv);
  Tensor out({av.rows(), bv.rows()});
  out.mat().noalias() = av.mat() * bv.mat().transpose();
  const std::size_t ai = a.id(), bi = b.id();
  return t.push("matmul_nt", std::move(out), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) t.grad(ai).mat().noalias() += g.mat() * t.value(bi).mat();
    if (t.requires_grad(bi)) t.grad(bi).mat().noalias() += g.mat().transpose() * t.value(ai).mat();
  });
}

Var affine(Var x, Var w, Var b) {
  Tape& t = same_tape(x, w);
  same_tape(x, b);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  require_rank2(xv, "affine");
  require_rank2(wv, "affine");
  require_rank2(bv, "affine");
  if (xv.cols() != wv.cols()) mismatch("affine", xv, wv);
  if (bv.rows() != 1 || bv.cols() != wv.rows()) mismatch("affine", wv, bv);
  Tensor out({xv.rows(), wv.rows()});
  out.mat().noalias() = xv.mat() * wv.mat().transpose();
  out.mat().rowwise() += bv.mat().row(0);
  const std::size_t xi = x.id(), wi = w.id(), bi = b.id();
  return t.push("affine", std::move(out), {xi, wi, bi}, [xi, wi, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(xi)) t.grad(xi).mat().noalias() += g.mat() * t.value(wi).mat();
    if (t.requires_grad(wi)) t.grad(wi).mat().noalias() += g.mat().transpose() * t.value(xi).mat();
    if (t.requires_grad(bi)) t.grad(bi).mat().row(0) += g.mat().colwise().sum();
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Bcast k = broadcast_kind("add", a.value(), b.value());
  Tensor out = elementwise(a.value(), b.value(), k, [](double x, double y) { return x + y; });
  const std::size_t ai = a.id(), bi = b.id();
  return t.push("add", std::move(out), {ai, bi}, [ai, bi, k](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) t.grad(ai).mat() += g.mat();
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad(bi);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) bref(gb, k, r, c) += g(r, c);
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Bcast k = broadcast_kind("sub", a.value(), b.value());
  Tensor out = elementwise(a.value(), b.value(), k, [](double x, double y) { return x - y; });
  const std::size_t ai = a.id(), bi = b.id();
  return t.push("sub", std::move(out), {ai, bi}, [ai, bi, k](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) t.grad(ai).mat() += g.mat();
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad(bi);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) bref(gb, k, r, c) -= g(r, c);
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Bcast k = broadcast_kind("mul", a.value(), b.value());
  Tensor out = elementwise(a.value(), b.value(), k, [](double x, double y) { return x * y; });
  const std::size_t ai = a.id(), bi = b.id();
  return t.push("mul", std::move(out), {ai, bi}, [ai, bi, k](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    const bool ga = t.requires_grad(ai), gb = t.requires_grad(bi);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) {
        if (ga) t.grad(ai)(r, c) += g(r, c) * bval(bv, k, r, c);
        if (gb) bref(t.grad(bi), k, r, c) += g(r, c) * av(r, c);
      }
    }
  });
}

Var scale(Var a, double k) {
  Tape& t = tape_of(a);
  Tensor out = unary(a.value(), [k](double x) { return k * x; });
  const std::size_t ai = a.id();
  return t.push("scale", std::move(out), {ai}, [ai, k](Tape& t, std::size_t self) {
    t.grad(ai).mat() += k * t.grad(self).mat();
  });
}

Var maximum(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (!a.value().same_shape(b.value())) mismatch("maximum", a.value(), b.value());
  Tensor out = elementwise(a.value(), b.value(), Bcast::Same, [](double x, double y) { return std::max(x, y); });
  const std::size_t ai = a.id(), bi = b.id();
  return t.push("maximum", std::move(out), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    for (std::size_t i = 0; i < g.size(); ++i) {
      // Ties route the gradient to the first operand.
      if (av[i] >= bv[i]) {
        if (t.requires_grad(ai)) t.grad(ai)[i] += g[i];
      } else if (t.requires_grad(bi)) {
        t.grad(bi)[i] += g[i];
      }
    }
  });
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a);
  require_rank2(a.value(), "sigmoid");
  Tensor out = unary(a.value(), [](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  const std::size_t ai = a.id();
  return t.push("sigmoid", std::move(out), {ai}, [ai](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var a) {
  Tape& t = tape_of(a);
  require_rank2(a.value(), "tanh");
  Tensor out = unary(a.value(), [](double x) { return std::tanh(x); });
  const std::size_t ai = a.id();
  return t.push("tanh", std::move(out), {ai}, [ai](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var leaky_relu(Var a, double slope) {
  Tape& t = tape_of(a);
  require_rank2(a.value(), "leaky_relu");
  Tensor out = unary(a.value(), [slope](double x) { return x >= 0 ? x : slope * x; });
  const std::size_t ai = a.id();
  return t.push("leaky_relu", std::move(out), {ai}, [ai, slope](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ai);
    Tensor& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += x[i] >= 0 ? g[i] : slope * g[i];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols of nothing");
  Tape& t = tape_of(parts.front());
  const std::size_t R = parts.front().value().rows();
  std::size_t C = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    const Tensor& v = p.value();
    require_rank2(v, "concat_cols");
    if (v.rows() != R) mismatch("concat_cols", parts.front().value(), v);
    offsets.push_back(C);
    C += v.cols();
    ids.push_back(p.id());
  }
  Tensor out({R, C});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    out.mat().middleCols(static_cast<Eigen::Index>(offsets[k]), static_cast<Eigen::Index>(v.cols())) = v.mat();
  }
  std::vector<std::size_t> inputs = ids;
  return t.push("concat_cols", std::move(out), std::move(inputs), [ids, offsets](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.requires_grad(ids[k])) continue;
      Tensor& gk = t.grad(ids[k]);
      gk.mat() += g.mat().middleCols(static_cast<Eigen::Index>(offsets[k]), static_cast<Eigen::Index>(gk.cols()));
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows of nothing");
  Tape& t = tape_of(parts.front());
  const std::size_t C = parts.front().value().cols();
  std::size_t R = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    const Tensor& v = p.value();
    require_rank2(v, "concat_rows");
    if (v.cols() != C) mismatch("concat_rows", parts.front().value(), v);
    offsets.push_back(R);
    R += v.rows();
    ids.push_back(p.id());
  }
  Tensor out({R, C});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(offsets[k] * C));
  }
  std::vector<std::size_t> inputs = ids;
  return t.push("concat_rows", std::move(out), std::move(inputs), [ids, offsets, C](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.requires_grad(ids[k])) continue;
      Tensor& gk = t.grad(ids[k]);
      const double* src = g.data().data() + offsets[k] * C;
      for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += src[i];
    }
  });
}

Var gather_rows(Var a, const std::vector<std::size_t>& rows) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  require_rank2(av, "gather_rows");
  const std::size_t C = av.cols();
  Tensor out({rows.size(), C});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= av.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[k]) + " out of range for shape " +
                       to_string(av.shape()));
    }
    std::copy_n(av.data().begin() + static_cast<std::ptrdiff_t>(rows[k] * C), C,
                out.data().begin() + static_cast<std::ptrdiff_t>(k * C));
  }
  const std::size_t ai = a.id();
  return t.push("gather_rows", std::move(out), {ai}, [ai, rows, C](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t k = 0; k < rows.size(); ++k)
      for (std::size_t c = 0; c < C; ++c) ga(rows[k], c) += g(k, c);
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  require_rank2(av, "slice_cols");
  if (begin + count > av.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for shape " + to_string(av.shape()));
  }
  Tensor out({av.rows(), count});
  out.mat() = av.mat().middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
  const std::size_t ai = a.id();
  return t.push("slice_cols", std::move(out), {ai}, [ai, begin, count](Tape& t, std::size_t self) {
    t.grad(ai).mat().middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) +=
        t.grad(self).mat();
  });
}

Var masked_softmax(Var a, const std::vector<std::uint8_t>& mask) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  require_rank2(av, "masked_softmax");
  if (!mask.empty() && mask.size() != av.size()) {
    throw ShapeError("masked_softmax: mask of length " + std::to_string(mask.size()) + " for shape " +
                     to_string(av.shape()));
  }
  const std::size_t R = av.rows(), C = av.cols();
  Tensor out({R, C});
  for (std::size_t r = 0; r < R; ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c)
      if (mask.empty() || mask[r * C + c]) m = std::max(m, av(r, c));
    if (!std::isfinite(m)) continue;  // fully masked row stays zero
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      if (mask.empty() || mask[r * C + c]) {
        out(r, c) = std::exp(av(r, c) - m);
        z += out(r, c);
      }
    }
    for (std::size_t c = 0; c < C; ++c) out(r, c) /= z;
  }
  const std::size_t ai = a.id();
  return t.push("masked_softmax", std::move(out), {ai}, [ai](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var logsumexp(Var a, int axis) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  require_rank2(av, "logsumexp");
  check_axis(axis, "logsumexp");
  const std::size_t R = av.rows(), C = av.cols();
  const std::size_t outer = axis == 1 ? R : C, inner = axis == 1 ? C : R;
  auto at = [&](std::size_t o, std::size_t i) { return axis == 1 ? av(o, i) : av(i, o); };
  Tensor out(axis == 1 ? Shape{R, 1} : Shape{1, C});
  for (std::size_t o = 0; o < outer; ++o) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inner; ++i) m = std::max(m, at(o, i));
    double z = 0.0;
    for (std::size_t i = 0; i < inner; ++i) z += std::exp(at(o, i) - m);
    out[o] = m + std::log(z);
  }
  const std::size_t ai = a.id();
  return t.push("logsumexp", std::move(out), {ai}, [ai, axis](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    const Tensor& x = t.value(ai);
    Tensor& ga = t.grad(ai);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const std::size_t o = axis == 1 ? r : c;
        ga(r, c) += g[o] * std::exp(x(r, c) - y[o]);
      }
    }
  });
}

Var max_pool(Var a, int axis) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  require_rank2(av, "max_pool");
  check_axis(axis, "max_pool");
  const std::size_t R = av.rows(), C = av.cols();
  if (R == 0 || C == 0) throw ShapeError("max_pool over an empty axis: " + to_string(av.shape()));
  const std::size_t outer = axis == 1 ? R : C, inner = axis == 1 ? C : R;
  Tensor out(axis == 1 ? Shape{R, 1} : Shape{1, C});
  std::vector<std::size_t> arg(outer, 0);
  for (std::size_t o = 0; o < outer; ++o) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inner; ++i) {
      const double v = axis == 1 ? av(o, i) : av(i, o);
      if (v > best) {
        best = v;
        arg[o] = i;
      }
    }
    out[o] = best;
  }
  const std::size_t ai = a.id();
  return t.push("max_pool", std::move(out), {ai}, [ai, axis, arg](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t o = 0; o < arg.size(); ++o) {
      if (axis == 1) ga(o, arg[o]) += g[o];
      else ga(arg[o], o) += g[o];
    }
  });
}

Var sum_axis(Var a, int axis) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  require_rank2(av, "sum_axis");
  check_axis(axis, "sum_axis");
  Tensor out(axis == 1 ? Shape{av.rows(), 1} : Shape{1, av.cols()});
  if (axis == 1) out.mat() = av.mat().rowwise().sum();
  else out.mat() = av.mat().colwise().sum();
  const std::size_t ai = a.id();
  return t.push("sum_axis", std::move(out), {ai}, [ai, axis](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g[axis == 1 ? r : c];
  });
}

Var mean_pool(Var a, int axis) {
  check_axis(axis, "mean_pool");
  const std::size_t n = axis == 1 ? a.value().cols() : a.value().rows();
  if (n == 0) throw ShapeError("mean_pool over an empty axis: " + to_string(a.value().shape()));
  return scale(sum_axis(a, axis), 1.0 / static_cast<double>(n));
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ai = a.id();
  return t.push("sum", Tensor::scalar(s), {ai}, [ai](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (auto& v : t.grad(ai).data()) v += g;
  });
}

}  // namespace hetstar::ad
