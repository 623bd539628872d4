// Copyright 2026 The pacvi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pacvi/autodiff.h"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

#include "pacvi/errors.h"

namespace pacvi {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value in ") + what + " " +
                       t.shape_string());
  }
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a,
                                 const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       a.shape_string() + " and " + b.shape_string());
}

bool is_bias_add(const Tensor& a, const Tensor& b) {
  return a.rank() == 2 && b.rank() == 1 && a.cols() == b.size();
}

// c[n,m] += a[n,k] * b[k,m]
void gemm_nn(const double* a, const double* b, double* c, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[n,k] += g[n,m] * b[k,m]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t n,
             std::size_t m, std::size_t k) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* grow = g + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
      c[i * k + p] += acc;
    }
  }
}

// c[k,m] += a[n,k]^T * g[n,m]
void gemm_tn(const double* a, const double* g, double* c, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* grow = g + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      double* crow = c + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * grow[j];
    }
  }
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

}  // namespace

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + shape_string() +
                         " does not match data length " +
                         std::to_string(data_.size()));
  }
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor Tensor::vector(std::vector<double> data) {
  const std::size_t n = data.size();
  return Tensor({n}, std::move(data));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows() on " + shape_string());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols() on " + shape_string());
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw DimensionError("item() on non-scalar " + shape_string());
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ',';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kSquare: return "square";
    case OpKind::kSum: return "sum";
    case OpKind::kScale: return "scale";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
  }
  return "unknown";
}

const Tape::Node& Tape::at(NodeId id) const {
  if (id >= nodes_.size()) {
    throw ContractError("node id " + std::to_string(id) + " not on tape");
  }
  return nodes_[id];
}

NodeId Tape::push(Node node) {
  require_finite(node.value, op_name(node.kind));
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.kind = OpKind::kLeaf;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& x = at(a).value;
  const Tensor& y = at(b).value;
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.rows()) {
    shape_mismatch("matmul", x, y);
  }
  Tensor out({x.rows(), y.cols()});
  gemm_nn(x.data().data(), y.data().data(), out.data().data(), x.rows(),
          x.cols(), y.cols());
  Node n{OpKind::kMatmul, a, b, 0.0,
         at(a).requires_grad || at(b).requires_grad, std::move(out)};
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& x = at(a).value;
  const Tensor& y = at(b).value;
  Tensor out = x;
  if (x.shape() == y.shape()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  } else if (is_bias_add(x, y)) {
    const std::size_t cols = x.cols();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i % cols];
  } else {
    shape_mismatch("add", x, y);
  }
  Node n{OpKind::kAdd, a, b, 0.0, at(a).requires_grad || at(b).requires_grad,
         std::move(out)};
  return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& x = at(a).value;
  const Tensor& y = at(b).value;
  if (x.shape() != y.shape()) shape_mismatch("mul", x, y);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  Node n{OpKind::kMul, a, b, 0.0, at(a).requires_grad || at(b).requires_grad,
         std::move(out)};
  return push(std::move(n));
}

NodeId Tape::tanh(NodeId a) {
  Node n{OpKind::kTanh, a, a, 0.0, at(a).requires_grad,
         map(at(a).value, [](double v) { return std::tanh(v); })};
  return push(std::move(n));
}

NodeId Tape::softplus(NodeId a) {
  Node n{OpKind::kSoftplus, a, a, 0.0, at(a).requires_grad,
         map(at(a).value, [](double v) { return pacvi::softplus(v); })};
  return push(std::move(n));
}

NodeId Tape::square(NodeId a) {
  Node n{OpKind::kSquare, a, a, 0.0, at(a).requires_grad,
         map(at(a).value, [](double v) { return v * v; })};
  return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
  auto d = at(a).value.data();
  double total = 0.0;
  for (double v : d) total += v;
  Node n{OpKind::kSum, a, a, 0.0, at(a).requires_grad, Tensor::scalar(total)};
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
  if (!std::isfinite(factor)) throw NumericError("scale: non-finite factor");
  Node n{OpKind::kScale, a, a, factor, at(a).requires_grad,
         map(at(a).value, [factor](double v) { return v * factor; })};
  return push(std::move(n));
}

NodeId Tape::log(NodeId a) {
  Node n{OpKind::kLog, a, a, 0.0, at(a).requires_grad,
         map(at(a).value, [](double v) { return std::log(v); })};
  return push(std::move(n));
}

NodeId Tape::exp(NodeId a) {
  Node n{OpKind::kExp, a, a, 0.0, at(a).requires_grad,
         map(at(a).value, [](double v) { return std::exp(v); })};
  return push(std::move(n));
}

NodeId Tape::forward_op(OpKind kind, std::span<const NodeId> inputs,
                        double factor) {
  auto need = [&](std::size_t count) {
    if (inputs.size() != count) {
      throw ContractError(std::string(op_name(kind)) + " takes " +
                          std::to_string(count) + " input(s), got " +
                          std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case OpKind::kMatmul: need(2); return matmul(inputs[0], inputs[1]);
    case OpKind::kAdd: need(2); return add(inputs[0], inputs[1]);
    case OpKind::kMul: need(2); return mul(inputs[0], inputs[1]);
    case OpKind::kTanh: need(1); return tanh(inputs[0]);
    case OpKind::kSoftplus: need(1); return softplus(inputs[0]);
    case OpKind::kSquare: need(1); return square(inputs[0]);
    case OpKind::kSum: need(1); return sum(inputs[0]);
    case OpKind::kScale: need(1); return scale(inputs[0], factor);
    case OpKind::kLog: need(1); return log(inputs[0]);
    case OpKind::kExp: need(1); return exp(inputs[0]);
    case OpKind::kLeaf: break;
  }
  throw ContractError("forward_op: leaf is not an operation");
}

Gradients Tape::backward(NodeId loss) const {
  const Node& root = at(loss);
  if (root.value.size() != 1) {
    throw ContractError("backward: loss node " + std::to_string(loss) +
                        " is not scalar " + root.value.shape_string());
  }
  std::vector<Tensor> adj(nodes_.size());
  adj[loss] = Tensor(root.value.shape(), 1.0);

  auto accumulate = [&](NodeId id) -> Tensor* {
    if (!nodes_[id].requires_grad) return nullptr;
    if (adj[id].size() == 0) adj[id] = Tensor(nodes_[id].value.shape(), 0.0);
    return &adj[id];
  };

  for (NodeId id = loss + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (node.kind == OpKind::kLeaf || !node.requires_grad) continue;
    if (adj[id].size() == 0) continue;
    const Tensor& g = adj[id];
    const Tensor& x = nodes_[node.lhs].value;

    switch (node.kind) {
      case OpKind::kMatmul: {
        const Tensor& y = nodes_[node.rhs].value;
        if (Tensor* ga = accumulate(node.lhs)) {
          gemm_nt(g.data().data(), y.data().data(), ga->data().data(),
                  x.rows(), y.cols(), x.cols());
        }
        if (Tensor* gb = accumulate(node.rhs)) {
          gemm_tn(x.data().data(), g.data().data(), gb->data().data(),
                  x.rows(), x.cols(), y.cols());
        }
        break;
      }
      case OpKind::kAdd: {
        const Tensor& y = nodes_[node.rhs].value;
        if (Tensor* ga = accumulate(node.lhs)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        }
        if (Tensor* gb = accumulate(node.rhs)) {
          const std::size_t n = y.size();
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % n] += g[i];
        }
        break;
      }
      case OpKind::kMul: {
        const Tensor& y = nodes_[node.rhs].value;
        if (Tensor* ga = accumulate(node.lhs)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i];
        }
        if (Tensor* gb = accumulate(node.rhs)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * x[i];
        }
        break;
      }
      case OpKind::kTanh: {
        if (Tensor* ga = accumulate(node.lhs)) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double t = node.value[i];
            (*ga)[i] += g[i] * (1.0 - t * t);
          }
        }
        break;
      }
      case OpKind::kSoftplus: {
        if (Tensor* ga = accumulate(node.lhs)) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            (*ga)[i] += g[i] * sigmoid(x[i]);
          }
        }
        break;
      }
      case OpKind::kSquare: {
        if (Tensor* ga = accumulate(node.lhs)) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            (*ga)[i] += 2.0 * g[i] * x[i];
          }
        }
        break;
      }
      case OpKind::kSum: {
        if (Tensor* ga = accumulate(node.lhs)) {
          const double s = g[0];
          for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += s;
        }
        break;
      }
      case OpKind::kScale: {
        if (Tensor* ga = accumulate(node.lhs)) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            (*ga)[i] += g[i] * node.factor;
          }
        }
        break;
      }
      case OpKind::kLog: {
        if (Tensor* ga = accumulate(node.lhs)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] / x[i];
        }
        break;
      }
      case OpKind::kExp: {
        if (Tensor* ga = accumulate(node.lhs)) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            (*ga)[i] += g[i] * node.value[i];
          }
        }
        break;
      }
      case OpKind::kLeaf:
        break;
    }
  }
  return Gradients(std::move(adj));
}

}  // namespace pacvi
