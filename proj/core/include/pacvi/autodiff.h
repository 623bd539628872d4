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

#ifndef PACVI_AUTODIFF_H_
#define PACVI_AUTODIFF_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pacvi {

// Dense row-major double tensor. Only rank 0, 1 and 2 are used in practice,
// but the shape is stored generally.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

  static Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }
  static Tensor vector(std::vector<double> data);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double item() const;

  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

using NodeId = std::size_t;

enum class OpKind {
  kLeaf,
  kMatmul,
  kAdd,  // same shape, or [n,k] + [k] bias broadcast
  kMul,
  kTanh,
  kSoftplus,
  kSquare,
  kSum,
  kScale,
  kLog,
  kExp,
};

const char* op_name(OpKind kind);

// Adjoints indexed by node id. Nodes that do not influence the loss, or that
// were created without requires_grad, hold an empty tensor.
class Gradients {
 public:
  explicit Gradients(std::vector<Tensor> adjoints)
      : adjoints_(std::move(adjoints)) {}
  const Tensor& operator[](NodeId id) const { return adjoints_.at(id); }
  std::size_t size() const { return adjoints_.size(); }

 private:
  std::vector<Tensor> adjoints_;
};

// Define-by-run reverse-mode tape. Nodes are appended in evaluation order, so
// the node vector is already topologically sorted. A tape is not thread-safe;
// use one tape per thread.
class Tape {
 public:
  NodeId leaf(Tensor value, bool requires_grad = true);
  NodeId constant(Tensor value) { return leaf(std::move(value), false); }

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId tanh(NodeId a);
  NodeId softplus(NodeId a);
  NodeId square(NodeId a);
  NodeId sum(NodeId a);
  NodeId scale(NodeId a, double factor);
  NodeId log(NodeId a);
  NodeId exp(NodeId a);

  // a - b, expressed through add and scale.
  NodeId sub(NodeId a, NodeId b) { return add(a, scale(b, -1.0)); }

  // Generic entry point mirroring the named ops; unary kinds ignore the
  // second input, kScale reads `factor`.
  NodeId forward_op(OpKind kind, std::span<const NodeId> inputs,
                    double factor = 1.0);

  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar loss. Does not mutate the tape, so repeated
  // calls return identical results.
  Gradients backward(NodeId loss) const;

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    NodeId lhs = 0;
    NodeId rhs = 0;
    double factor = 0.0;
    bool requires_grad = false;
    Tensor value;
  };

  NodeId push(Node node);
  const Node& at(NodeId id) const;

  std::vector<Node> nodes_;
};

// Overflow-safe log(1 + exp(x)).
double softplus(double x);
double sigmoid(double x);

}  // namespace pacvi

#endif  // PACVI_AUTODIFF_H_
