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

#ifndef PACVI_VARIATIONAL_NET_H_
#define PACVI_VARIATIONAL_NET_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pacvi/autodiff.h"
#include "pacvi/random.h"

namespace pacvi {

enum class Activation { kTanh };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// One learnable tensor inside the flat parameter vector. Weights are stored
// [rows=fan_in, cols=fan_out] row-major; biases have rows == 1.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool is_bias = false;

  std::size_t size() const { return rows * cols; }
};

struct NetworkArch {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden = {90, 30, 10};
  std::size_t output_dim = 1;
  Activation activation = Activation::kTanh;

  void validate() const;
  std::size_t layer_count() const { return hidden.size() + 1; }
  // Layout of the flat vector: layer0.weight, layer0.bias, layer1.weight, ...
  std::vector<ParamBlock> blocks() const;
  std::size_t parameter_count() const;

  friend bool operator==(const NetworkArch&, const NetworkArch&) = default;
};

// Mean-field Gaussian over the flat weight vector: w_j ~ N(mu_j, softplus(rho_j)^2).
struct VariationalParams {
  NetworkArch arch;
  std::vector<double> mu;
  std::vector<double> rho;

  // Glorot-uniform means for weights, zero means for biases, constant rho.
  static VariationalParams initialize(const NetworkArch& arch,
                                      std::uint64_t seed,
                                      double rho_init = -3.0);
  // The standard-normal prior expressed as a member of the family.
  static VariationalParams prior(const NetworkArch& arch);

  void validate() const;
  std::size_t size() const { return mu.size(); }
  std::vector<double> sigma() const;

  friend bool operator==(const VariationalParams&,
                         const VariationalParams&) = default;
};

// Standard-normal noise for one Monte-Carlo sample, plus where it came from.
struct NoiseDraw {
  std::vector<double> tau;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

NoiseDraw draw_noise(std::size_t dim, std::uint64_t seed,
                     StreamPurpose purpose,
                     std::initializer_list<std::uint64_t> path = {});

// M draws for sample indices 0..M-1 under stream (seed, purpose, index, i).
std::vector<NoiseDraw> draw_noise_set(std::size_t dim, std::size_t count,
                                      std::uint64_t seed,
                                      StreamPurpose purpose,
                                      std::uint64_t index = 0);

NoiseDraw zero_noise(std::size_t dim);

std::vector<double> sigma_from_rho(std::span<const double> rho);

// softplus^-1(sigma), used to place the prior inside the family.
double rho_from_sigma(double sigma);

std::vector<double> sample_weights(const VariationalParams& phi,
                                   const NoiseDraw& noise);

std::vector<double> policy_forward(std::span<const double> x,
                                   std::span<const double> w,
                                   const NetworkArch& arch);

// Row-wise forward pass over a [n, input_dim] batch.
std::vector<double> policy_forward_batch(std::span<const double> xs,
                                         std::size_t rows,
                                         std::span<const double> w,
                                         const NetworkArch& arch);

double log_q(std::span<const double> w, const VariationalParams& phi);
double log_prior(std::span<const double> w);

// Tape forward pass. `blocks` holds one node per ParamBlock in arch order;
// `x` is a [n, input_dim] node. Returns a [n, output_dim] node.
NodeId tape_policy_forward(Tape& tape, NodeId x,
                           std::span<const NodeId> blocks,
                           const NetworkArch& arch);

}  // namespace pacvi

#endif  // PACVI_VARIATIONAL_NET_H_
