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

#include "pacvi/variational_net.h"

#include <cmath>

#include "pacvi/errors.h"

namespace pacvi {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw NumericError(std::string(what) + ": non-finite entry at index " +
                         std::to_string(i));
    }
  }
}

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected " +
                         std::to_string(want) + " entries, got " +
                         std::to_string(got));
  }
}

}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
  }
  return "unknown";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  throw InputError("unknown activation '" + name + "'");
}

void NetworkArch::validate() const {
  if (input_dim < 1 || output_dim < 1) {
    throw ContractError("network input and output sizes must be >= 1");
  }
  for (std::size_t h : hidden) {
    if (h < 1) throw ContractError("hidden layer sizes must be >= 1");
  }
}

std::vector<ParamBlock> NetworkArch::blocks() const {
  std::vector<ParamBlock> out;
  std::size_t fan_in = input_dim;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t fan_out = l < hidden.size() ? hidden[l] : output_dim;
    const std::string prefix = "layer" + std::to_string(l);
    out.push_back({prefix + ".weight", offset, fan_in, fan_out, false});
    offset += fan_in * fan_out;
    out.push_back({prefix + ".bias", offset, 1, fan_out, true});
    offset += fan_out;
    fan_in = fan_out;
  }
  return out;
}

std::size_t NetworkArch::parameter_count() const {
  std::size_t total = 0;
  for (const auto& b : blocks()) total += b.size();
  return total;
}

VariationalParams VariationalParams::initialize(const NetworkArch& arch,
                                                std::uint64_t seed,
                                                double rho_init) {
  arch.validate();
  VariationalParams phi;
  phi.arch = arch;
  phi.mu.assign(arch.parameter_count(), 0.0);
  phi.rho.assign(arch.parameter_count(), rho_init);
  auto rng = make_stream(seed, StreamPurpose::kInit);
  for (const auto& b : arch.blocks()) {
    if (b.is_bias) continue;
    const double limit =
        std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < b.size(); ++i) phi.mu[b.offset + i] = dist(rng);
  }
  return phi;
}

VariationalParams VariationalParams::prior(const NetworkArch& arch) {
  arch.validate();
  VariationalParams phi;
  phi.arch = arch;
  phi.mu.assign(arch.parameter_count(), 0.0);
  phi.rho.assign(arch.parameter_count(), rho_from_sigma(1.0));
  return phi;
}

void VariationalParams::validate() const {
  arch.validate();
  require_size(mu.size(), arch.parameter_count(), "variational mu");
  require_size(rho.size(), arch.parameter_count(), "variational rho");
  require_finite(mu, "variational mu");
  require_finite(rho, "variational rho");
}

std::vector<double> VariationalParams::sigma() const {
  return sigma_from_rho(rho);
}

NoiseDraw draw_noise(std::size_t dim, std::uint64_t seed,
                     StreamPurpose purpose,
                     std::initializer_list<std::uint64_t> path) {
  NoiseDraw draw;
  draw.seed = seed;
  draw.stream = stream_key(seed, purpose, path);
  std::mt19937_64 rng(draw.stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  draw.tau.resize(dim);
  for (double& t : draw.tau) t = normal(rng);
  return draw;
}

std::vector<NoiseDraw> draw_noise_set(std::size_t dim, std::size_t count,
                                      std::uint64_t seed,
                                      StreamPurpose purpose,
                                      std::uint64_t index) {
  std::vector<NoiseDraw> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(draw_noise(dim, seed, purpose, {index, i}));
  }
  return out;
}

NoiseDraw zero_noise(std::size_t dim) {
  NoiseDraw draw;
  draw.tau.assign(dim, 0.0);
  return draw;
}

std::vector<double> sigma_from_rho(std::span<const double> rho) {
  require_finite(rho, "sigma_from_rho");
  std::vector<double> sigma(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) sigma[i] = softplus(rho[i]);
  return sigma;
}

double rho_from_sigma(double sigma) {
  if (!(sigma > 0.0)) throw ContractError("rho_from_sigma: sigma must be > 0");
  // log(exp(s) - 1) = s + log(1 - exp(-s))
  return sigma + std::log(-std::expm1(-sigma));
}

std::vector<double> sample_weights(const VariationalParams& phi,
                                   const NoiseDraw& noise) {
  require_size(phi.rho.size(), phi.mu.size(), "sample_weights rho");
  require_size(noise.tau.size(), phi.mu.size(), "sample_weights noise");
  std::vector<double> w(phi.mu.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = phi.mu[j] + softplus(phi.rho[j]) * noise.tau[j];
  }
  return w;
}

std::vector<double> policy_forward_batch(std::span<const double> xs,
                                         std::size_t rows,
                                         std::span<const double> w,
                                         const NetworkArch& arch) {
  require_size(w.size(), arch.parameter_count(), "policy_forward weights");
  require_size(xs.size(), rows * arch.input_dim, "policy_forward input");
  const auto blocks = arch.blocks();
  std::vector<double> cur(xs.begin(), xs.end());
  std::size_t width = arch.input_dim;
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    const ParamBlock& wb = blocks[2 * l];
    const ParamBlock& bb = blocks[2 * l + 1];
    const std::size_t out_width = wb.cols;
    std::vector<double> next(rows * out_width);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t o = 0; o < out_width; ++o) {
        double acc = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
          acc += cur[r * width + i] * w[wb.offset + i * out_width + o];
        }
        acc += w[bb.offset + o];
        const bool hidden = l + 1 < arch.layer_count();
        next[r * out_width + o] = hidden ? std::tanh(acc) : acc;
      }
    }
    cur = std::move(next);
    width = out_width;
  }
  return cur;
}

std::vector<double> policy_forward(std::span<const double> x,
                                   std::span<const double> w,
                                   const NetworkArch& arch) {
  return policy_forward_batch(x, 1, w, arch);
}

double log_q(std::span<const double> w, const VariationalParams& phi) {
  require_size(w.size(), phi.mu.size(), "log_q weights");
  require_size(phi.rho.size(), phi.mu.size(), "log_q rho");
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double sigma = softplus(phi.rho[j]);
    if (!(sigma > 0.0)) {
      throw ContractError("log_q: sigma not positive at index " +
                          std::to_string(j));
    }
    const double z = (w[j] - phi.mu[j]) / sigma;
    total += -kHalfLog2Pi - std::log(sigma) - 0.5 * z * z;
  }
  return total;
}

double log_prior(std::span<const double> w) {
  require_finite(w, "log_prior");
  double total = 0.0;
  for (double v : w) total += -kHalfLog2Pi - 0.5 * v * v;
  return total;
}

NodeId tape_policy_forward(Tape& tape, NodeId x,
                           std::span<const NodeId> blocks,
                           const NetworkArch& arch) {
  if (blocks.size() != 2 * arch.layer_count()) {
    throw DimensionError("tape_policy_forward: expected " +
                         std::to_string(2 * arch.layer_count()) +
                         " parameter nodes, got " +
                         std::to_string(blocks.size()));
  }
  NodeId h = x;
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    h = tape.add(tape.matmul(h, blocks[2 * l]), blocks[2 * l + 1]);
    if (l + 1 < arch.layer_count()) h = tape.tanh(h);
  }
  return h;
}

}  // namespace pacvi
