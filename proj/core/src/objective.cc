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

#include "pacvi/objective.h"

#include <cmath>
#include <numbers>

#include "pacvi/errors.h"

namespace pacvi {

namespace {

void require_nonempty(const Dataset& data, const char* what) {
  if (data.empty()) throw ContractError(std::string(what) + ": empty dataset");
}

void require_noise(std::span<const NoiseDraw> noise, std::size_t dim,
                   const char* what) {
  if (noise.empty()) {
    throw ContractError(std::string(what) +
                        ": need at least one Monte-Carlo sample");
  }
  for (const auto& n : noise) {
    if (n.tau.size() != dim) {
      throw DimensionError(std::string(what) + ": noise draw has " +
                           std::to_string(n.tau.size()) +
                           " entries, parameters have " + std::to_string(dim));
    }
  }
}

void require_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ContractError("likelihood variance beta must be finite and > 0");
  }
}

void require_dims(const Dataset& data, const NetworkArch& arch) {
  if (data.input_dim != arch.input_dim || data.output_dim != arch.output_dim) {
    throw DimensionError(
        "dataset dims (" + std::to_string(data.input_dim) + "," +
        std::to_string(data.output_dim) + ") do not match network (" +
        std::to_string(arch.input_dim) + "," +
        std::to_string(arch.output_dim) + ")");
  }
}

double nll_constant(std::size_t rows, std::size_t output_dim, double beta) {
  return static_cast<double>(rows) * 0.5 *
         static_cast<double>(output_dim) *
         std::log(2.0 * std::numbers::pi * beta);
}

}  // namespace

void Hyperparams::validate() const {
  require_beta(beta);
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ContractError("delta must lie in (0, 1)");
  }
  if (mc_samples < 1 || eval_mc_samples < 1) {
    throw ContractError("Monte-Carlo sample counts must be >= 1");
  }
  if (batches < 1) throw ContractError("number of minibatches must be >= 1");
  if (!(learning_rate > 0.0)) throw ContractError("learning rate must be > 0");
}

double gaussian_nll(const Dataset& data, std::span<const double> w,
                    const NetworkArch& arch, double beta) {
  require_beta(beta);
  require_nonempty(data, "gaussian_nll");
  require_dims(data, arch);
  const auto pred =
      policy_forward_batch(data.inputs, data.size(), w, arch);
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = data.actions[i] - pred[i];
    sq += r * r;
  }
  return nll_constant(data.size(), data.output_dim, beta) + sq / (2.0 * beta);
}

CostTerms mc_cost_terms(const Dataset& data, const VariationalParams& phi,
                        double beta, double kl_weight,
                        std::span<const NoiseDraw> noise) {
  require_noise(noise, phi.size(), "mc_cost");
  CostTerms terms;
  for (const auto& draw : noise) {
    const auto w = sample_weights(phi, draw);
    terms.complexity += log_q(w, phi) - log_prior(w);
    terms.nll += gaussian_nll(data, w, phi.arch, beta);
  }
  const auto m = static_cast<double>(noise.size());
  terms.complexity /= m;
  terms.nll /= m;
  terms.value = kl_weight * terms.complexity + terms.nll;
  return terms;
}

double mc_cost_full(const Dataset& data, const VariationalParams& phi,
                    const Hyperparams& h, std::span<const NoiseDraw> noise) {
  return mc_cost_terms(data, phi, h.beta, 1.0, noise).value;
}

double minibatch_weight(std::size_t j, std::size_t batches) {
  if (batches < 1 || j < 1 || j > batches) {
    throw ContractError("minibatch index " + std::to_string(j) +
                        " outside 1.." + std::to_string(batches));
  }
  // 2^(B-j) / (2^B - 1) rewritten to stay finite for large B.
  const double b = static_cast<double>(batches);
  return std::ldexp(1.0, -static_cast<int>(j)) / -std::expm1(-b * std::log(2.0));
}

double mc_cost_minibatch(const Dataset& batch, std::size_t j,
                         std::size_t batches, const VariationalParams& phi,
                         const Hyperparams& h,
                         std::span<const NoiseDraw> noise) {
  return mc_cost_terms(batch, phi, h.beta, minibatch_weight(j, batches), noise)
      .value;
}

double closed_form_kl(const VariationalParams& phi) {
  if (phi.rho.size() != phi.mu.size()) {
    throw DimensionError("closed_form_kl: mu and rho sizes differ");
  }
  double kl = 0.0;
  for (std::size_t j = 0; j < phi.mu.size(); ++j) {
    const double sigma = softplus(phi.rho[j]);
    if (!(sigma > 0.0)) throw ContractError("closed_form_kl: sigma <= 0");
    const double var = sigma * sigma;
    kl += 0.5 * (var + phi.mu[j] * phi.mu[j] - 1.0 - 2.0 * std::log(sigma));
  }
  return kl;
}

CostGradient mc_cost_gradient(const Dataset& data,
                              const VariationalParams& phi, double beta,
                              double kl_weight,
                              std::span<const NoiseDraw> noise) {
  require_beta(beta);
  require_nonempty(data, "mc_cost_gradient");
  require_dims(data, phi.arch);
  require_noise(noise, phi.size(), "mc_cost_gradient");

  const auto blocks = phi.arch.blocks();
  auto block_tensor = [](const ParamBlock& b, std::span<const double> flat) {
    std::vector<double> v(flat.begin() + b.offset,
                          flat.begin() + b.offset + b.size());
    if (b.is_bias) return Tensor::vector(std::move(v));
    return Tensor::matrix(b.rows, b.cols, std::move(v));
  };

  Tape tape;
  std::vector<NodeId> mu_nodes, rho_nodes, log_sigma, inv_var;
  for (const auto& b : blocks) {
    mu_nodes.push_back(tape.leaf(block_tensor(b, phi.mu)));
    rho_nodes.push_back(tape.leaf(block_tensor(b, phi.rho)));
  }
  std::vector<NodeId> sigma_nodes;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    sigma_nodes.push_back(tape.softplus(rho_nodes[k]));
    log_sigma.push_back(tape.log(sigma_nodes.back()));
    inv_var.push_back(tape.exp(tape.scale(log_sigma.back(), -2.0)));
  }
  const NodeId x = tape.constant(
      Tensor::matrix(data.size(), data.input_dim, data.inputs));
  const NodeId a = tape.constant(
      Tensor::matrix(data.size(), data.output_dim, data.actions));

  const double inv_m = 1.0 / static_cast<double>(noise.size());
  NodeId total = 0;
  bool have_total = false;
  for (const auto& draw : noise) {
    std::vector<NodeId> w_nodes;
    NodeId complexity = 0;
    bool have_c = false;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const NodeId tau = tape.constant(block_tensor(blocks[k], draw.tau));
      const NodeId w =
          tape.add(mu_nodes[k], tape.mul(sigma_nodes[k], tau));
      w_nodes.push_back(w);
      // log q - log p without the 0.5 log(2 pi) constants, which cancel.
      const NodeId diff = tape.sub(w, mu_nodes[k]);
      const NodeId quad_q = tape.sum(tape.mul(tape.square(diff), inv_var[k]));
      const NodeId quad_p = tape.sum(tape.square(w));
      const NodeId term = tape.add(
          tape.scale(tape.sum(log_sigma[k]), -1.0),
          tape.add(tape.scale(quad_q, -0.5), tape.scale(quad_p, 0.5)));
      complexity = have_c ? tape.add(complexity, term) : term;
      have_c = true;
    }
    const NodeId pred = tape_policy_forward(tape, x, w_nodes, phi.arch);
    const NodeId sq = tape.sum(tape.square(tape.sub(a, pred)));
    const NodeId sample = tape.add(tape.scale(complexity, kl_weight),
                                   tape.scale(sq, 1.0 / (2.0 * beta)));
    total = have_total ? tape.add(total, sample) : sample;
    have_total = true;
  }
  const NodeId loss = tape.scale(total, inv_m);
  const Gradients grads = tape.backward(loss);

  CostGradient out;
  out.value = tape.value(loss).item() +
              nll_constant(data.size(), data.output_dim, beta);
  out.grad_mu.assign(phi.size(), 0.0);
  out.grad_rho.assign(phi.size(), 0.0);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& gm = grads[mu_nodes[k]];
    const auto& gr = grads[rho_nodes[k]];
    for (std::size_t i = 0; i < gm.size(); ++i) {
      out.grad_mu[blocks[k].offset + i] = gm[i];
    }
    for (std::size_t i = 0; i < gr.size(); ++i) {
      out.grad_rho[blocks[k].offset + i] = gr[i];
    }
  }
  return out;
}

}  // namespace pacvi
