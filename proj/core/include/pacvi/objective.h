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

#ifndef PACVI_OBJECTIVE_H_
#define PACVI_OBJECTIVE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pacvi/dataset.h"
#include "pacvi/variational_net.h"

namespace pacvi {

struct Hyperparams {
  // Likelihood variance; also used as the subgaussian variance factor s^2.
  double beta = 100.0;
  double delta = 0.1;
  std::size_t mc_samples = 1;        // M used for training steps
  std::size_t eval_mc_samples = 30;  // M used for bound and holdout estimates
  std::size_t batches = 20;
  double learning_rate = 1e-3;
  std::size_t epochs = 5000;
  std::uint64_t seed = 0;
  double clip_norm = 100.0;  // global gradient-norm clip; <= 0 disables

  void validate() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

// -log p(D|w) for an isotropic Gaussian likelihood with variance beta, summed
// (not averaged) over the rows of `data`.
double gaussian_nll(const Dataset& data, std::span<const double> w,
                    const NetworkArch& arch, double beta);

// Per-sample pieces of the Monte-Carlo cost, averaged over the draws.
struct CostTerms {
  double complexity = 0.0;  // mean of log q(w|phi) - log p(w)
  double nll = 0.0;         // mean of -log p(D|w)
  double value = 0.0;       // kl_weight * complexity + nll
};

CostTerms mc_cost_terms(const Dataset& data, const VariationalParams& phi,
                        double beta, double kl_weight,
                        std::span<const NoiseDraw> noise);

// F(D) = (1/M) sum_i [log q(w_i|phi) - log p(w_i) - log p(D|w_i)].
double mc_cost_full(const Dataset& data, const VariationalParams& phi,
                    const Hyperparams& h, std::span<const NoiseDraw> noise);

// theta_j = 2^(B-j) / (2^B - 1) for 1-based j.
double minibatch_weight(std::size_t j, std::size_t batches);

// F(D_j) with the complexity term scaled by theta_j.
double mc_cost_minibatch(const Dataset& batch, std::size_t j,
                         std::size_t batches, const VariationalParams& phi,
                         const Hyperparams& h,
                         std::span<const NoiseDraw> noise);

// KL[q(w|phi) || N(0, I)] in closed form.
double closed_form_kl(const VariationalParams& phi);

struct CostGradient {
  double value = 0.0;
  std::vector<double> grad_mu;
  std::vector<double> grad_rho;
};

// Value and reparameterization gradient of
// (1/M) sum_i [kl_weight (log q - log p(w)) - log p(D|w_i)] via the tape.
CostGradient mc_cost_gradient(const Dataset& data,
                              const VariationalParams& phi, double beta,
                              double kl_weight,
                              std::span<const NoiseDraw> noise);

}  // namespace pacvi

#endif  // PACVI_OBJECTIVE_H_
