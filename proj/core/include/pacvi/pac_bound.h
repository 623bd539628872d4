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

#ifndef PACVI_PAC_BOUND_H_
#define PACVI_PAC_BOUND_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

#include "pacvi/dataset.h"
#include "pacvi/objective.h"
#include "pacvi/variational_net.h"

namespace pacvi {

// PAC-Bayes risk bound with nll as the loss:
//   bound = mc_term + confidence_term + slack_term
//   mc_term         = (1/M) sum_i [log q(w_i) - log p(w_i) - log p(D|w_i)] / N
//   confidence_term = log(1/delta) / N
//   slack_term      = s^2 / 2, with s^2 = beta
// The bound holds with probability at least 1 - delta.
struct BoundReport {
  std::size_t rows = 0;
  double mc_term = 0.0;
  double complexity_term = 0.0;  // KL part of mc_term, already divided by N
  double empirical_nll_term = 0.0;  // nll part of mc_term, divided by N
  double confidence_term = 0.0;
  double slack_term = 0.0;
  double bound_value = 0.0;
  double holdout_nll = std::numeric_limits<double>::quiet_NaN();
  bool holds = false;
  double delta = 0.0;
  std::size_t mc_samples = 0;
  std::uint64_t seed = 0;

  double confidence() const { return 1.0 - delta; }
  bool has_holdout() const { return holdout_nll == holdout_nll; }
  // Sets holdout_nll and holds = (holdout_nll <= bound_value).
  void attach_holdout(double per_row_nll);
};

BoundReport bound_full(const Dataset& data, const VariationalParams& phi,
                       const Hyperparams& h,
                       std::span<const NoiseDraw> noise);

// Same bound restricted to one minibatch D_j: N becomes |D_j| and the full
// (unweighted) KL term is used.
BoundReport bound_minibatch(const Dataset& batch, const VariationalParams& phi,
                            const Hyperparams& h,
                            std::span<const NoiseDraw> noise);

// F / N + log(1/delta) / N + s^2 / 2 for a training cost F computed on N rows.
double affine_from_cost(double cost, std::size_t rows, const Hyperparams& h);

// Per-row held-out risk: (1/|D_val|)(1/M) sum_i -log p(D_val | w_i).
double holdout_risk(const Dataset& validation, const VariationalParams& phi,
                    const Hyperparams& h, std::span<const NoiseDraw> noise);

// Draws eval_mc_samples noise vectors from (h.seed, kEvalNoise) and evaluates
// bound_full on `train`; if `validation` is non-null, fills the holdout
// fields from independent draws (h.seed, kHoldoutNoise).
BoundReport evaluate_bound(const Dataset& train, const Dataset* validation,
                           const VariationalParams& phi, const Hyperparams& h);

}  // namespace pacvi

#endif  // PACVI_PAC_BOUND_H_
