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

#include "pacvi/pac_bound.h"

#include <cmath>

#include "pacvi/errors.h"

namespace pacvi {

namespace {

void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ContractError("delta must lie in (0, 1), got " +
                        std::to_string(delta));
  }
}

double confidence_term(double delta, std::size_t rows) {
  return -std::log(delta) / static_cast<double>(rows);
}

}  // namespace

void BoundReport::attach_holdout(double per_row_nll) {
  holdout_nll = per_row_nll;
  holds = per_row_nll <= bound_value;
}

BoundReport bound_full(const Dataset& data, const VariationalParams& phi,
                       const Hyperparams& h,
                       std::span<const NoiseDraw> noise) {
  require_delta(h.delta);
  if (data.empty()) throw ContractError("bound: empty dataset");
  phi.validate();

  const CostTerms terms = mc_cost_terms(data, phi, h.beta, 1.0, noise);
  const auto n = static_cast<double>(data.size());

  BoundReport r;
  r.rows = data.size();
  r.mc_term = terms.value / n;
  r.complexity_term = terms.complexity / n;
  r.empirical_nll_term = terms.nll / n;
  r.confidence_term = confidence_term(h.delta, data.size());
  r.slack_term = h.beta / 2.0;
  r.bound_value = r.mc_term + r.confidence_term + r.slack_term;
  r.delta = h.delta;
  r.mc_samples = noise.size();
  r.seed = noise.front().seed;
  return r;
}

BoundReport bound_minibatch(const Dataset& batch, const VariationalParams& phi,
                            const Hyperparams& h,
                            std::span<const NoiseDraw> noise) {
  if (batch.empty()) throw ContractError("bound_minibatch: empty minibatch");
  return bound_full(batch, phi, h, noise);
}

double affine_from_cost(double cost, std::size_t rows, const Hyperparams& h) {
  if (rows < 1) throw ContractError("affine_from_cost: rows must be >= 1");
  require_delta(h.delta);
  return cost / static_cast<double>(rows) + confidence_term(h.delta, rows) +
         h.beta / 2.0;
}

double holdout_risk(const Dataset& validation, const VariationalParams& phi,
                    const Hyperparams& h, std::span<const NoiseDraw> noise) {
  if (validation.empty()) throw ContractError("holdout_risk: empty dataset");
  if (noise.empty()) {
    throw ContractError("holdout_risk: need at least one Monte-Carlo sample");
  }
  double total = 0.0;
  for (const auto& draw : noise) {
    total += gaussian_nll(validation, sample_weights(phi, draw), phi.arch,
                          h.beta);
  }
  return total / static_cast<double>(noise.size()) /
         static_cast<double>(validation.size());
}

BoundReport evaluate_bound(const Dataset& train, const Dataset* validation,
                           const VariationalParams& phi, const Hyperparams& h) {
  const auto noise = draw_noise_set(phi.size(), h.eval_mc_samples, h.seed,
                                    StreamPurpose::kEvalNoise);
  BoundReport report = bound_full(train, phi, h, noise);
  if (validation != nullptr) {
    const auto holdout_noise = draw_noise_set(
        phi.size(), h.eval_mc_samples, h.seed, StreamPurpose::kHoldoutNoise);
    report.attach_holdout(holdout_risk(*validation, phi, h, holdout_noise));
  }
  return report;
}

}  // namespace pacvi
