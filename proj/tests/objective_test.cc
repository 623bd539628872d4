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
#include <random>

#include <gtest/gtest.h>

#include "pacvi/errors.h"
#include "test_util.h"

namespace pacvi {
namespace {

// Single-row dataset whose action equals the zero-weight network output (0).
Dataset zero_target(double action = 0.0) {
  Dataset d;
  d.input_dim = 1;
  d.output_dim = 1;
  const double x[] = {0.5};
  const double a[] = {action};
  d.add_row(x, a);
  return d;
}

TEST(GaussianNll, KnownValues) {
  const auto arch = testing::small_arch(1, {2}, 1);
  const std::vector<double> zeros(arch.parameter_count(), 0.0);
  EXPECT_NEAR(gaussian_nll(zero_target(), zeros, arch, 1.0), 0.9189385332046727, 1e-14);
  // 0.5 log(200 pi) at 40 digits: 3.2215236261987184258
  EXPECT_NEAR(gaussian_nll(zero_target(), zeros, arch, 100.0), 3.2215236261987184, 1e-14);
  EXPECT_NEAR(gaussian_nll(zero_target(2.0), zeros, arch, 1.0), 2.9189385332046727, 1e-14);
  EXPECT_THROW(gaussian_nll(zero_target(), zeros, arch, 0.0), ContractError);
  EXPECT_THROW(gaussian_nll(Dataset{1, 1, {}, {}, {}}, zeros, arch, 1.0), ContractError);
}

TEST(GaussianNll, IsSumOverRows) {
  const auto arch = testing::small_arch(2, {3}, 2);
  std::mt19937_64 rng(1);
  const auto data = testing::random_dataset(rng, 10, 2, 2);
  const auto w = testing::random_vector(rng, arch.parameter_count());
  double sum = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const std::size_t idx[] = {r};
    sum += gaussian_nll(data.subset(idx), w, arch, 3.0);
  }
  EXPECT_NEAR(gaussian_nll(data, w, arch, 3.0), sum, 1e-10);
}

TEST(MinibatchWeight, KnownValuesAndSum) {
  EXPECT_EQ(minibatch_weight(1, 1), 1.0);
  EXPECT_NEAR(minibatch_weight(1, 2), 2.0 / 3.0, 1e-16);
  EXPECT_NEAR(minibatch_weight(2, 2), 1.0 / 3.0, 1e-16);
  for (std::size_t b = 1; b <= 64; ++b) {
    double total = 0.0;
    for (std::size_t j = 1; j <= b; ++j) {
      total += minibatch_weight(j, b);
      // direct ratio 2^(B-j) / (2^B - 1) where it is exactly representable
      if (b <= 52) {
        EXPECT_NEAR(minibatch_weight(j, b),
                    std::ldexp(1.0, static_cast<int>(b - j)) /
                        (std::ldexp(1.0, static_cast<int>(b)) - 1.0),
                    1e-16);
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-12) << "B=" << b;
  }
  EXPECT_THROW(minibatch_weight(0, 3), ContractError);
  EXPECT_THROW(minibatch_weight(4, 3), ContractError);
}

TEST(ClosedFormKl, KnownValues) {
  const auto arch = testing::small_arch(1, {1}, 1);
  VariationalParams phi = VariationalParams::prior(arch);
  EXPECT_NEAR(closed_form_kl(phi), 0.0, 1e-12);
  phi.mu[0] = 1.0;
  EXPECT_NEAR(closed_form_kl(phi), 0.5, 1e-12);
  phi.mu[0] = 0.0;
  phi.rho[0] = rho_from_sigma(2.0);
  EXPECT_NEAR(closed_form_kl(phi), 0.8068528194400547, 1e-12);
}

TEST(ClosedFormKl, NonNegative) {
  const auto arch = testing::small_arch(2, {3}, 1);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    EXPECT_GT(closed_form_kl(testing::random_params(rng, arch)), 0.0);
  }
}

TEST(McCost, DeterministicSingleSample) {
  const auto arch = testing::small_arch(2, {4}, 1);
  std::mt19937_64 rng(3);
  const auto data = testing::random_dataset(rng, 12, 2, 1);
  const auto phi = testing::random_params(rng, arch);
  Hyperparams h;
  h.beta = 2.5;
  const NoiseDraw zero = zero_noise(phi.size());
  const double expected = log_q(phi.mu, phi) - log_prior(phi.mu) +
                          gaussian_nll(data, phi.mu, arch, h.beta);
  EXPECT_NEAR(mc_cost_full(data, phi, h, std::span(&zero, 1)), expected,
              1e-12 * std::abs(expected));
  EXPECT_THROW(mc_cost_full(data, phi, h, {}), ContractError);
}

TEST(McCost, RecomposesFromSubTerms) {
  const auto arch = testing::small_arch(2, {5}, 2);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto data = testing::random_dataset(rng, 9, 2, 2);
    const auto phi = testing::random_params(rng, arch);
    std::vector<NoiseDraw> noise;
    for (int i = 0; i < 4; ++i) noise.push_back(testing::random_noise(rng, phi.size()));
    Hyperparams h;
    h.beta = 0.7;
    double expected = 0.0;
    for (const auto& n : noise) {
      const auto w = sample_weights(phi, n);
      expected += log_q(w, phi) - log_prior(w) + gaussian_nll(data, w, arch, h.beta);
    }
    expected /= 4.0;
    EXPECT_NEAR(mc_cost_full(data, phi, h, noise), expected, 1e-12 * std::abs(expected));
  }
}

TEST(McCost, PriorParamsGiveZeroMeanComplexity) {
  const auto arch = testing::small_arch(1, {3}, 1);
  const auto phi = VariationalParams::prior(arch);
  const auto data = zero_target(0.3);
  const auto noise = draw_noise_set(phi.size(), 2000, 1, StreamPurpose::kEvalNoise);
  const CostTerms t = mc_cost_terms(data, phi, 1.0, 1.0, noise);
  // log q - log p is identically zero when q equals the prior.
  EXPECT_NEAR(t.complexity, 0.0, 1e-9);
  EXPECT_NEAR(t.value, t.nll, 1e-9);
}

TEST(McCost, MinibatchSumEqualsFullCost) {
  const auto arch = testing::small_arch(2, {4}, 1);
  std::mt19937_64 rng(5);
  const auto data = testing::random_dataset(rng, 40, 2, 1);
  const auto phi = testing::random_params(rng, arch);
  Hyperparams h;
  h.beta = 1.3;
  const auto noise = draw_noise_set(phi.size(), 3, 8, StreamPurpose::kTrainNoise);
  const auto batches = minibatch_indices(data.size(), 4, 0, 0);
  double sum = 0.0;
  double kl_full = mc_cost_terms(data, phi, h.beta, 1.0, noise).complexity;
  for (std::size_t j = 1; j <= 4; ++j) {
    const Dataset batch = data.subset(batches[j - 1]);
    sum += mc_cost_minibatch(batch, j, 4, phi, h, noise);
    const CostTerms t = mc_cost_terms(batch, phi, h.beta, minibatch_weight(j, 4), noise);
    EXPECT_NEAR(t.value - t.nll, minibatch_weight(j, 4) * kl_full,
                1e-12 * std::abs(kl_full));
  }
  const double full = mc_cost_full(data, phi, h, noise);
  EXPECT_NEAR(sum, full, 1e-10 * std::abs(full));

  const double single = mc_cost_minibatch(data, 1, 1, phi, h, noise);
  EXPECT_EQ(single, full);
}

TEST(McCost, TapeValueMatchesPlainValue) {
  const auto arch = testing::small_arch(2, {6, 3}, 2);
  std::mt19937_64 rng(6);
  const auto data = testing::random_dataset(rng, 15, 2, 2);
  const auto phi = testing::random_params(rng, arch);
  const auto noise = draw_noise_set(phi.size(), 3, 2, StreamPurpose::kTrainNoise);
  const CostGradient g = mc_cost_gradient(data, phi, 0.9, 0.25, noise);
  const double plain = mc_cost_terms(data, phi, 0.9, 0.25, noise).value;
  EXPECT_NEAR(g.value, plain, 1e-11 * std::abs(plain));
}

TEST(McCost, GradientsMatchFiniteDifferences) {
  const auto arch = testing::small_arch(2, {4}, 1);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto data = testing::random_dataset(rng, 8, 2, 1);
    const auto phi = testing::random_params(rng, arch);
    const auto noise = draw_noise_set(phi.size(), 2, trial, StreamPurpose::kTrainNoise);
    const double weight = trial == 0 ? 1.0 : minibatch_weight(trial, 5);
    const CostGradient g = mc_cost_gradient(data, phi, 0.8, weight, noise);
    auto f_mu = [&](std::vector<double>& mu) {
      VariationalParams p = phi;
      p.mu = mu;
      return mc_cost_terms(data, p, 0.8, weight, noise).value;
    };
    auto f_rho = [&](std::vector<double>& rho) {
      VariationalParams p = phi;
      p.rho = rho;
      return mc_cost_terms(data, p, 0.8, weight, noise).value;
    };
    for (std::size_t j = 0; j < phi.size(); ++j) {
      const double fd_mu = testing::central_difference(f_mu, phi.mu, j);
      const double fd_rho = testing::central_difference(f_rho, phi.rho, j);
      EXPECT_TRUE(testing::close_rel(g.grad_mu[j], fd_mu, 1e-4, 1e-7))
          << "mu " << j << ": " << g.grad_mu[j] << " vs " << fd_mu;
      EXPECT_TRUE(testing::close_rel(g.grad_rho[j], fd_rho, 1e-4, 1e-7))
          << "rho " << j << ": " << g.grad_rho[j] << " vs " << fd_rho;
    }
  }
}

TEST(McCost, MonteCarloKlConvergesToClosedForm) {
  const auto arch = testing::small_arch(1, {2}, 1);
  std::mt19937_64 rng(8);
  const auto data = zero_target();
  for (int trial = 0; trial < 5; ++trial) {
    const auto phi = testing::random_params(rng, arch);
    const auto noise = draw_noise_set(phi.size(), 10000, trial, StreamPurpose::kEvalNoise);
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& n : noise) {
      const auto w = sample_weights(phi, n);
      const double c = log_q(w, phi) - log_prior(w);
      sum += c;
      sum_sq += c * c;
    }
    const double m = static_cast<double>(noise.size());
    const double mean = sum / m;
    const double se = std::sqrt((sum_sq / m - mean * mean) / m);
    EXPECT_LE(std::abs(mean - closed_form_kl(phi)), 5.0 * se);
  }
}

TEST(Hyperparams, DefaultsAndValidation) {
  Hyperparams h;
  EXPECT_EQ(h.beta, 100.0);
  EXPECT_EQ(h.delta, 0.1);
  EXPECT_EQ(h.batches, 20u);
  EXPECT_EQ(h.learning_rate, 0.001);
  EXPECT_EQ(h.epochs, 5000u);
  EXPECT_NO_THROW(h.validate());
  h.delta = 1.0;
  EXPECT_THROW(h.validate(), ContractError);
  h.delta = 0.1;
  h.mc_samples = 0;
  EXPECT_THROW(h.validate(), ContractError);
}

}  // namespace
}  // namespace pacvi
