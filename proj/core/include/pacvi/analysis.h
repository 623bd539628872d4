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

#ifndef PACVI_ANALYSIS_H_
#define PACVI_ANALYSIS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pacvi/envs.h"
#include "pacvi/objective.h"
#include "pacvi/pac_bound.h"
#include "pacvi/serialization.h"
#include "pacvi/trainer.h"
#include "pacvi/variational_net.h"

namespace pacvi {

double pearson_r(std::span<const double> xs, std::span<const double> ys);

// Two-sided permutation p-value for pearson_r: (1 + #{|r_perm| >= |r_obs|}) /
// (1 + permutations), shuffling ys with stream (seed, kPermutation).
double perm_pvalue(std::span<const double> xs, std::span<const double> ys,
                   std::size_t permutations, std::uint64_t seed);

struct CorrelationResult {
  std::size_t points = 0;
  double r = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
};

CorrelationResult correlate_trace(const TrainTrace& trace,
                                  std::size_t permutations,
                                  std::uint64_t seed);

// Policy acting with the predictive mean of the sampled networks.
Policy predictive_mean_policy(const VariationalParams& phi,
                              std::span<const NoiseDraw> noise);
Policy deterministic_policy(const NetworkArch& arch, std::vector<double> w);

// Mean over rows of |a - predictive_mean(x)|^2.
double predictive_residual(const Dataset& data, const VariationalParams& phi,
                           std::span<const NoiseDraw> noise);

// Shared settings for the experiment harnesses. `hyper.seed` is replaced by
// each run's seed.
struct ExperimentSettings {
  std::vector<std::size_t> hidden = {90, 30, 10};
  Hyperparams hyper;
  std::size_t episodes = 10;
  double train_fraction = 0.8;
  std::size_t rollout_episodes = 10;
  std::size_t parallel = 1;
};

Json to_json(const ExperimentSettings& s);

NetworkArch task_arch(const ExperimentSettings& s);

// Seed used for evaluation rollouts of a run; distinct from the demo starts.
std::uint64_t rollout_seed(std::uint64_t run_seed);

struct BoundRow {
  EnvKind task = EnvKind::kPendulum;
  std::uint64_t seed = 0;
  std::size_t train_rows = 0;
  std::size_t validation_rows = 0;
  BoundReport report;
  bool failed = false;
  std::string message;
};

std::vector<BoundRow> verify_bound_experiment(
    std::span<const EnvKind> tasks, std::span<const std::uint64_t> seeds,
    const ExperimentSettings& settings);

struct GeneralizationRow {
  std::uint64_t seed = 0;
  double expert_original = 0.0;
  double expert_variant = 0.0;
  double vi_original = 0.0;
  double vi_variant = 0.0;
  double dnn_original = 0.0;
  double dnn_variant = 0.0;
  bool vi_wins = false;  // vi_variant >= dnn_variant
  bool failed = false;
  std::string message;
};

struct GeneralizationSummary {
  std::size_t runs = 0;
  std::size_t vi_wins = 0;
  double win_fraction = 0.0;
  double mean_expert_original = 0.0;
  double mean_vi_original = 0.0;
  double mean_dnn_original = 0.0;
  double mean_vi_variant = 0.0;
  double mean_dnn_variant = 0.0;
  // |mean policy return - mean expert return| <= 0.2 |mean expert return|
  bool vi_close_to_expert = false;
  bool dnn_close_to_expert = false;
};

std::vector<GeneralizationRow> generalization_experiment(
    EnvKind task, const Overrides& variant,
    std::span<const std::uint64_t> seeds, const ExperimentSettings& settings);

GeneralizationSummary summarize(std::span<const GeneralizationRow> rows);

bool within_fraction(double value, double reference, double fraction);

// Likelihood-dominance cells: smaller beta makes the nll term dominate.
struct SweepCell {
  std::string name;
  double beta = 1.0;
};

struct SweepConfig {
  std::vector<SweepCell> cells = {{"C1", 1e3}, {"C2", 1e0}, {"C3", 1e-2}};
  std::vector<std::uint64_t> seeds = {0, 1, 2};

  void validate() const;
};

struct SweepRow {
  std::string cell;
  double beta = 0.0;
  std::uint64_t seed = 0;
  double return_original = 0.0;
  double return_variant = 0.0;
  double train_residual = 0.0;
  double train_nll_per_row = 0.0;
  BoundReport report;
  bool failed = false;
  std::string message;
};

std::vector<SweepRow> sensitivity_sweep(const SweepConfig& cfg, EnvKind task,
                                        const Overrides& variant,
                                        const ExperimentSettings& settings);

struct SweepCellSummary {
  std::string cell;
  double beta = 0.0;
  double mean_return_original = 0.0;
  double mean_return_variant = 0.0;
  double mean_train_residual = 0.0;
  double mean_train_nll_per_row = 0.0;
  double mean_bound = 0.0;
  std::size_t holds = 0;
  std::size_t runs = 0;
};

std::vector<SweepCellSummary> summarize(std::span<const SweepRow> rows);

Json bound_rows_to_json(std::span<const BoundRow> rows);
Json generalization_to_json(EnvKind task, std::span<const GeneralizationRow> rows);
Json sweep_to_json(EnvKind task, std::span<const SweepRow> rows);

std::string bound_rows_table(std::span<const BoundRow> rows);
std::string generalization_table(EnvKind task,
                                 std::span<const GeneralizationRow> rows);
std::string sweep_table(EnvKind task, std::span<const SweepRow> rows);

}  // namespace pacvi

#endif  // PACVI_ANALYSIS_H_
