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

// Acceptance checks. Prints one PASS/FAIL line per criterion; the exit code
// is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pacvi/analysis.h"
#include "pacvi/envs.h"
#include "pacvi/objective.h"
#include "pacvi/pac_bound.h"
#include "pacvi/serialization.h"
#include "pacvi/trainer.h"
#include "test_util.h"

#ifndef PACVI_CLI_PATH
#error "PACVI_CLI_PATH must point at the pacvi binary"
#endif

namespace pacvi {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// ---- 1: reparameterization gradients against central differences.
Outcome gradient_correctness() {
  const NetworkArch arch = testing::small_arch(2, {8}, 2);
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> beta_dist(0.3, 5.0);
  std::size_t bad = 0, checked = 0;
  double worst_rel = 0.0, worst_abs = 0.0;
  for (int config = 0; config < 50; ++config) {
    const Dataset data = testing::random_dataset(rng, 12, 2, 2);
    const VariationalParams phi = testing::random_params(rng, arch);
    const double beta = beta_dist(rng);
    const double weight = config % 2 ? 1.0 : minibatch_weight(1 + config % 7, 8);
    const auto noise = draw_noise_set(phi.size(), 2, config, StreamPurpose::kTrainNoise);
    const CostGradient g = mc_cost_gradient(data, phi, beta, weight, noise);
    for (int which = 0; which < 2; ++which) {
      const std::vector<double>& base = which == 0 ? phi.mu : phi.rho;
      const std::vector<double>& analytic = which == 0 ? g.grad_mu : g.grad_rho;
      auto f = [&](std::vector<double>& v) {
        VariationalParams p = phi;
        (which == 0 ? p.mu : p.rho) = v;
        return mc_cost_terms(data, p, beta, weight, noise).value;
      };
      for (std::size_t i = 0; i < base.size(); ++i) {
        const double fd = testing::central_difference(f, base, i);
        ++checked;
        if (!testing::close_rel(analytic[i], fd, 1e-4, 1e-7)) ++bad;
        worst_abs = std::max(worst_abs, std::abs(analytic[i] - fd));
        if (std::abs(fd) > 1e-3) worst_rel = std::max(worst_rel, rel_err(analytic[i], fd));
      }
    }
  }
  return {bad == 0, fmt("%zu/%zu components outside tolerance, max abs err %.2e, "
                        "max rel err %.2e where |grad| > 1e-3",
                        bad, checked, worst_abs, worst_rel)};
}

// ---- 2: bound_full equals the affine map of the training cost.
Outcome affine_identity() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> log_beta(-2.0, 3.0);
  std::uniform_real_distribution<double> delta(0.001, 0.9);
  std::uniform_int_distribution<int> rows(1, 60);
  std::uniform_int_distribution<int> width(1, 12);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkArch arch = testing::small_arch(2, {static_cast<std::size_t>(width(rng))}, 1);
    const Dataset data = testing::random_dataset(rng, rows(rng), 2, 1);
    const VariationalParams phi = testing::random_params(rng, arch);
    Hyperparams h;
    h.beta = std::pow(10.0, log_beta(rng));
    h.delta = delta(rng);
    const auto noise = draw_noise_set(phi.size(), 1 + trial % 4, trial, StreamPurpose::kEvalNoise);
    const double bound = bound_full(data, phi, h, noise).bound_value;
    const double affine = affine_from_cost(mc_cost_full(data, phi, h, noise), data.size(), h);
    worst = std::max(worst, rel_err(bound, affine));
  }
  return {worst <= 1e-10, fmt("100 cases, worst rel err %.2e", worst)};
}

// ---- 3: cost and bound along a training trace are perfectly correlated.
Outcome correlation_claim() {
  const Dataset data = generate_demos(EnvSpec::pendulum(), 10, 0).data;
  ExperimentSettings s;
  Hyperparams h = s.hyper;
  h.epochs = 200;
  const TrainResult r = train(data, task_arch(s), h);
  if (r.status != TrainStatus::kOk) return {false, "training diverged: " + r.message};
  const CorrelationResult c = correlate_trace(r.trace, 999, 0);
  return {c.r >= 0.999999 && c.p_value <= 0.002,
          fmt("%zu points, r = %.12f, p = %.4f (999 permutations)", c.points, c.r, c.p_value)};
}

ExperimentSettings reduced_settings() {
  ExperimentSettings s;
  s.hyper.epochs = 1000;
  return s;
}

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> seeds(n);
  for (std::uint64_t i = 0; i < n; ++i) seeds[i] = i;
  return seeds;
}

// ---- 4: held-out risk stays under the bound.
Outcome bound_validity() {
  const EnvKind tasks[] = {EnvKind::kPendulum, EnvKind::kRacer};
  const auto seeds = seed_range(10);
  const auto rows = verify_bound_experiment(tasks, seeds, reduced_settings());
  std::size_t holds = 0;
  double min_gap = INFINITY;
  for (const BoundRow& r : rows) {
    if (r.failed) continue;
    if (r.report.holds) ++holds;
    min_gap = std::min(min_gap, r.report.bound_value - r.report.holdout_nll);
  }
  std::cout << bound_rows_table(rows);
  return {holds >= 19, fmt("bound held in %zu/%zu runs, smallest margin %.4f",
                           holds, rows.size(), min_gap)};
}

// ---- 5: Monte-Carlo KL against the closed form.
Outcome kl_cross_check() {
  const NetworkArch arch = testing::small_arch(2, {8}, 2);
  std::mt19937_64 rng(505);
  std::size_t inside = 0;
  double worst_z = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const VariationalParams phi = testing::random_params(rng, arch);
    const auto noise = draw_noise_set(phi.size(), 10000, trial, StreamPurpose::kEvalNoise);
    double sum = 0.0, sum_sq = 0.0;
    for (const NoiseDraw& n : noise) {
      const auto w = sample_weights(phi, n);
      const double c = log_q(w, phi) - log_prior(w);
      sum += c;
      sum_sq += c * c;
    }
    const double m = static_cast<double>(noise.size());
    const double mean = sum / m;
    const double se = std::sqrt((sum_sq / m - mean * mean) / (m - 1.0));
    const double z = std::abs(mean - closed_form_kl(phi)) / se;
    worst_z = std::max(worst_z, z);
    if (z <= 5.0) ++inside;
  }
  return {inside == 20, fmt("%zu/20 within 5 SE, largest deviation %.2f SE", inside, worst_z)};
}

// ---- 6: minibatch weights sum to one and the epoch sum recovers F(D).
Outcome minibatch_weights() {
  double worst_sum = 0.0;
  for (std::size_t b = 1; b <= 64; ++b) {
    double total = 0.0;
    for (std::size_t j = 1; j <= b; ++j) total += minibatch_weight(j, b);
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
  std::mt19937_64 rng(606);
  double worst_cost = 0.0;
  const NetworkArch arch = testing::small_arch(2, {10, 5}, 1);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const Dataset data = testing::random_dataset(rng, 60 + trial, 2, 1);
    const VariationalParams phi = testing::random_params(rng, arch);
    Hyperparams h;
    h.beta = 0.5 + static_cast<double>(trial);
    const std::size_t batches = 1 + trial % 20;
    const auto noise = draw_noise_set(phi.size(), 2, trial, StreamPurpose::kTrainNoise);
    const auto idx = minibatch_indices(data.size(), batches, trial, 0);
    double sum = 0.0;
    for (std::size_t j = 1; j <= batches; ++j) {
      sum += mc_cost_minibatch(data.subset(idx[j - 1]), j, batches, phi, h, noise);
    }
    worst_cost = std::max(worst_cost, rel_err(sum, mc_cost_full(data, phi, h, noise)));
  }
  return {worst_sum <= 1e-12 && worst_cost <= 1e-10,
          fmt("max |sum theta - 1| = %.2e over B=1..64, epoch-sum rel err %.2e",
              worst_sum, worst_cost)};
}

// ---- 7: variational policy against the MSE baseline on shifted dynamics.
Outcome generalization_claim() {
  const auto seeds = seed_range(10);
  const ExperimentSettings s = reduced_settings();
  bool any = false;
  std::string detail;
  for (EnvKind kind : {EnvKind::kPendulum, EnvKind::kRacer}) {
    const auto rows = generalization_experiment(kind, canonical_variant_overrides(kind), seeds, s);
    std::cout << generalization_table(kind, rows);
    const GeneralizationSummary g = summarize(rows);
    const bool ok = g.vi_wins >= 7 && g.vi_close_to_expert && g.dnn_close_to_expert;
    any = any || ok;
    detail += fmt("%s: VI wins %zu/%zu, VI %s / DNN %s expert; ", env_name(kind).c_str(),
                  g.vi_wins, g.runs, g.vi_close_to_expert ? "near" : "far from",
                  g.dnn_close_to_expert ? "near" : "far from");
  }
  detail.resize(detail.size() - 2);
  return {any, detail};
}

// ---- 8: likelihood dominance ordering across the sweep cells.
Outcome sensitivity_claim() {
  SweepConfig cfg;
  const ExperimentSettings s = reduced_settings();
  bool residual_order = true, returns_worst = true;
  std::size_t holds = 0, runs = 0;
  std::string detail;
  for (EnvKind kind : {EnvKind::kPendulum, EnvKind::kRacer}) {
    const auto rows = sensitivity_sweep(cfg, kind, canonical_variant_overrides(kind), s);
    std::cout << sweep_table(kind, rows);
    const auto cells = summarize(rows);
    const SweepCellSummary& c1 = cells.front();
    const SweepCellSummary& c3 = cells.back();
    residual_order = residual_order && c1.mean_train_residual > c3.mean_train_residual;
    for (const auto& c : cells) {
      holds += c.holds;
      runs += c.runs;
      if (&c == &c1) continue;
      returns_worst = returns_worst && c1.mean_return_original < c.mean_return_original &&
                      c1.mean_return_variant < c.mean_return_variant;
    }
    for (const SweepRow& r : rows) {
      if (r.failed) ++runs;
    }
    detail += fmt("%s residual C1 %.4g vs C3 %.4g; ", env_name(kind).c_str(),
                  c1.mean_train_residual, c3.mean_train_residual);
  }
  detail += fmt("C1 returns worst: %s; bounds held %zu/%zu", returns_worst ? "yes" : "no",
                holds, runs);
  return {residual_order && returns_worst && holds == runs, detail};
}

// ---- 9: every command reproduces byte-identical files.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "pacvi_acceptance_determinism";
  const std::vector<std::string> commands = {
      "gen-demos --env pendulum --episodes 4 --seed 3 --out demos.csv",
      "gen-demos --env racer --episodes 2 --seed 1 --variant mass=1.6 --out val.csv",
      "train --data demos.csv --out ck.json --epochs 3 --hidden 16,8 --seed 3",
      "bound --data demos.csv --checkpoint ck.json --holdout val.csv --out bound.json",
      "experiment correlate --trace ck.trace.csv --out corr.json",
      "experiment verify-bound --seeds 0,1 --episodes 3 --epochs 2 --hidden 6 "
      "--parallel 1 --out vb.json",
      "experiment generalize --env racer --seeds 0,1 --episodes 2 --epochs 2 --hidden 6 "
      "--parallel 1 --out gen.json",
      "experiment sweep --env pendulum --seeds 0 --episodes 3 --epochs 2 --hidden 6 "
      "--parallel 1 --out sweep.json",
  };
  auto run_all = [&]() {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::map<std::string, std::string> files;
    for (std::size_t i = 0; i < commands.size(); ++i) {
      const std::string out = "stdout" + std::to_string(i) + ".txt";
      const std::string cmd = "cd '" + dir.string() + "' && '" PACVI_CLI_PATH "' " +
                              commands[i] + " > " + out + " 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        files["failed"] = commands[i];
        return files;
      }
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      files[entry.path().filename().string()] = read_text_file(entry.path());
    }
    return files;
  };
  const auto first = run_all();
  const auto second = run_all();
  fs::remove_all(dir);
  if (first.count("failed")) return {false, "command failed: " + first.at("failed")};
  std::size_t differing = 0;
  std::string names;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) {
      ++differing;
      names += " " + name;
    }
  }
  return {differing == 0 && first.size() == second.size(),
          fmt("%zu commands, %zu files compared, %zu differ", commands.size(),
              first.size(), differing) + names};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> check;
};

}  // namespace
}  // namespace pacvi

int main(int argc, char** argv) {
  using namespace pacvi;
  CLI::App app{"pacvi acceptance checks"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criteria to run (default: all)")
      ->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "gradient correctness", 30, gradient_correctness},
      {2, "cost/bound affine identity", 10, affine_identity},
      {3, "cost/bound correlation", 300, correlation_claim},
      {4, "bound validity", 1800, bound_validity},
      {5, "KL cross-check", 30, kl_cross_check},
      {6, "minibatch weights", 30, minibatch_weights},
      {7, "generalization ordering", 3600, generalization_claim},
      {8, "likelihood-dominance sensitivity", 3600, sensitivity_claim},
      {9, "determinism", 300, determinism},
  };
  int failures = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name
              << "): " << o.detail << fmt(" [%.1f s of %.0f s]", secs, c.budget_s)
              << (in_time ? "" : " over time budget") << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
