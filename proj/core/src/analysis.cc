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

#include "pacvi/analysis.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

#include "pacvi/errors.h"
#include "pacvi/random.h"

namespace pacvi {

namespace {

// Runs fn(0..count-1) on up to `parallel` threads. Results are written by
// index, so the outcome does not depend on scheduling.
template <typename Fn>
void run_jobs(std::size_t count, std::size_t parallel, Fn fn) {
  const std::size_t workers = std::clamp<std::size_t>(parallel, 1, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct Standardized {
  std::vector<double> values;  // (v - mean) / sqrt(sum sq dev)
};

Standardized standardize(std::span<const double> v, const char* name) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  if (!(ss > 0.0)) {
    throw ContractError(std::string("pearson_r: series ") + name +
                        " has zero variance");
  }
  const double norm = std::sqrt(ss);
  Standardized s;
  s.values.reserve(v.size());
  for (double x : v) s.values.push_back((x - mean) / norm);
  return s;
}

void require_pair(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ContractError("pearson_r: series lengths differ (" +
                        std::to_string(xs.size()) + " vs " +
                        std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 2) throw ContractError("pearson_r: need at least 2 points");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<std::vector<double>> sampled_weights(
    const VariationalParams& phi, std::span<const NoiseDraw> noise) {
  if (noise.empty()) throw ContractError("predictive mean needs >= 1 sample");
  std::vector<std::vector<double>> out;
  out.reserve(noise.size());
  for (const auto& n : noise) out.push_back(sample_weights(phi, n));
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

std::vector<NoiseDraw> policy_noise(const VariationalParams& phi,
                                    const Hyperparams& h) {
  return draw_noise_set(phi.size(), h.eval_mc_samples, h.seed,
                        StreamPurpose::kEvalNoise, 1);
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

}  // namespace

double pearson_r(std::span<const double> xs, std::span<const double> ys) {
  require_pair(xs, ys);
  const auto x = standardize(xs, "x");
  const auto y = standardize(ys, "y");
  return std::clamp(dot(x.values, y.values), -1.0, 1.0);
}

double perm_pvalue(std::span<const double> xs, std::span<const double> ys,
                   std::size_t permutations, std::uint64_t seed) {
  require_pair(xs, ys);
  if (permutations < 100) {
    throw ContractError("perm_pvalue: need at least 100 permutations");
  }
  const auto x = standardize(xs, "x");
  auto y = standardize(ys, "y");
  const double observed = std::abs(dot(x.values, y.values));
  const double tol = 1e-12 * std::max(1.0, observed);
  auto rng = make_stream(seed, StreamPurpose::kPermutation);
  std::size_t extreme = 0;
  for (std::size_t k = 0; k < permutations; ++k) {
    std::shuffle(y.values.begin(), y.values.end(), rng);
    if (std::abs(dot(x.values, y.values)) >= observed - tol) ++extreme;
  }
  return static_cast<double>(extreme + 1) /
         static_cast<double>(permutations + 1);
}

CorrelationResult correlate_trace(const TrainTrace& trace,
                                  std::size_t permutations,
                                  std::uint64_t seed) {
  const auto costs = trace.costs();
  const auto bounds = trace.bounds();
  CorrelationResult out;
  out.points = costs.size();
  out.r = pearson_r(costs, bounds);
  out.p_value = perm_pvalue(costs, bounds, permutations, seed);
  out.permutations = permutations;
  return out;
}

Policy predictive_mean_policy(const VariationalParams& phi,
                              std::span<const NoiseDraw> noise) {
  auto weights = sampled_weights(phi, noise);
  return [arch = phi.arch, weights = std::move(weights)](
             std::span<const double> x) {
    double sum = 0.0;
    for (const auto& w : weights) sum += policy_forward(x, w, arch)[0];
    return sum / static_cast<double>(weights.size());
  };
}

Policy deterministic_policy(const NetworkArch& arch, std::vector<double> w) {
  return [arch, w = std::move(w)](std::span<const double> x) {
    return policy_forward(x, w, arch)[0];
  };
}

double predictive_residual(const Dataset& data, const VariationalParams& phi,
                           std::span<const NoiseDraw> noise) {
  if (data.empty()) throw ContractError("predictive_residual: empty dataset");
  const auto weights = sampled_weights(phi, noise);
  std::vector<double> mean(data.size() * data.output_dim, 0.0);
  for (const auto& w : weights) {
    const auto pred = policy_forward_batch(data.inputs, data.size(), w, phi.arch);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += pred[i];
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double r =
        data.actions[i] - mean[i] / static_cast<double>(weights.size());
    sq += r * r;
  }
  return sq / static_cast<double>(data.size());
}

Json to_json(const ExperimentSettings& s) {
  Json j;
  j["hidden"] = s.hidden;
  j["hyperparams"] = to_json(s.hyper);
  j["episodes"] = s.episodes;
  j["train_fraction"] = s.train_fraction;
  j["rollout_episodes"] = s.rollout_episodes;
  j["parallel"] = s.parallel;
  return j;
}

NetworkArch task_arch(const ExperimentSettings& s) {
  NetworkArch arch;
  arch.input_dim = kStateDim;
  arch.output_dim = kActionDim;
  arch.hidden = s.hidden;
  return arch;
}

std::uint64_t rollout_seed(std::uint64_t run_seed) {
  return splitmix64(run_seed ^ 0x726f6c6c6f7574ULL);
}

std::vector<BoundRow> verify_bound_experiment(
    std::span<const EnvKind> tasks, std::span<const std::uint64_t> seeds,
    const ExperimentSettings& settings) {
  std::vector<BoundRow> rows(tasks.size() * seeds.size());
  run_jobs(rows.size(), settings.parallel, [&](std::size_t i) {
    BoundRow& row = rows[i];
    row.task = tasks[i / seeds.size()];
    row.seed = seeds[i % seeds.size()];
    try {
      const EnvSpec spec = EnvSpec::of_kind(row.task);
      const auto demos = generate_demos(spec, settings.episodes, row.seed);
      const auto split = split_by_episode(demos.data, settings.train_fraction);
      row.train_rows = split.train.size();
      row.validation_rows = split.validation.size();
      Hyperparams h = settings.hyper;
      h.seed = row.seed;
      const TrainResult trained = train(split.train, task_arch(settings), h);
      if (trained.status != TrainStatus::kOk) {
        row.failed = true;
        row.message = trained.message;
        return;
      }
      row.report =
          evaluate_bound(split.train, &split.validation, trained.params, h);
    } catch (const std::exception& e) {
      row.failed = true;
      row.message = e.what();
    }
  });
  return rows;
}

std::vector<GeneralizationRow> generalization_experiment(
    EnvKind task, const Overrides& variant,
    std::span<const std::uint64_t> seeds, const ExperimentSettings& settings) {
  const EnvSpec original = EnvSpec::of_kind(task);
  const EnvSpec shifted = make_variant(original, variant);
  const NetworkArch arch = task_arch(settings);

  std::vector<GeneralizationRow> rows(seeds.size());
  run_jobs(rows.size(), settings.parallel, [&](std::size_t i) {
    GeneralizationRow& row = rows[i];
    row.seed = seeds[i];
    try {
      const auto demos = generate_demos(original, settings.episodes, row.seed);
      Hyperparams h = settings.hyper;
      h.seed = row.seed;
      const TrainResult vi = train(demos.data, arch, h);
      const BaselineResult dnn =
          train_baseline(demos.data, arch, h.learning_rate, h.epochs, h.seed,
                         h.batches, h.clip_norm);
      if (vi.status != TrainStatus::kOk || dnn.status != TrainStatus::kOk) {
        row.failed = true;
        row.message = vi.message.empty() ? dnn.message : vi.message;
        return;
      }
      const auto noise = policy_noise(vi.params, h);
      const Policy vi_policy = predictive_mean_policy(vi.params, noise);
      const Policy dnn_policy = deterministic_policy(arch, dnn.weights);
      const std::uint64_t rs = rollout_seed(row.seed);
      const std::size_t n = settings.rollout_episodes;
      row.expert_original = rollout_policy(original, expert_policy(original), n, rs);
      row.expert_variant = rollout_policy(shifted, expert_policy(shifted), n, rs);
      row.vi_original = rollout_policy(original, vi_policy, n, rs);
      row.vi_variant = rollout_policy(shifted, vi_policy, n, rs);
      row.dnn_original = rollout_policy(original, dnn_policy, n, rs);
      row.dnn_variant = rollout_policy(shifted, dnn_policy, n, rs);
      row.vi_wins = row.vi_variant >= row.dnn_variant;
    } catch (const std::exception& e) {
      row.failed = true;
      row.message = e.what();
    }
  });
  return rows;
}

bool within_fraction(double value, double reference, double fraction) {
  return std::abs(value - reference) <= fraction * std::abs(reference);
}

GeneralizationSummary summarize(std::span<const GeneralizationRow> rows) {
  GeneralizationSummary s;
  std::vector<double> eo, vo, dno, vv, dv;
  for (const auto& r : rows) {
    if (r.failed) continue;
    ++s.runs;
    if (r.vi_wins) ++s.vi_wins;
    eo.push_back(r.expert_original);
    vo.push_back(r.vi_original);
    dno.push_back(r.dnn_original);
    vv.push_back(r.vi_variant);
    dv.push_back(r.dnn_variant);
  }
  s.win_fraction = rows.empty() ? 0.0
                                : static_cast<double>(s.vi_wins) /
                                      static_cast<double>(rows.size());
  s.mean_expert_original = mean_of(eo);
  s.mean_vi_original = mean_of(vo);
  s.mean_dnn_original = mean_of(dno);
  s.mean_vi_variant = mean_of(vv);
  s.mean_dnn_variant = mean_of(dv);
  s.vi_close_to_expert =
      s.runs > 0 && within_fraction(s.mean_vi_original, s.mean_expert_original, 0.2);
  s.dnn_close_to_expert =
      s.runs > 0 && within_fraction(s.mean_dnn_original, s.mean_expert_original, 0.2);
  return s;
}

void SweepConfig::validate() const {
  if (cells.empty()) throw ContractError("sweep needs at least one cell");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!(cells[i].beta > 0.0)) throw ContractError("cell beta must be > 0");
    if (i > 0 && !(cells[i].beta < cells[i - 1].beta)) {
      throw ContractError("cell betas must strictly decrease from " +
                          cells.front().name + " to " + cells.back().name);
    }
  }
  if (seeds.empty()) throw ContractError("sweep needs at least one seed");
}

std::vector<SweepRow> sensitivity_sweep(const SweepConfig& cfg, EnvKind task,
                                        const Overrides& variant,
                                        const ExperimentSettings& settings) {
  cfg.validate();
  const EnvSpec original = EnvSpec::of_kind(task);
  const EnvSpec shifted = make_variant(original, variant);
  const NetworkArch arch = task_arch(settings);

  std::vector<SweepRow> rows(cfg.cells.size() * cfg.seeds.size());
  run_jobs(rows.size(), settings.parallel, [&](std::size_t i) {
    SweepRow& row = rows[i];
    const SweepCell& cell = cfg.cells[i / cfg.seeds.size()];
    row.cell = cell.name;
    row.beta = cell.beta;
    row.seed = cfg.seeds[i % cfg.seeds.size()];
    try {
      const auto demos = generate_demos(original, settings.episodes, row.seed);
      const auto split = split_by_episode(demos.data, settings.train_fraction);
      Hyperparams h = settings.hyper;
      h.seed = row.seed;
      h.beta = cell.beta;
      const TrainResult trained = train(split.train, arch, h);
      if (trained.status != TrainStatus::kOk) {
        row.failed = true;
        row.message = trained.message;
        return;
      }
      row.report =
          evaluate_bound(split.train, &split.validation, trained.params, h);
      row.train_nll_per_row = row.report.empirical_nll_term;
      const auto noise = policy_noise(trained.params, h);
      row.train_residual = predictive_residual(split.train, trained.params, noise);
      const Policy policy = predictive_mean_policy(trained.params, noise);
      const std::uint64_t rs = rollout_seed(row.seed);
      row.return_original =
          rollout_policy(original, policy, settings.rollout_episodes, rs);
      row.return_variant =
          rollout_policy(shifted, policy, settings.rollout_episodes, rs);
    } catch (const std::exception& e) {
      row.failed = true;
      row.message = e.what();
    }
  });
  return rows;
}

std::vector<SweepCellSummary> summarize(std::span<const SweepRow> rows) {
  std::vector<SweepCellSummary> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const auto& s) { return s.cell == r.cell; });
    if (it == out.end()) {
      out.push_back({r.cell, r.beta});
      it = out.end() - 1;
    }
    ++it->runs;
    if (r.failed) continue;
    it->mean_return_original += r.return_original;
    it->mean_return_variant += r.return_variant;
    it->mean_train_residual += r.train_residual;
    it->mean_train_nll_per_row += r.train_nll_per_row;
    it->mean_bound += r.report.bound_value;
    if (r.report.holds) ++it->holds;
  }
  for (auto& s : out) {
    std::size_t ok = 0;
    for (const auto& r : rows) ok += (r.cell == s.cell && !r.failed);
    if (ok == 0) continue;
    const double n = static_cast<double>(ok);
    s.mean_return_original /= n;
    s.mean_return_variant /= n;
    s.mean_train_residual /= n;
    s.mean_train_nll_per_row /= n;
    s.mean_bound /= n;
  }
  return out;
}

Json bound_rows_to_json(std::span<const BoundRow> rows) {
  Json runs = Json::array();
  std::size_t holds = 0;
  for (const auto& r : rows) {
    Json j;
    j["task"] = env_name(r.task);
    j["seed"] = r.seed;
    j["train_rows"] = r.train_rows;
    j["validation_rows"] = r.validation_rows;
    j["failed"] = r.failed;
    if (r.failed) {
      j["message"] = r.message;
    } else {
      j["report"] = to_json(r.report);
      if (r.report.holds) ++holds;
    }
    runs.push_back(std::move(j));
  }
  Json out;
  out["runs"] = std::move(runs);
  out["holds"] = holds;
  out["total"] = rows.size();
  return out;
}

Json generalization_to_json(EnvKind task,
                            std::span<const GeneralizationRow> rows) {
  Json runs = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["seed"] = r.seed;
    j["failed"] = r.failed;
    if (r.failed) {
      j["message"] = r.message;
    } else {
      j["expert_original"] = r.expert_original;
      j["expert_variant"] = r.expert_variant;
      j["vi_original"] = r.vi_original;
      j["vi_variant"] = r.vi_variant;
      j["dnn_original"] = r.dnn_original;
      j["dnn_variant"] = r.dnn_variant;
      j["vi_wins"] = r.vi_wins;
    }
    runs.push_back(std::move(j));
  }
  const GeneralizationSummary s = summarize(rows);
  Json summary;
  summary["runs"] = s.runs;
  summary["vi_wins"] = s.vi_wins;
  summary["win_fraction"] = s.win_fraction;
  summary["mean_expert_original"] = s.mean_expert_original;
  summary["mean_vi_original"] = s.mean_vi_original;
  summary["mean_dnn_original"] = s.mean_dnn_original;
  summary["mean_vi_variant"] = s.mean_vi_variant;
  summary["mean_dnn_variant"] = s.mean_dnn_variant;
  summary["vi_close_to_expert"] = s.vi_close_to_expert;
  summary["dnn_close_to_expert"] = s.dnn_close_to_expert;
  Json out;
  out["task"] = env_name(task);
  out["runs"] = std::move(runs);
  out["summary"] = std::move(summary);
  return out;
}

Json sweep_to_json(EnvKind task, std::span<const SweepRow> rows) {
  Json runs = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["cell"] = r.cell;
    j["beta"] = r.beta;
    j["seed"] = r.seed;
    j["failed"] = r.failed;
    if (r.failed) {
      j["message"] = r.message;
    } else {
      j["return_original"] = r.return_original;
      j["return_variant"] = r.return_variant;
      j["train_residual"] = r.train_residual;
      j["train_nll_per_row"] = r.train_nll_per_row;
      j["report"] = to_json(r.report);
    }
    runs.push_back(std::move(j));
  }
  Json cells = Json::array();
  for (const auto& s : summarize(rows)) {
    Json c;
    c["cell"] = s.cell;
    c["beta"] = s.beta;
    c["mean_return_original"] = s.mean_return_original;
    c["mean_return_variant"] = s.mean_return_variant;
    c["mean_train_residual"] = s.mean_train_residual;
    c["mean_train_nll_per_row"] = s.mean_train_nll_per_row;
    c["mean_bound"] = s.mean_bound;
    c["holds"] = s.holds;
    c["runs"] = s.runs;
    cells.push_back(std::move(c));
  }
  Json out;
  out["task"] = env_name(task);
  out["runs"] = std::move(runs);
  out["cells"] = std::move(cells);
  return out;
}

std::string bound_rows_table(std::span<const BoundRow> rows) {
  std::string out =
      "task      seed      holdout_nll        bound  holds\n";
  for (const auto& r : rows) {
    char buf[160];
    if (r.failed) {
      std::snprintf(buf, sizeof(buf), "%-8s %5llu  FAILED: %s\n",
                    env_name(r.task).c_str(),
                    static_cast<unsigned long long>(r.seed), r.message.c_str());
    } else {
      std::snprintf(buf, sizeof(buf), "%-8s %5llu  %15.6f %12.6f  %s\n",
                    env_name(r.task).c_str(),
                    static_cast<unsigned long long>(r.seed),
                    r.report.holdout_nll, r.report.bound_value,
                    r.report.holds ? "yes" : "NO");
    }
    out += buf;
  }
  return out;
}

std::string generalization_table(EnvKind task,
                                 std::span<const GeneralizationRow> rows) {
  std::string out = "task " + env_name(task) + "\n";
  out +=
      " seed     expert_o       vi_o      dnn_o   expert_v       vi_v      "
      "dnn_v  vi>=dnn\n";
  for (const auto& r : rows) {
    char buf[200];
    if (r.failed) {
      std::snprintf(buf, sizeof(buf), "%5llu  FAILED: %s\n",
                    static_cast<unsigned long long>(r.seed), r.message.c_str());
    } else {
      std::snprintf(buf, sizeof(buf),
                    "%5llu %10.3f %10.3f %10.3f %10.3f %10.3f %10.3f  %s\n",
                    static_cast<unsigned long long>(r.seed), r.expert_original,
                    r.vi_original, r.dnn_original, r.expert_variant,
                    r.vi_variant, r.dnn_variant, r.vi_wins ? "yes" : "no");
    }
    out += buf;
  }
  const auto s = summarize(rows);
  out += "win fraction " + fmt("%.2f", s.win_fraction) + " (" +
         std::to_string(s.vi_wins) + "/" + std::to_string(rows.size()) + ")\n";
  return out;
}

std::string sweep_table(EnvKind task, std::span<const SweepRow> rows) {
  std::string out = "task " + env_name(task) + "\n";
  out +=
      "cell        beta   return_o   return_v   residual  nll/row        "
      "bound  holds\n";
  for (const auto& s : summarize(rows)) {
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "%-5s %10.4g %10.3f %10.3f %10.5f %8.4f %12.4f  %zu/%zu\n",
                  s.cell.c_str(), s.beta, s.mean_return_original,
                  s.mean_return_variant, s.mean_train_residual,
                  s.mean_train_nll_per_row, s.mean_bound, s.holds, s.runs);
    out += buf;
  }
  return out;
}

}  // namespace pacvi
