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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_config.h"
#include "pacvi/analysis.h"
#include "pacvi/dataset.h"
#include "pacvi/envs.h"
#include "pacvi/errors.h"
#include "pacvi/objective.h"
#include "pacvi/pac_bound.h"
#include "pacvi/serialization.h"
#include "pacvi/trainer.h"

namespace pacvi::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

// Thrown when a run finished but produced non-finite values; artifacts are
// already written when this propagates.
struct Diverged {
  std::string message;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(text)) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s[0] == '-') {
      throw InputError("bad seed '" + s + "' in --seeds");
    }
    seeds.push_back(v);
  }
  if (seeds.empty()) throw InputError("--seeds needs at least one seed");
  return seeds;
}

std::vector<std::size_t> parse_hidden(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& s : split_list(text)) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || v < 1) {
      throw InputError("bad layer width '" + s + "' in --hidden");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<SweepCell> parse_cells(const std::string& text) {
  std::vector<SweepCell> cells;
  for (const auto& [name, beta] : parse_overrides(text)) {
    cells.push_back({name, beta});
  }
  std::sort(cells.begin(), cells.end(),
            [](const SweepCell& a, const SweepCell& b) { return a.beta > b.beta; });
  return cells;
}

std::string replace_extension(const std::string& path, const std::string& ext) {
  std::filesystem::path p(path);
  p.replace_extension(ext);
  return p.string();
}

Json overrides_json(const Overrides& o) {
  Json j = Json::object();
  for (const auto& [k, v] : o) j[k] = v;
  return j;
}

std::string config_comment(const Json& config) {
  return "# pacvi-config " + config.dump() + "\n";
}

void write_csv_with_config(const std::string& path, const Json& config,
                           const std::string& body) {
  write_text_file(path, config_comment(config) + body);
}

void emit_json(const std::string& out, const Json& report) {
  if (out.empty()) {
    std::cout << dump_json(report);
  } else {
    write_text_file(out, dump_json(report));
  }
}

// Hyperparameters shared by train and the experiment harnesses.
struct TrainFlags {
  Hyperparams hyper;
  std::string hidden = "90,30,10";
  bool clip_off = false;

  void add_to(CLI::App* app) {
    app->add_option("--epochs", hyper.epochs, "Training epochs")->capture_default_str();
    app->add_option("--batches", hyper.batches, "Minibatches per epoch")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--lr", hyper.learning_rate, "Adam learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--beta", hyper.beta, "Likelihood variance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--delta", hyper.delta, "Bound confidence parameter")
        ->capture_default_str();
    app->add_option("--mc-samples", hyper.mc_samples, "Weight samples per training step")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--eval-mc-samples", hyper.eval_mc_samples,
                    "Weight samples for bound and holdout estimates")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--hidden", hidden, "Hidden layer widths")->capture_default_str();
    app->add_flag("--clip-off", clip_off, "Disable gradient-norm clipping");
  }

  Hyperparams resolved(std::uint64_t seed) const {
    Hyperparams h = hyper;
    h.seed = seed;
    if (clip_off) h.clip_norm = 0.0;
    h.validate();
    return h;
  }
};

// Every flag of the invoked subcommand with the value it resolved to.
Json& invocation_flags() {
  static Json flags = Json::object();
  return flags;
}

Json collect_flags(const CLI::App* sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      value = opt->results().back();
    } else {
      value = opt->get_default_str();
    }
    if (!value.empty()) j[name] = value;
  }
  return j;
}

Json base_config(const std::string& command) {
  Json j;
  j["command"] = command;
  j["version"] = kVersionString;
  j["flags"] = invocation_flags();
  return j;
}

// ---------------------------------------------------------------- gen-demos

struct GenDemosFlags {
  std::string env = "pendulum";
  std::string variant;
  std::size_t episodes = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string traj;
};

int run_gen_demos(const GenDemosFlags& f) {
  const EnvSpec spec = make_variant(EnvSpec::of_kind(env_from_name(f.env)),
                                    parse_overrides(f.variant));
  const std::string traj = f.traj.empty() ? replace_extension(f.out, ".jsonl") : f.traj;
  Json config = base_config("gen-demos");
  config["env"] = to_json(spec);
  config["variant"] = overrides_json(parse_overrides(f.variant));
  config["episodes"] = f.episodes;
  config["seed"] = f.seed;
  config["out"] = f.out;
  config["traj"] = traj;

  const Demonstrations demos = generate_demos(spec, f.episodes, f.seed);
  write_csv_with_config(f.out, config, dataset_to_csv(demos.data));
  Json head;
  head["config"] = config;
  write_text_file(traj, head.dump() + "\n" + trajectories_to_jsonl(demos.trajectories));
  std::cout << "wrote " << demos.data.size() << " rows to " << f.out << " ("
            << dataset_fingerprint(demos.data) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainCmdFlags {
  TrainFlags train;
  std::string data;
  std::string out;
  std::string trace;
  std::uint64_t seed = 0;
};

int run_train(const TrainCmdFlags& f) {
  const Dataset data = read_dataset_csv(f.data);
  const Hyperparams h = f.train.resolved(f.seed);
  NetworkArch arch;
  arch.input_dim = data.input_dim;
  arch.output_dim = data.output_dim;
  arch.hidden = parse_hidden(f.train.hidden);
  arch.validate();
  const std::string trace_path =
      f.trace.empty() ? replace_extension(f.out, ".trace.csv") : f.trace;

  Json config = base_config("train");
  config["data"] = f.data;
  config["data_fingerprint"] = dataset_fingerprint(data);
  config["arch"] = to_json(arch);
  config["hyperparams"] = to_json(h);
  config["out"] = f.out;
  config["trace"] = trace_path;

  std::ofstream trace_out(trace_path, std::ios::binary);
  if (!trace_out) throw InputError("cannot open " + trace_path + " for writing");
  trace_out << config_comment(config);
  TraceWriter writer(trace_out);
  TrainOptions opts;
  opts.writer = &writer;
  const TrainResult result = train(data, arch, h, opts);
  writer.flush();
  if (!trace_out) throw InputError("failed writing " + trace_path);

  save_checkpoint(f.out, Checkpoint{result.params, h, config});
  if (result.status == TrainStatus::kDiverged) throw Diverged{result.message};
  if (!result.trace.records.empty()) {
    const TraceRecord& last = result.trace.records.back();
    std::cout << "epoch " << last.epoch << " cost " << format_double(last.cost)
              << " bound " << format_double(last.bound) << "\n";
  }
  std::cout << "wrote " << f.out << " and " << trace_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- bound

struct BoundFlags {
  std::string data;
  std::string checkpoint;
  std::string holdout;
  std::optional<double> beta;
  std::optional<double> delta;
  std::optional<std::size_t> mc_samples;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_bound(const BoundFlags& f) {
  const Dataset data = read_dataset_csv(f.data);
  const Checkpoint ckpt = load_checkpoint(f.checkpoint);
  Hyperparams h = ckpt.hyperparams;
  if (f.beta) h.beta = *f.beta;
  if (f.delta) h.delta = *f.delta;
  if (f.mc_samples) h.eval_mc_samples = *f.mc_samples;
  if (f.seed) h.seed = *f.seed;
  h.validate();
  std::optional<Dataset> holdout;
  if (!f.holdout.empty()) holdout = read_dataset_csv(f.holdout);

  Json config = base_config("bound");
  config["data"] = f.data;
  config["data_fingerprint"] = dataset_fingerprint(data);
  config["checkpoint"] = f.checkpoint;
  config["holdout"] = f.holdout;
  config["beta"] = h.beta;
  config["delta"] = h.delta;
  config["mc_samples"] = h.eval_mc_samples;
  config["seed"] = h.seed;

  const BoundReport report =
      evaluate_bound(data, holdout ? &*holdout : nullptr, ckpt.params, h);
  Json j;
  j["config"] = config;
  j["report"] = to_json(report);
  emit_json(f.out, j);
  if (!f.out.empty()) {
    std::cout << "bound " << format_double(report.bound_value);
    if (report.has_holdout()) {
      std::cout << " holdout " << format_double(report.holdout_nll)
                << (report.holds ? " (holds)" : " (violated)");
    }
    std::cout << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- experiments

struct ExperimentFlags {
  TrainFlags train;
  std::string env;
  std::string variant;
  std::string seeds;
  std::size_t episodes = 10;
  double train_fraction = 0.8;
  std::size_t rollout_episodes = 10;
  std::size_t parallel = 1;
  std::string out;

  void add_to(CLI::App* app, const std::string& default_env,
              const std::string& default_seeds) {
    env = default_env;
    seeds = default_seeds;
    train.add_to(app);
    app->add_option("--env", env, "Task")->capture_default_str();
    app->add_option("--seeds", seeds, "Comma-separated run seeds")->capture_default_str();
    app->add_option("--episodes", episodes, "Demonstration episodes per run")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--parallel", parallel, "Worker threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--out", out, "Report JSON (table is always printed)");
  }

  ExperimentSettings settings() const {
    ExperimentSettings s;
    s.hidden = parse_hidden(train.hidden);
    s.hyper = train.resolved(0);
    s.episodes = episodes;
    s.train_fraction = train_fraction;
    s.rollout_episodes = rollout_episodes;
    s.parallel = parallel;
    return s;
  }

  Json config(const std::string& name, const ExperimentSettings& s) const {
    Json j = base_config("experiment " + name);
    j["settings"] = to_json(s);
    j["seeds"] = parse_seeds(seeds);
    return j;
  }
};

Overrides resolve_variant(EnvKind kind, const std::string& text) {
  return text.empty() ? canonical_variant_overrides(kind) : parse_overrides(text);
}

std::vector<EnvKind> resolve_tasks(const std::string& env) {
  if (env == "all") return {EnvKind::kPendulum, EnvKind::kRacer};
  return {env_from_name(env)};
}

void write_report(const std::string& out, Json report, const Json& config) {
  report["config"] = config;
  if (!out.empty()) write_text_file(out, dump_json(report));
}

struct CorrelateFlags {
  ExperimentFlags exp;
  std::string trace;
  std::size_t permutations = 999;
  std::uint64_t seed = 0;
};

int run_correlate(CorrelateFlags f) {
  TrainTrace trace;
  Json config;
  if (!f.trace.empty()) {
    trace = trace_from_csv(read_text_file(f.trace));
    config = base_config("experiment correlate");
    config["trace"] = f.trace;
  } else {
    const ExperimentSettings s = f.exp.settings();
    Hyperparams h = s.hyper;
    h.seed = f.seed;
    const EnvKind kind = env_from_name(f.exp.env);
    const Demonstrations demos = generate_demos(EnvSpec::of_kind(kind), s.episodes, f.seed);
    NetworkArch arch = task_arch(s);
    config = base_config("experiment correlate");
    config["env"] = env_name(kind);
    config["settings"] = to_json(s);
    config["seed"] = f.seed;
    const TrainResult r = train(demos.data, arch, h);
    if (r.status == TrainStatus::kDiverged) throw Diverged{r.message};
    trace = r.trace;
  }
  config["permutations"] = f.permutations;
  const CorrelationResult c = correlate_trace(trace, f.permutations, f.seed);
  Json j;
  j["points"] = c.points;
  j["r"] = c.r;
  j["p_value"] = c.p_value;
  j["permutations"] = c.permutations;
  write_report(f.exp.out, j, config);
  std::cout << "points " << c.points << " r " << format_double(c.r) << " p "
            << format_double(c.p_value) << "\n";
  return kExitOk;
}

template <typename Row>
void check_rows(const std::vector<Row>& rows) {
  for (const Row& r : rows) {
    if (r.failed) throw Diverged{"seed " + std::to_string(r.seed) + ": " + r.message};
  }
}

int run_verify_bound(const ExperimentFlags& f) {
  const ExperimentSettings s = f.settings();
  const auto tasks = resolve_tasks(f.env);
  const auto seeds = parse_seeds(f.seeds);
  Json config = f.config("verify-bound", s);
  config["env"] = f.env;
  const auto rows = verify_bound_experiment(tasks, seeds, s);
  write_report(f.out, bound_rows_to_json(rows), config);
  std::cout << bound_rows_table(rows);
  check_rows(rows);
  return kExitOk;
}

int run_generalize(const ExperimentFlags& f) {
  const ExperimentSettings s = f.settings();
  const EnvKind kind = env_from_name(f.env);
  const Overrides variant = resolve_variant(kind, f.variant);
  const auto seeds = parse_seeds(f.seeds);
  Json config = f.config("generalize", s);
  config["env"] = env_name(kind);
  config["variant"] = overrides_json(variant);
  const auto rows = generalization_experiment(kind, variant, seeds, s);
  write_report(f.out, generalization_to_json(kind, rows), config);
  std::cout << generalization_table(kind, rows);
  check_rows(rows);
  return kExitOk;
}

int run_sweep(const ExperimentFlags& f, const std::string& cells_text) {
  const ExperimentSettings s = f.settings();
  const EnvKind kind = env_from_name(f.env);
  const Overrides variant = resolve_variant(kind, f.variant);
  SweepConfig cfg;
  cfg.cells = parse_cells(cells_text);
  cfg.seeds = parse_seeds(f.seeds);
  cfg.validate();
  Json config = f.config("sweep", s);
  config["env"] = env_name(kind);
  config["variant"] = overrides_json(variant);
  Json cells = Json::array();
  for (const auto& c : cfg.cells) cells.push_back({{"name", c.name}, {"beta", c.beta}});
  config["cells"] = cells;
  const auto rows = sensitivity_sweep(cfg, kind, variant, s);
  write_report(f.out, sweep_to_json(kind, rows), config);
  std::cout << sweep_table(kind, rows);
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Variational inference policies with PAC-Bayes risk bounds"};
  app.set_version_flag("--version", kVersionString);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string unused_config;
  app.add_option("--config", unused_config,
                 "key=value file of flag defaults; command-line flags win");

  const auto env_check = CLI::IsMember({"pendulum", "racer"});

  GenDemosFlags gen;
  auto* gen_cmd = app.add_subcommand("gen-demos", "Roll out the scripted expert");
  gen_cmd->add_option("--env", gen.env, "Task")->check(env_check)->capture_default_str();
  gen_cmd->add_option("--variant", gen.variant, "Dynamics overrides k=v,...");
  gen_cmd->add_option("--episodes", gen.episodes, "Episodes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Seed for start states")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Dataset CSV")->required();
  gen_cmd->add_option("--traj", gen.traj, "Trajectory JSONL (default: <out>.jsonl)");

  TrainCmdFlags tr;
  auto* train_cmd = app.add_subcommand("train", "Fit the variational policy");
  tr.train.add_to(train_cmd);
  train_cmd->add_option("--data", tr.data, "Dataset CSV")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint JSON")->required();
  train_cmd->add_option("--trace", tr.trace, "Trace CSV (default: <out>.trace.csv)");
  train_cmd->add_option("--seed", tr.seed, "Run seed")->capture_default_str();

  BoundFlags bd;
  auto* bound_cmd = app.add_subcommand("bound", "Evaluate the risk bound of a checkpoint");
  bound_cmd->add_option("--data", bd.data, "Training dataset CSV")->required();
  bound_cmd->add_option("--checkpoint", bd.checkpoint, "Checkpoint JSON")->required();
  bound_cmd->add_option("--holdout", bd.holdout, "Held-out dataset CSV");
  bound_cmd->add_option("--beta", bd.beta, "Override the checkpoint's beta");
  bound_cmd->add_option("--delta", bd.delta, "Override the checkpoint's delta");
  bound_cmd->add_option("--mc-samples", bd.mc_samples, "Weight samples (default 30)");
  bound_cmd->add_option("--seed", bd.seed, "Noise seed (default: checkpoint seed)");
  bound_cmd->add_option("--out", bd.out, "Report JSON (default: stdout)");

  auto* exp_cmd = app.add_subcommand("experiment", "Run an experiment harness");
  exp_cmd->require_subcommand(1);

  CorrelateFlags cor;
  auto* cor_cmd = exp_cmd->add_subcommand("correlate", "Correlate training cost with the bound");
  cor.exp.train.hyper.epochs = 200;
  cor.exp.add_to(cor_cmd, "pendulum", "0");
  cor_cmd->add_option("--trace", cor.trace, "Existing trace CSV; trains when omitted");
  cor_cmd->add_option("--permutations", cor.permutations, "Permutation count")
      ->capture_default_str();
  cor_cmd->add_option("--seed", cor.seed, "Run and permutation seed")->capture_default_str();

  ExperimentFlags vb;
  auto* vb_cmd = exp_cmd->add_subcommand("verify-bound", "Held-out risk against the bound");
  vb.add_to(vb_cmd, "all", "0,1,2,3,4,5,6,7,8,9");

  ExperimentFlags gz;
  auto* gz_cmd = exp_cmd->add_subcommand("generalize", "Variant-task returns, VI vs MSE");
  gz.add_to(gz_cmd, "pendulum", "0,1,2,3,4,5,6,7,8,9");
  gz_cmd->add_option("--variant", gz.variant, "Dynamics overrides (default: canonical)");

  ExperimentFlags sw;
  std::string cells = "C1=1000,C2=1,C3=0.01";
  auto* sw_cmd = exp_cmd->add_subcommand("sweep", "Likelihood-dominance sensitivity");
  sw.add_to(sw_cmd, "pendulum", "0,1,2");
  sw_cmd->add_option("--variant", sw.variant, "Dynamics overrides (default: canonical)");
  sw_cmd->add_option("--cells", cells, "name=beta,...")->capture_default_str();

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config_args(std::move(args));
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const CLI::App* active = &app;
  while (!active->get_subcommands().empty()) active = active->get_subcommands().front();
  invocation_flags() = collect_flags(active);

  try {
    if (*gen_cmd) return run_gen_demos(gen);
    if (*train_cmd) return run_train(tr);
    if (*bound_cmd) return run_bound(bd);
    if (*cor_cmd) return run_correlate(cor);
    if (*vb_cmd) return run_verify_bound(vb);
    if (*gz_cmd) return run_generalize(gz);
    if (*sw_cmd) return run_sweep(sw, cells);
  } catch (const Diverged& d) {
    std::cerr << "diverged: " << d.message << "\n";
    return kExitDiverged;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace pacvi::cli

int main(int argc, char** argv) { return pacvi::cli::run(argc, argv); }
