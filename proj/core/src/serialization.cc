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

#include "pacvi/serialization.h"

#include <fstream>
#include <sstream>

#include "pacvi/errors.h"

namespace pacvi {

namespace {

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) {
    throw InputError(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

Json to_json(const NetworkArch& arch) {
  Json j;
  j["input_dim"] = arch.input_dim;
  j["hidden"] = arch.hidden;
  j["output_dim"] = arch.output_dim;
  j["activation"] = activation_name(arch.activation);
  return j;
}

NetworkArch arch_from_json(const Json& j) {
  NetworkArch arch;
  arch.input_dim = field<std::size_t>(j, "input_dim");
  arch.hidden = field<std::vector<std::size_t>>(j, "hidden");
  arch.output_dim = field<std::size_t>(j, "output_dim");
  arch.activation = activation_from_name(field<std::string>(j, "activation"));
  arch.validate();
  return arch;
}

Json to_json(const Hyperparams& h) {
  Json j;
  j["beta"] = h.beta;
  j["delta"] = h.delta;
  j["mc_samples"] = h.mc_samples;
  j["eval_mc_samples"] = h.eval_mc_samples;
  j["batches"] = h.batches;
  j["learning_rate"] = h.learning_rate;
  j["epochs"] = h.epochs;
  j["seed"] = h.seed;
  j["clip_norm"] = h.clip_norm;
  return j;
}

Hyperparams hyperparams_from_json(const Json& j) {
  Hyperparams h;
  h.beta = field<double>(j, "beta");
  h.delta = field<double>(j, "delta");
  h.mc_samples = field<std::size_t>(j, "mc_samples");
  h.eval_mc_samples = field<std::size_t>(j, "eval_mc_samples");
  h.batches = field<std::size_t>(j, "batches");
  h.learning_rate = field<double>(j, "learning_rate");
  h.epochs = field<std::size_t>(j, "epochs");
  h.seed = field<std::uint64_t>(j, "seed");
  h.clip_norm = field<double>(j, "clip_norm");
  h.validate();
  return h;
}

Json to_json(const EnvSpec& spec) {
  Json j;
  j["kind"] = env_name(spec.kind);
  j["mass"] = spec.mass;
  if (spec.kind == EnvKind::kPendulum) {
    j["length"] = spec.length;
    j["gravity"] = spec.gravity;
  } else {
    j["drag"] = spec.drag;
  }
  j["dt"] = spec.dt;
  j["horizon"] = spec.horizon;
  j["action_limit"] = spec.action_limit;
  return j;
}

Json to_json(const BoundReport& r) {
  Json j;
  j["rows"] = r.rows;
  j["mc_term"] = r.mc_term;
  j["complexity_term"] = r.complexity_term;
  j["empirical_nll_term"] = r.empirical_nll_term;
  j["confidence_term"] = r.confidence_term;
  j["slack_term"] = r.slack_term;
  j["bound_value"] = r.bound_value;
  if (r.has_holdout()) {
    j["holdout_nll"] = r.holdout_nll;
    j["holds"] = r.holds;
  } else {
    j["holdout_nll"] = nullptr;
    j["holds"] = nullptr;
  }
  j["delta"] = r.delta;
  j["confidence"] = r.confidence();
  j["mc_samples"] = r.mc_samples;
  j["seed"] = r.seed;
  return j;
}

Json checkpoint_to_json(const Checkpoint& ckpt) {
  const VariationalParams& phi = ckpt.params;
  Json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["arch"] = to_json(phi.arch);
  Json layers = Json::array();
  for (const auto& b : phi.arch.blocks()) {
    Json layer;
    layer["name"] = b.name;
    layer["shape"] = b.is_bias ? std::vector<std::size_t>{b.cols}
                               : std::vector<std::size_t>{b.rows, b.cols};
    layer["mu"] = std::vector<double>(phi.mu.begin() + b.offset,
                                      phi.mu.begin() + b.offset + b.size());
    layer["rho"] = std::vector<double>(phi.rho.begin() + b.offset,
                                       phi.rho.begin() + b.offset + b.size());
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  j["hyperparams"] = to_json(ckpt.hyperparams);
  j["seed"] = ckpt.hyperparams.seed;
  j["config"] = ckpt.config;
  return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
  const int version = field<int>(j, "format_version");
  if (version != kCheckpointFormatVersion) {
    throw InputError("unsupported checkpoint format_version " +
                     std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.params.arch = arch_from_json(field<Json>(j, "arch"));
  const auto blocks = ckpt.params.arch.blocks();
  const Json layers = field<Json>(j, "layers");
  if (!layers.is_array() || layers.size() != blocks.size()) {
    throw InputError("checkpoint has " + std::to_string(layers.size()) +
                     " layer entries, architecture needs " +
                     std::to_string(blocks.size()));
  }
  ckpt.params.mu.assign(ckpt.params.arch.parameter_count(), 0.0);
  ckpt.params.rho.assign(ckpt.params.arch.parameter_count(), 0.0);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto mu = field<std::vector<double>>(layers[k], "mu");
    const auto rho = field<std::vector<double>>(layers[k], "rho");
    if (mu.size() != blocks[k].size() || rho.size() != blocks[k].size()) {
      throw InputError("checkpoint layer " + blocks[k].name +
                       " has the wrong number of entries");
    }
    std::copy(mu.begin(), mu.end(), ckpt.params.mu.begin() + blocks[k].offset);
    std::copy(rho.begin(), rho.end(),
              ckpt.params.rho.begin() + blocks[k].offset);
  }
  ckpt.params.validate();
  ckpt.hyperparams = hyperparams_from_json(field<Json>(j, "hyperparams"));
  if (j.contains("config")) ckpt.config = j.at("config");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& ckpt) {
  write_text_file(path, dump_json(checkpoint_to_json(ckpt)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("checkpoint " + path.string() + " is not valid JSON: " +
                     e.what());
  }
  return checkpoint_from_json(j);
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw InputError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace pacvi
