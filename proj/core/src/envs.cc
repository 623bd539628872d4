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

#include "pacvi/envs.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pacvi/errors.h"
#include "pacvi/random.h"

namespace pacvi {

namespace {

double wrap_angle(double theta) {
  double r = std::remainder(theta, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

void require_finite_state(const State& s) {
  if (!std::isfinite(s[0]) || !std::isfinite(s[1])) {
    throw NumericError("environment state is not finite");
  }
}

}  // namespace

std::string env_name(EnvKind kind) {
  return kind == EnvKind::kPendulum ? "pendulum" : "racer";
}

EnvKind env_from_name(const std::string& name) {
  if (name == "pendulum") return EnvKind::kPendulum;
  if (name == "racer") return EnvKind::kRacer;
  throw InputError("unknown environment '" + name +
                   "' (expected pendulum or racer)");
}

EnvSpec EnvSpec::pendulum() { return EnvSpec{}; }

EnvSpec EnvSpec::racer() {
  EnvSpec s;
  s.kind = EnvKind::kRacer;
  s.action_limit = 3.0;
  return s;
}

EnvSpec EnvSpec::of_kind(EnvKind kind) {
  return kind == EnvKind::kPendulum ? pendulum() : racer();
}

void EnvSpec::validate() const {
  if (!(mass > 0.0) || !(length > 0.0) || !(drag > 0.0) || !(dt > 0.0) ||
      !(gravity > 0.0) || !(action_limit > 0.0)) {
    throw ContractError("environment parameters must be positive");
  }
  if (horizon < 1) throw ContractError("environment horizon must be >= 1");
}

StepResult step(const EnvSpec& spec, const State& state, double action) {
  require_finite_state(state);
  if (!std::isfinite(action)) throw NumericError("action is not finite");
  const double u = std::clamp(action, -spec.action_limit, spec.action_limit);
  StepResult r;
  if (spec.kind == EnvKind::kPendulum) {
    const auto [theta, omega] = state;
    const double acc = -(spec.gravity / spec.length) * std::sin(theta) +
                       u / (spec.mass * spec.length * spec.length);
    const double omega_next = omega + spec.dt * acc;
    const double theta_next = wrap_angle(theta + spec.dt * omega_next);
    r.next = {theta_next, omega_next};
    r.reward = -(theta * theta + 0.1 * omega * omega + 0.001 * u * u);
  } else {
    const auto [pos, vel] = state;
    const double acc = (u - spec.drag * vel * std::abs(vel)) / spec.mass;
    const double vel_next = vel + spec.dt * acc;
    r.next = {pos + spec.dt * vel_next, vel_next};
    r.reward = vel_next * spec.dt;
  }
  require_finite_state(r.next);
  return r;
}

double expert_action_unclamped(const EnvSpec& spec, const State& state) {
  if (spec.kind == EnvKind::kPendulum) {
    return -12.0 * state[0] - 3.0 * state[1];
  }
  return 5.0 * (2.0 - state[1]);
}

double expert_action(const EnvSpec& spec, const State& state) {
  return std::clamp(expert_action_unclamped(spec, state), -spec.action_limit,
                    spec.action_limit);
}

State sample_start(const EnvSpec& spec, std::uint64_t seed,
                   std::uint64_t episode) {
  auto rng = make_stream(seed, StreamPurpose::kEnvStarts, {episode});
  if (spec.kind == EnvKind::kPendulum) {
    std::uniform_real_distribution<double> theta(-0.8, 0.8);
    std::uniform_real_distribution<double> omega(-0.5, 0.5);
    const double t = theta(rng);
    return {t, omega(rng)};
  }
  std::uniform_real_distribution<double> vel(0.0, 0.5);
  return {0.0, vel(rng)};
}

Trajectory rollout_episode(const EnvSpec& spec, const Policy& policy,
                           std::uint64_t seed, std::uint64_t episode) {
  spec.validate();
  Trajectory traj;
  traj.episode = static_cast<int>(episode);
  State s = sample_start(spec, seed, episode);
  traj.steps.reserve(spec.horizon);
  for (std::size_t t = 0; t < spec.horizon; ++t) {
    const double a = policy(s);
    if (!std::isfinite(a)) {
      throw NumericError("policy produced a non-finite action at step " +
                         std::to_string(t) + " of episode " +
                         std::to_string(episode));
    }
    const double u = std::clamp(a, -spec.action_limit, spec.action_limit);
    const StepResult r = step(spec, s, u);
    traj.steps.push_back({s, u, r.reward});
    traj.episodic_return += r.reward;
    s = r.next;
  }
  return traj;
}

double rollout_policy(const EnvSpec& spec, const Policy& policy,
                      std::size_t episodes, std::uint64_t seed) {
  if (episodes < 1) throw ContractError("rollout needs at least one episode");
  double total = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    total += rollout_episode(spec, policy, seed, e).episodic_return;
  }
  return total / static_cast<double>(episodes);
}

Policy expert_policy(const EnvSpec& spec) {
  return [spec](std::span<const double> s) {
    return expert_action(spec, State{s[0], s[1]});
  };
}

Demonstrations generate_demos(const EnvSpec& spec, std::size_t episodes,
                              std::uint64_t seed) {
  if (episodes < 1) throw ContractError("need at least one episode");
  Demonstrations demos;
  demos.data.input_dim = kStateDim;
  demos.data.output_dim = kActionDim;
  const Policy expert = expert_policy(spec);
  for (std::size_t e = 0; e < episodes; ++e) {
    Trajectory traj = rollout_episode(spec, expert, seed, e);
    for (const auto& tr : traj.steps) {
      const double a[1] = {tr.action};
      demos.data.add_row(tr.state, a, static_cast<int>(e));
    }
    demos.trajectories.push_back(std::move(traj));
  }
  return demos;
}

EnvSpec make_variant(const EnvSpec& spec, const Overrides& overrides) {
  EnvSpec out = spec;
  for (const auto& [key, value] : overrides) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ContractError("variant override " + key + "=" +
                          std::to_string(value) + " must be positive");
    }
    if (key == "mass" || key == "m") {
      out.mass = value;
    } else if (key == "length" || key == "l") {
      out.length = value;
    } else if (key == "gravity" || key == "g") {
      out.gravity = value;
    } else if (key == "drag" || key == "c") {
      out.drag = value;
    } else if (key == "dt") {
      out.dt = value;
    } else if (key == "horizon") {
      out.horizon = static_cast<std::size_t>(std::llround(value));
    } else {
      throw ContractError("unknown variant parameter '" + key + "'");
    }
  }
  out.validate();
  return out;
}

Overrides canonical_variant_overrides(EnvKind kind) {
  if (kind == EnvKind::kPendulum) return {{"mass", 1.5}, {"length", 0.7}};
  return {{"mass", 1.6}, {"drag", 0.35}};
}

EnvSpec canonical_variant(const EnvSpec& spec) {
  return make_variant(spec, canonical_variant_overrides(spec.kind));
}

Overrides parse_overrides(const std::string& text) {
  Overrides out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InputError("variant override '" + item + "' is not key=value");
    }
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != val.size()) {
      throw InputError("variant override '" + item + "' has a bad value");
    }
    out[key] = v;
  }
  return out;
}

std::string trajectories_to_jsonl(const std::vector<Trajectory>& trajectories) {
  std::string out;
  for (const auto& traj : trajectories) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto& s = traj.steps[t];
      nlohmann::ordered_json j;
      j["episode"] = traj.episode;
      j["t"] = t;
      j["state"] = {s.state[0], s.state[1]};
      j["action"] = {s.action};
      j["reward"] = s.reward;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace pacvi
