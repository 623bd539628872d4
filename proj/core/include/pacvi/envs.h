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

#ifndef PACVI_ENVS_H_
#define PACVI_ENVS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pacvi/dataset.h"

namespace pacvi {

enum class EnvKind { kPendulum, kRacer };

std::string env_name(EnvKind kind);
EnvKind env_from_name(const std::string& name);

// Two-state, one-action systems integrated with semi-implicit Euler.
//   pendulum: state (theta, theta_dot),
//             theta_ddot = -(g/l) sin(theta) + u / (m l^2)
//   racer:    state (position, velocity), v_dot = (u - c v |v|) / m
struct EnvSpec {
  EnvKind kind = EnvKind::kPendulum;
  double mass = 1.0;
  double length = 1.0;   // pendulum only
  double gravity = 9.81;  // pendulum only
  double drag = 0.1;     // racer only
  double dt = 0.05;
  std::size_t horizon = 200;
  double action_limit = 5.0;

  static EnvSpec pendulum();
  static EnvSpec racer();
  static EnvSpec of_kind(EnvKind kind);

  void validate() const;

  friend bool operator==(const EnvSpec&, const EnvSpec&) = default;
};

inline constexpr std::size_t kStateDim = 2;
inline constexpr std::size_t kActionDim = 1;

using State = std::array<double, kStateDim>;

struct StepResult {
  State next{};
  double reward = 0.0;
};

// Applies the action (clamped to +-action_limit) for one dt.
StepResult step(const EnvSpec& spec, const State& state, double action);

// Scripted demonstrator, clamped to the action bounds.
//   pendulum: u = -12 theta - 3 theta_dot
//   racer:    u = 5 (2 - v)
double expert_action(const EnvSpec& spec, const State& state);
double expert_action_unclamped(const EnvSpec& spec, const State& state);

// Start state for episode `episode` drawn from stream (seed, kEnvStarts, episode).
State sample_start(const EnvSpec& spec, std::uint64_t seed,
                   std::uint64_t episode);

struct Transition {
  State state{};
  double action = 0.0;
  double reward = 0.0;
};

struct Trajectory {
  int episode = 0;
  std::vector<Transition> steps;
  double episodic_return = 0.0;
};

using Policy = std::function<double(std::span<const double>)>;

Trajectory rollout_episode(const EnvSpec& spec, const Policy& policy,
                           std::uint64_t seed, std::uint64_t episode);

// Mean episodic return over `episodes` seeded starts. Throws NumericError
// naming the step if the policy emits a non-finite action.
double rollout_policy(const EnvSpec& spec, const Policy& policy,
                      std::size_t episodes, std::uint64_t seed);

Policy expert_policy(const EnvSpec& spec);

struct Demonstrations {
  Dataset data;
  std::vector<Trajectory> trajectories;
};

Demonstrations generate_demos(const EnvSpec& spec, std::size_t episodes,
                              std::uint64_t seed);

// Keys: mass|m, length|l, gravity|g, drag|c, dt, horizon.
using Overrides = std::map<std::string, double>;

EnvSpec make_variant(const EnvSpec& spec, const Overrides& overrides);
Overrides canonical_variant_overrides(EnvKind kind);
EnvSpec canonical_variant(const EnvSpec& spec);

// Parses "k=v,k=v".
Overrides parse_overrides(const std::string& text);

// One JSON object per line per step.
std::string trajectories_to_jsonl(const std::vector<Trajectory>& trajectories);

}  // namespace pacvi

#endif  // PACVI_ENVS_H_
