#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "romo/nn/matrix.hpp"

namespace romo {

struct GoalEnvSpec {
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::size_t goal_dim = 0;
  double action_bound = 1.0;
  double threshold = 0.05;  // goal-success radius
  int horizon = 50;         // T
};

struct StepResult {
  Vector next_state;
  double reward = -1.0;  // 0 on success, -1 otherwise
  Vector achieved_goal;
  bool success = false;
};

struct ResetResult {
  Vector state;
  Vector goal;
};

/// Named numeric constants overriding an environment's defaults.
using EnvOverrides = std::map<std::string, double>;

/// Sparse goal reward: 0 iff ||achieved - desired||_2 < threshold, else -1.
double compute_reward(std::span<const double> achieved, std::span<const double> desired, double threshold);

/// Goal-conditioned environment. Instances are immutable; the simulation
/// state is passed in and out explicitly, so only reset() draws randomness.
class GoalEnv {
 public:
  virtual ~GoalEnv() = default;

  virtual std::string name() const = 0;
  const GoalEnvSpec& spec() const { return spec_; }

  /// Achieved goal of a state.
  virtual Vector phi(std::span<const double> state) const = 0;
  virtual ResetResult reset(Rng& rng) const = 0;

  /// Clips the action to +-action_bound, advances the dynamics and scores the
  /// post-transition achieved goal against desired_goal.
  StepResult step(std::span<const double> state, std::span<const double> action,
                  std::span<const double> desired_goal) const;

  double reward(std::span<const double> next_state, std::span<const double> desired_goal) const {
    return compute_reward(phi(next_state), desired_goal, spec_.threshold);
  }

  Vector clip_action(std::span<const double> action) const;

  /// Deterministic dynamics with an already clipped action.
  virtual Vector transition(std::span<const double> state, std::span<const double> action) const = 0;

 protected:
  void check_state(std::span<const double> state) const;

  GoalEnvSpec spec_;
};

/// Reads name -> value overrides, rejecting names the environment does not know.
double take_override(EnvOverrides& remaining, const std::string& key, double fallback);

/// "point-reach", "point-push" or "linear".
std::unique_ptr<GoalEnv> make_env(std::string_view name, const EnvOverrides& overrides = {});

}  // namespace romo
