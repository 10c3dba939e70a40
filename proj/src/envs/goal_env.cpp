#include "romo/envs/goal_env.hpp"

#include <algorithm>
#include <cmath>

#include "romo/envs/point_envs.hpp"

namespace romo {

double compute_reward(std::span<const double> achieved, std::span<const double> desired, double threshold) {
  require(achieved.size() == desired.size(), "compute_reward: achieved goal has " + std::to_string(achieved.size()) +
                                                 " entries, desired goal " + std::to_string(desired.size()));
  require(threshold > 0.0, "compute_reward: threshold must be positive");
  double sq = 0.0;
  for (std::size_t i = 0; i < achieved.size(); ++i) {
    const double d = achieved[i] - desired[i];
    sq += d * d;
  }
  return std::sqrt(sq) < threshold ? 0.0 : -1.0;
}

void GoalEnv::check_state(std::span<const double> state) const {
  require(state.size() == spec_.state_dim, name() + ": state has " + std::to_string(state.size()) +
                                               " entries, expected " + std::to_string(spec_.state_dim));
}

Vector GoalEnv::clip_action(std::span<const double> action) const {
  require(action.size() == spec_.action_dim, name() + ": action has " + std::to_string(action.size()) +
                                                 " entries, expected " + std::to_string(spec_.action_dim));
  Vector out(action.begin(), action.end());
  for (double& a : out) a = std::clamp(a, -spec_.action_bound, spec_.action_bound);
  return out;
}

StepResult GoalEnv::step(std::span<const double> state, std::span<const double> action,
                         std::span<const double> desired_goal) const {
  check_state(state);
  if (!all_finite(action)) throw NonFiniteError(name() + ": non-finite action");
  StepResult r;
  r.next_state = transition(state, clip_action(action));
  r.achieved_goal = phi(r.next_state);
  r.reward = compute_reward(r.achieved_goal, desired_goal, spec_.threshold);
  r.success = r.reward == 0.0;
  return r;
}

double take_override(EnvOverrides& remaining, const std::string& key, double fallback) {
  const auto it = remaining.find(key);
  if (it == remaining.end()) return fallback;
  const double v = it->second;
  remaining.erase(it);
  return v;
}

std::unique_ptr<GoalEnv> make_env(std::string_view name, const EnvOverrides& overrides) {
  if (name == "point-reach") return PointReach::from_overrides(overrides);
  if (name == "point-push") return PointPush::from_overrides(overrides);
  if (name == "linear") return LinearEnv::from_overrides(overrides);
  throw ContractError("unknown environment '" + std::string(name) + "'");
}

}  // namespace romo
