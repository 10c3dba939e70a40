#pragma once

#include <span>
#include <string>
#include <vector>

#include "romo/dynamics/dynamics_model.hpp"
#include "romo/envs/goal_env.hpp"
#include "romo/replay/replay_buffer.hpp"

namespace romo {

/// Where a relabeled goal is taken from on the transition's own trajectory.
enum class StartStrategy { Future, Episode, Final };

enum class RelabelKind { None, Her, Foresight, MherStyle };

inline constexpr int kMaxRolloutSteps = 16;

struct RelabelMode {
  RelabelKind kind = RelabelKind::None;
  StartStrategy strategy = StartStrategy::Future;
  int n = 0;  // virtual rollout depth

  static RelabelMode none() { return {}; }
  static RelabelMode her(StartStrategy s) { return {RelabelKind::Her, s, 0}; }
  static RelabelMode foresight(StartStrategy s, int n) { return {RelabelKind::Foresight, s, n}; }
  static RelabelMode mher_style(int n) { return {RelabelKind::MherStyle, StartStrategy::Future, n}; }

  bool uses_model() const { return kind == RelabelKind::Foresight || kind == RelabelKind::MherStyle; }
  void validate() const;
  bool operator==(const RelabelMode&) const = default;
};

std::string to_string(StartStrategy s);
StartStrategy start_strategy_from_string(const std::string& name);
/// "none", "her-future", "fr-episode-n3", "mher-n5", ...
std::string to_string(const RelabelMode& mode);

/// Index k of the source state s_k for transition t of a T-step trajectory.
/// Future: uniform in (t, T], or T when t = T. Episode: uniform in [1, T].
/// Final: T. Singleton ranges consume no randomness.
int select_start_index(StartStrategy strategy, int t, int horizon, Rng& rng);

/// Uniform index into a rollout of `count` states; draws nothing when count is 1.
std::size_t choose_rollout_state(std::size_t count, Rng& rng);

/// Replaces the goal with phi(s_k) and recomputes the reward on
/// phi(next_state). State, action and next_state are untouched.
Transition her_relabel(const Transition& transition, const Trajectory& trajectory, StartStrategy strategy,
                       const GoalEnv& env, Rng& rng);

/// Picks s_k as her_relabel does, rolls the model n steps from it under the
/// policy conditioned on the original goal, and takes the goal from a state
/// chosen uniformly among the rollout states (s_k included).
Transition fr_relabel(const Transition& transition, const Trajectory& trajectory, StartStrategy strategy, int n,
                      const GoalEnv& env, const DynamicsModel& model, const Policy& policy, Rng& rng,
                      double noise_scale = 0.2);

/// As fr_relabel but the rollout always starts at the transition's next_state.
Transition mher_style_relabel(const Transition& transition, const DynamicsModel& model, const Policy& policy, int n,
                              const GoalEnv& env, Rng& rng, double noise_scale = 0.2);

struct RelabelStats {
  std::size_t relabeled = 0;
  std::size_t rollouts = 0;
  std::size_t truncated_rollouts = 0;
  double mean_reward = 0.0;  // over the whole returned minibatch
};

struct RelabelContext {
  const GoalEnv* env = nullptr;
  const DynamicsModel* model = nullptr;
  const Policy* policy = nullptr;
  double noise_scale = 0.2;
};

/// Relabels each transition independently with probability replay_ratio.
///
/// Transition i draws one seed from rng and then uses only its own generator:
/// first the Bernoulli draw, then whatever the single-transition relabel
/// function for the mode draws. Model rollouts of the minibatch run in lock
/// step, which gives the same result as relabeling row by row.
std::vector<Transition> apply_relabeling(std::span<const SampledTransition> batch, const RelabelMode& mode,
                                         double replay_ratio, const RelabelContext& ctx, Rng& rng,
                                         RelabelStats* stats = nullptr);

}  // namespace romo
