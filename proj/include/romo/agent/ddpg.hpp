#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "romo/dynamics/policy.hpp"
#include "romo/envs/goal_env.hpp"
#include "romo/nn/adam.hpp"
#include "romo/nn/mlp.hpp"
#include "romo/nn/normalizer.hpp"
#include "romo/replay/replay_buffer.hpp"

namespace romo {

struct AgentConfig {
  std::vector<std::size_t> hidden{256, 256, 256};
  double gamma = 0.98;
  double polyak = 0.05;  // target <- (1 - polyak) target + polyak main
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double action_penalty = 1.0;  // weight on mean ||pre-tanh action||^2
  double noise_scale = 0.2;     // exploration Gaussian std, fraction of action_bound
  double random_action_prob = 0.3;
  double norm_clip = 5.0;

  void validate() const;
};

/// Minibatch laid out as matrices: normalized network inputs plus rewards.
struct AgentBatch {
  Matrix obs_goal;       // [norm(s), norm(g)]
  Matrix next_obs_goal;  // [norm(s'), norm(g)]
  Matrix actions;        // a / action_bound
  Vector rewards;
};

/// Deterministic policy pi(s, g) = bound * tanh(actor(norm s, norm g)) and
/// critic Q(norm s, norm g, a / bound), each with a target copy.
///
/// Observation and goal normalizers are fit only by observe(), from real
/// trajectories: every state, every achieved goal and the desired goal.
class DdpgAgent final : public Policy {
 public:
  DdpgAgent(const GoalEnvSpec& env, AgentConfig config, Rng& init_rng);

  const AgentConfig& config() const { return config_; }
  const GoalEnvSpec& env_spec() const { return env_; }

  /// Deterministic batched policy, already scaled to the action bound.
  Matrix act(const Matrix& states, const Matrix& goals) const override;

  /// pi(s, g), or with explore: Gaussian noise, clip, then with probability
  /// random_action_prob a uniform action instead. was_random reports the last.
  Vector select_action(std::span<const double> state, std::span<const double> goal, bool explore, Rng& rng,
                       bool* was_random = nullptr) const;

  AgentBatch make_batch(std::span<const Transition> batch) const;

  /// r + gamma * Q'(s', pi'(s', g), g) clipped to [-1/(1-gamma), 0].
  Vector critic_targets(const AgentBatch& batch) const;
  /// Mean squared TD error; when grad is given it receives d loss / d critic params.
  double critic_loss(const AgentBatch& batch, Vector* grad = nullptr) const;
  /// -mean Q(s, pi(s, g), g) + action_penalty * mean ||pre-tanh||^2; gradient
  /// with respect to actor params.
  double actor_loss(const AgentBatch& batch, Vector* grad = nullptr) const;

  /// One Adam step each; return the loss measured before the step.
  double critic_update(std::span<const Transition> batch);
  double actor_update(std::span<const Transition> batch);
  double critic_update(const AgentBatch& batch);
  double actor_update(const AgentBatch& batch);
  void polyak_update();

  void observe(const Trajectory& traj);

  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  Mlp& target_actor() { return target_actor_; }
  Mlp& target_critic() { return target_critic_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& target_actor() const { return target_actor_; }
  const Mlp& target_critic() const { return target_critic_; }
  const RunningNormalizer& obs_normalizer() const { return obs_norm_; }
  const RunningNormalizer& goal_normalizer() const { return goal_norm_; }
  void set_normalizers(RunningNormalizer obs, RunningNormalizer goal);

  std::uint64_t critic_steps() const { return critic_adam_.step; }
  std::uint64_t actor_steps() const { return actor_adam_.step; }
  std::uint64_t polyak_steps() const { return polyak_steps_; }

 private:
  Matrix policy_input(const Matrix& states, const Matrix& goals) const;

  GoalEnvSpec env_;
  AgentConfig config_;
  Mlp actor_;
  Mlp critic_;
  Mlp target_actor_;
  Mlp target_critic_;
  AdamState actor_adam_;
  AdamState critic_adam_;
  RunningNormalizer obs_norm_;
  RunningNormalizer goal_norm_;
  std::uint64_t polyak_steps_ = 0;
};

/// Fraction of trials in which the deterministic policy reaches the goal
/// (reward 0) at any step of the episode.
double evaluate(const Policy& policy, const GoalEnv& env, int trials, Rng& rng);

}  // namespace romo
