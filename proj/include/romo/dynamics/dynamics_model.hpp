#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "romo/dynamics/policy.hpp"
#include "romo/nn/adam.hpp"
#include "romo/nn/mlp.hpp"
#include "romo/nn/normalizer.hpp"
#include "romo/replay/replay_buffer.hpp"

namespace romo {

struct DynamicsConfig {
  std::vector<std::size_t> hidden{256, 256, 256, 256};
  double learning_rate = 1e-3;
  int updates_per_batch = 2;
};

/// Learned delta model: next_state = state + M(normalize(state), normalize(action)).
///
/// The state and action normalizers are fit only through observe(), which the
/// training loop calls with real environment transitions.
class DynamicsModel {
 public:
  DynamicsModel(std::size_t state_dim, std::size_t action_dim, DynamicsConfig config, Rng& init_rng);
  DynamicsModel(const DynamicsModel& other);
  DynamicsModel& operator=(const DynamicsModel& other);

  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  const DynamicsConfig& config() const { return config_; }

  Vector predict_next(std::span<const double> state, std::span<const double> action) const;
  Matrix predict_next(const Matrix& states, const Matrix& actions) const;

  /// Batch mean of ||(next - state) - M(state, action)||^2; when grad is
  /// given it receives d loss / d params.
  double loss(const Matrix& states, const Matrix& actions, const Matrix& next_states, Vector* grad = nullptr) const;

  /// Runs updates_per_batch Adam steps on the loss and returns the loss
  /// measured before the first step.
  double update(const Matrix& states, const Matrix& actions, const Matrix& next_states);
  /// Same, reading only the (state, action, next_state) fields.
  double update(std::span<const SampledTransition> batch);

  /// Folds real transitions into the input normalizers.
  void observe(const Matrix& states, const Matrix& actions);
  void observe(const Trajectory& traj);

  Mlp& mlp() { return mlp_; }
  const Mlp& mlp() const { return mlp_; }
  const RunningNormalizer& state_normalizer() const { return state_norm_; }
  const RunningNormalizer& action_normalizer() const { return action_norm_; }
  void set_normalizers(RunningNormalizer state_norm, RunningNormalizer action_norm);

  /// Rows pushed through predict_next since construction.
  std::uint64_t prediction_count() const { return predictions_.load(std::memory_order_relaxed); }
  /// Step size for later updates; Adam moments are kept.
  void set_learning_rate(double lr);

  /// Adam steps taken.
  std::uint64_t update_count() const { return adam_.step; }
  /// Samples folded into the normalizers.
  std::uint64_t observed_count() const { return state_norm_.count(); }

 private:
  Matrix model_input(const Matrix& states, const Matrix& actions) const;
  double loss_on(const Matrix& input, const Matrix& states, const Matrix& next_states, Vector* grad) const;

  std::size_t state_dim_;
  std::size_t action_dim_;
  DynamicsConfig config_;
  Mlp mlp_;
  AdamState adam_;
  RunningNormalizer state_norm_;
  RunningNormalizer action_norm_;
  mutable std::atomic<std::uint64_t> predictions_{0};
};

struct RolloutParams {
  int n = 0;
  double noise_scale = 0.2;  // Gaussian std as a fraction of action_bound; 0 disables noise
  double action_bound = 1.0;
};

/// Virtual trajectory: states[0] is the start, states[j + 1] the model's
/// prediction from states[j] under actions[j].
struct VirtualRollout {
  Vector goal;
  std::vector<Vector> states;
  std::vector<Vector> actions;
  bool truncated = false;  // a prediction was non-finite; states holds the finite prefix
};

/// n-step model rollout under policy(s, goal) plus clipped Gaussian action
/// noise. Per step, noise for each action dimension is drawn from rng in
/// order; one normal_distribution lives for the whole rollout.
VirtualRollout rollout(const DynamicsModel& model, const Policy& policy, std::span<const double> start,
                       std::span<const double> goal, const RolloutParams& params, Rng& rng);

/// Lock-step batch of rollouts. Row i draws only from rngs[i], so the result
/// equals calling rollout() row by row with the same generators.
std::vector<VirtualRollout> rollout_batch(const DynamicsModel& model, const Policy& policy, const Matrix& starts,
                                          const Matrix& goals, const RolloutParams& params, std::span<Rng> rngs);

}  // namespace romo
