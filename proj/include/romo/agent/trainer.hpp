#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "romo/agent/ddpg.hpp"
#include "romo/dynamics/dynamics_model.hpp"
#include "romo/relabel/relabel.hpp"

namespace romo {

struct TrainConfig {
  std::string env = "point-reach";
  EnvOverrides env_overrides;
  int horizon = 50;
  int episodes = 30;
  int trajectories_per_episode = 50;
  int updates_per_trajectory = 40;
  std::size_t batch_size = 256;
  std::size_t buffer_trajectories = 1000;
  double replay_ratio = 0.8;
  RelabelMode mode = RelabelMode::her(StartStrategy::Future);
  double rollout_noise = 0.2;
  AgentConfig agent;
  DynamicsConfig dynamics;
  int eval_trials = 10;
  std::uint64_t seed = 0;
  /// Stop after the first episode whose evaluation reaches this success
  /// rate; disabled when negative.
  double stop_at_success = -1.0;

  void validate() const;
};

struct MetricsRow {
  int episode = 0;
  std::uint64_t env_steps = 0;
  double success_rate = 0.0;
  double critic_loss = 0.0;  // means over the episode's update iterations
  double actor_loss = 0.0;
  double model_loss = 0.0;   // NaN for modes without a model
  double mean_relabeled_reward = 0.0;
  std::uint64_t truncated_rollouts = 0;

  bool operator==(const MetricsRow&) const = default;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;

  static const char* header();
  void write_csv(std::ostream& out) const;
  static MetricsLog read_csv(std::istream& in);
};

/// Instrumentation of the training schedule.
struct TrainCounters {
  std::uint64_t trajectories = 0;
  std::uint64_t iterations = 0;
  std::uint64_t batches_sampled = 0;
  std::uint64_t transitions_sampled = 0;
  std::uint64_t model_updates = 0;  // Adam steps on the dynamics model
  std::uint64_t relabel_passes = 0;
  std::uint64_t rollouts = 0;
  std::uint64_t critic_steps = 0;
  std::uint64_t actor_steps = 0;
  std::uint64_t polyak_steps = 0;
  std::vector<int> iterations_per_trajectory;
};

/// Raised when any step of training fails; the message names the episode,
/// trajectory and iteration.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Collect / update / evaluate loop. Each trajectory is stored and fed to the
/// normalizers, then updates_per_trajectory iterations run:
/// sample -> model updates (model modes only) -> relabel -> critic -> actor -> polyak.
/// Every episode ends with an evaluation and one metrics row.
class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  const TrainConfig& config() const { return config_; }
  const GoalEnv& env() const { return *env_; }
  DdpgAgent& agent() { return *agent_; }
  const DdpgAgent& agent() const { return *agent_; }
  /// Null for modes that do not use a model.
  const DynamicsModel* model() const { return model_.get(); }
  DynamicsModel* model() { return model_.get(); }
  const ReplayBuffer& buffer() const { return buffer_; }
  const TrainCounters& counters() const { return counters_; }
  const MetricsLog& log() const { return log_; }

  /// Collects, stores and trains on one trajectory.
  void run_trajectory();
  /// One episode plus its evaluation; returns the new metrics row.
  const MetricsRow& run_episode();
  /// All episodes (or until stop_at_success). on_episode runs after each row.
  const MetricsLog& train(const std::function<void(const MetricsRow&)>& on_episode = {});

 private:
  void update_iteration();

  TrainConfig config_;
  std::unique_ptr<GoalEnv> env_;
  Rng init_rng_;
  Rng env_rng_;
  Rng explore_rng_;
  Rng sample_rng_;
  Rng relabel_rng_;
  Rng eval_rng_;
  std::unique_ptr<DdpgAgent> agent_;
  std::unique_ptr<DynamicsModel> model_;
  ReplayBuffer buffer_;
  TrainCounters counters_;
  MetricsLog log_;
  int episode_ = 0;
  int trajectory_in_episode_ = 0;
  int iteration_ = 0;

  struct Accumulator {
    double critic = 0, actor = 0, model = 0, reward = 0;
    std::uint64_t iterations = 0, model_iterations = 0, truncated = 0;
  } acc_;
};

MetricsLog train(const TrainConfig& config);

}  // namespace romo
