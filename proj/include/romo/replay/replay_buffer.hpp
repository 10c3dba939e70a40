#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <vector>

#include "romo/envs/goal_env.hpp"

namespace romo {

using TrajectoryId = std::uint64_t;

/// One environment step (s_t, a_t, s_{t+1}, g, r_t) with its coordinates in
/// the owning trajectory. t runs from 1 to T.
struct Transition {
  Vector state;
  Vector action;
  Vector next_state;
  Vector desired_goal;
  double reward = -1.0;
  int t = 1;
  TrajectoryId trajectory_id = 0;
};

/// Exactly T chained transitions sharing one desired goal.
///
/// State indices follow the trajectory: s_k (1 <= k <= T) is the state of
/// transition k and s_{T+1} is the next_state of the last transition.
struct Trajectory {
  TrajectoryId id = 0;
  std::vector<Transition> steps;
  std::vector<Vector> achieved_goals;  // phi(s_1) .. phi(s_{T+1})

  int horizon() const { return static_cast<int>(steps.size()); }
  const Vector& goal() const { return steps.front().desired_goal; }
  const Vector& state(int k) const;
  const Vector& achieved_goal(int k) const;
};

/// Assembles a trajectory from consecutive steps, caching achieved goals and
/// checking that every stored reward matches the environment's reward.
Trajectory build_trajectory(const GoalEnv& env, std::vector<Transition> steps);

/// Throws ContractError describing the first broken invariant.
void validate_trajectory(const Trajectory& traj, int horizon);

struct SampledTransition {
  Transition transition;
  std::shared_ptr<const Trajectory> trajectory;
};

/// FIFO ring of whole trajectories. Sampling is uniform with replacement over
/// all stored (trajectory, step) pairs.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int horizon);

  std::size_t capacity() const { return capacity_; }
  int horizon() const { return horizon_; }
  std::size_t size() const { return trajectories_.size(); }
  bool empty() const { return trajectories_.empty(); }
  /// Trajectories ever stored, including evicted ones.
  std::uint64_t insertions() const { return insertions_; }
  /// Transitions ever stored.
  std::uint64_t stored_transitions() const { return insertions_ * static_cast<std::uint64_t>(horizon_); }

  /// Validates, assigns the next id, appends, and evicts the oldest
  /// trajectory when over capacity.
  void store(Trajectory traj);

  std::vector<SampledTransition> sample(std::size_t count, Rng& rng) const;

  const std::deque<std::shared_ptr<const Trajectory>>& trajectories() const { return trajectories_; }

 private:
  std::size_t capacity_;
  int horizon_;
  std::uint64_t insertions_ = 0;
  std::deque<std::shared_ptr<const Trajectory>> trajectories_;
};

// Columnar text dump, one CSV row per transition:
//   trajectory_id,t,s0..s{S-1},a0..a{A-1},ns0..ns{S-1},g0..g{G-1},reward
// Rows of one trajectory are contiguous and ordered by t.
void write_trajectories(std::ostream& out, const ReplayBuffer& buffer);
void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories(std::istream& in, const GoalEnv& env);

}  // namespace romo
