#pragma once

#include "romo/envs/goal_env.hpp"

namespace romo {

/// Constants shared by the planar point-mass environments. The workspace is
/// the unit square; velocity follows v <- damping * v + gain * a and position
/// p <- p + v * dt, with walls clamping the position and stopping motion
/// into them.
struct PointMassParams {
  double damping = 0.8;
  double gain = 0.1;
  double dt = 1.0;
  double threshold = 0.05;
  int horizon = 50;
  double action_bound = 1.0;
};

/// State (px, py, vx, vy); achieved goal (px, py). Start position and goal
/// are uniform in [goal_low, goal_high]^2, start velocity zero.
struct PointReachParams : PointMassParams {
  double goal_low = 0.1;
  double goal_high = 0.9;
};

class PointReach final : public GoalEnv {
 public:
  using Params = PointReachParams;

  explicit PointReach(Params params = {});
  static std::unique_ptr<PointReach> from_overrides(EnvOverrides overrides);

  std::string name() const override { return "point-reach"; }
  Vector phi(std::span<const double> state) const override;
  ResetResult reset(Rng& rng) const override;
  Vector transition(std::span<const double> state, std::span<const double> action) const override;

  const Params& params() const { return params_; }

 private:
  Params params_;
};

/// State (px, py, bx, by, vx, vy): effector position, block position,
/// effector velocity. Achieved goal (bx, by). The block has no momentum: when
/// the effector disk overlaps the block disk the block is displaced along the
/// contact normal until the disks touch. Motion is resolved in substeps so a
/// fast effector cannot tunnel through the block.
///
/// Reset: block uniform in [block_low, block_high]^2; effector at a box offset
/// of at most object_range from the block, not touching it; goal at a box
/// offset of at most target_range from the block with ||goal - block|| at
/// least 2 * threshold.
struct PointPushParams : PointMassParams {
  double effector_radius = 0.025;
  double block_radius = 0.025;
  int substeps = 10;
  double block_low = 0.25;
  double block_high = 0.75;
  double object_range = 0.15;
  double target_range = 0.15;
};

class PointPush final : public GoalEnv {
 public:
  using Params = PointPushParams;

  explicit PointPush(Params params = {});
  static std::unique_ptr<PointPush> from_overrides(EnvOverrides overrides);

  std::string name() const override { return "point-push"; }
  Vector phi(std::span<const double> state) const override;
  ResetResult reset(Rng& rng) const override;
  Vector transition(std::span<const double> state, std::span<const double> action) const override;

  const Params& params() const { return params_; }

 private:
  Params params_;
};

/// next_state = A * state + B * action; achieved goal = first goal_dim
/// coordinates. States and goals reset uniformly in [-reset_range, reset_range].
class LinearEnv final : public GoalEnv {
 public:
  LinearEnv(Matrix a, Matrix b, std::size_t goal_dim, double threshold = 0.05, int horizon = 50,
            double action_bound = 1.0, double reset_range = 0.5);

  /// The default diagnostic system: 4 states, 2 actions, 2 goal coordinates.
  static std::unique_ptr<LinearEnv> standard();
  /// A = I, B = I: step(s, a) = s + a.
  static std::unique_ptr<LinearEnv> identity(std::size_t dim);
  static std::unique_ptr<LinearEnv> from_overrides(EnvOverrides overrides);

  std::string name() const override { return "linear"; }
  Vector phi(std::span<const double> state) const override;
  ResetResult reset(Rng& rng) const override;
  Vector transition(std::span<const double> state, std::span<const double> action) const override;

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }

 private:
  Matrix a_;
  Matrix b_;
  double reset_range_;
};

}  // namespace romo
