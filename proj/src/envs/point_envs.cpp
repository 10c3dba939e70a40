#include "romo/envs/point_envs.hpp"

#include <algorithm>
#include <cmath>

namespace romo {
namespace {

void read_point_mass(EnvOverrides& o, PointMassParams& p) {
  p.damping = take_override(o, "damping", p.damping);
  p.gain = take_override(o, "gain", p.gain);
  p.dt = take_override(o, "dt", p.dt);
  p.threshold = take_override(o, "threshold", p.threshold);
  p.horizon = static_cast<int>(take_override(o, "horizon", p.horizon));
  p.action_bound = take_override(o, "action_bound", p.action_bound);
}

void reject_leftovers(const EnvOverrides& o, const std::string& env) {
  if (!o.empty()) throw ContractError(env + ": unknown override '" + o.begin()->first + "'");
}

GoalEnvSpec point_spec(const PointMassParams& p, std::size_t state_dim) {
  require(p.threshold > 0.0 && p.horizon >= 1 && p.action_bound > 0.0, "point env: invalid constants");
  return {state_dim, 2, 2, p.action_bound, p.threshold, p.horizon};
}

// Clamps one coordinate into [lo, hi]; returns true if it hit a wall.
bool clamp_axis(double& x, double lo, double hi) {
  if (x < lo) {
    x = lo;
    return true;
  }
  if (x > hi) {
    x = hi;
    return true;
  }
  return false;
}

}  // namespace

PointReach::PointReach(Params params) : params_(params) { spec_ = point_spec(params_, 4); }

std::unique_ptr<PointReach> PointReach::from_overrides(EnvOverrides o) {
  Params p;
  read_point_mass(o, p);
  p.goal_low = take_override(o, "goal_low", p.goal_low);
  p.goal_high = take_override(o, "goal_high", p.goal_high);
  reject_leftovers(o, "point-reach");
  return std::make_unique<PointReach>(p);
}

Vector PointReach::phi(std::span<const double> state) const {
  check_state(state);
  return {state[0], state[1]};
}

ResetResult PointReach::reset(Rng& rng) const {
  std::uniform_real_distribution<double> u(params_.goal_low, params_.goal_high);
  ResetResult r;
  const double px = u(rng);
  const double py = u(rng);
  r.state = {px, py, 0.0, 0.0};
  const double gx = u(rng);
  const double gy = u(rng);
  r.goal = {gx, gy};
  return r;
}

Vector PointReach::transition(std::span<const double> s, std::span<const double> a) const {
  check_state(s);
  Vector n(s.begin(), s.end());
  for (int axis = 0; axis < 2; ++axis) {
    double& p = n[axis];
    double& v = n[2 + axis];
    v = params_.damping * v + params_.gain * a[axis];
    p += v * params_.dt;
    if (clamp_axis(p, 0.0, 1.0)) v = 0.0;
  }
  return n;
}

PointPush::PointPush(Params params) : params_(params) {
  spec_ = point_spec(params_, 6);
  require(params_.substeps >= 1 && params_.effector_radius > 0 && params_.block_radius > 0,
          "point-push: invalid contact constants");
}

std::unique_ptr<PointPush> PointPush::from_overrides(EnvOverrides o) {
  Params p;
  read_point_mass(o, p);
  p.effector_radius = take_override(o, "effector_radius", p.effector_radius);
  p.block_radius = take_override(o, "block_radius", p.block_radius);
  p.substeps = static_cast<int>(take_override(o, "substeps", p.substeps));
  p.block_low = take_override(o, "block_low", p.block_low);
  p.block_high = take_override(o, "block_high", p.block_high);
  p.object_range = take_override(o, "object_range", p.object_range);
  p.target_range = take_override(o, "target_range", p.target_range);
  reject_leftovers(o, "point-push");
  return std::make_unique<PointPush>(p);
}

Vector PointPush::phi(std::span<const double> state) const {
  check_state(state);
  return {state[2], state[3]};
}

ResetResult PointPush::reset(Rng& rng) const {
  const double contact = params_.effector_radius + params_.block_radius;
  std::uniform_real_distribution<double> block_dist(params_.block_low, params_.block_high);
  std::uniform_real_distribution<double> obj_offset(-params_.object_range, params_.object_range);
  std::uniform_real_distribution<double> goal_offset(-params_.target_range, params_.target_range);

  const double bx = block_dist(rng);
  const double by = block_dist(rng);
  double ex = 0.0;
  double ey = 0.0;
  do {
    ex = bx + obj_offset(rng);
    ey = by + obj_offset(rng);
  } while (std::hypot(ex - bx, ey - by) < contact + 0.01 || ex < params_.effector_radius ||
           ex > 1.0 - params_.effector_radius || ey < params_.effector_radius || ey > 1.0 - params_.effector_radius);
  double gx = 0.0;
  double gy = 0.0;
  do {
    gx = bx + goal_offset(rng);
    gy = by + goal_offset(rng);
  } while (std::hypot(gx - bx, gy - by) < 2.0 * params_.threshold || gx < params_.block_radius ||
           gx > 1.0 - params_.block_radius || gy < params_.block_radius || gy > 1.0 - params_.block_radius);
  return {{ex, ey, bx, by, 0.0, 0.0}, {gx, gy}};
}

Vector PointPush::transition(std::span<const double> s, std::span<const double> a) const {
  check_state(s);
  const double re = params_.effector_radius;
  const double rb = params_.block_radius;
  const double contact = re + rb;
  double ex = s[0], ey = s[1], bx = s[2], by = s[3];
  double vx = params_.damping * s[4] + params_.gain * a[0];
  double vy = params_.damping * s[5] + params_.gain * a[1];
  const double step = params_.dt / params_.substeps;
  for (int k = 0; k < params_.substeps; ++k) {
    ex += vx * step;
    ey += vy * step;
    if (clamp_axis(ex, re, 1.0 - re)) vx = 0.0;
    if (clamp_axis(ey, re, 1.0 - re)) vy = 0.0;
    const double dx = bx - ex;
    const double dy = by - ey;
    const double dist = std::hypot(dx, dy);
    if (dist >= contact) continue;
    double nx = 1.0;
    double ny = 0.0;
    if (dist > 0.0) {
      nx = dx / dist;
      ny = dy / dist;
    }
    bx = ex + nx * contact;
    by = ey + ny * contact;
    clamp_axis(bx, rb, 1.0 - rb);
    clamp_axis(by, rb, 1.0 - rb);
    // Block pinned against a wall: the effector stops at the contact surface.
    const double rx = ex - bx;
    const double ry = ey - by;
    const double rdist = std::hypot(rx, ry);
    if (rdist < contact && rdist > 0.0) {
      ex = bx + rx / rdist * contact;
      ey = by + ry / rdist * contact;
    }
  }
  return {ex, ey, bx, by, vx, vy};
}

LinearEnv::LinearEnv(Matrix a, Matrix b, std::size_t goal_dim, double threshold, int horizon, double action_bound,
                     double reset_range)
    : a_(std::move(a)), b_(std::move(b)), reset_range_(reset_range) {
  require(a_.rows() == a_.cols() && b_.rows() == a_.rows() && b_.cols() > 0, "linear: A must be n x n, B n x m");
  require(goal_dim >= 1 && goal_dim <= a_.rows(), "linear: goal_dim must be in [1, state_dim]");
  require(threshold > 0.0 && horizon >= 1 && action_bound > 0.0 && reset_range > 0.0, "linear: invalid constants");
  spec_ = {a_.rows(), b_.cols(), goal_dim, action_bound, threshold, horizon};
}

std::unique_ptr<LinearEnv> LinearEnv::standard() {
  // Lightly rotating, contracting position block driven by a velocity block.
  Matrix a = Matrix::from_rows({{0.95, 0.05, 0.1, 0.0},
                                {-0.05, 0.95, 0.0, 0.1},
                                {0.0, 0.0, 0.8, 0.0},
                                {0.0, 0.0, 0.0, 0.8}});
  Matrix b = Matrix::from_rows({{0.05, 0.0}, {0.0, 0.05}, {0.2, 0.0}, {0.0, 0.2}});
  return std::make_unique<LinearEnv>(std::move(a), std::move(b), 2);
}

std::unique_ptr<LinearEnv> LinearEnv::identity(std::size_t dim) {
  Matrix eye(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) eye(i, i) = 1.0;
  return std::make_unique<LinearEnv>(eye, eye, std::min<std::size_t>(2, dim));
}

std::unique_ptr<LinearEnv> LinearEnv::from_overrides(EnvOverrides o) {
  const bool identity_dynamics = take_override(o, "identity", 0.0) != 0.0;
  auto base = identity_dynamics ? identity(4) : standard();
  const double threshold = take_override(o, "threshold", base->spec().threshold);
  const int horizon = static_cast<int>(take_override(o, "horizon", base->spec().horizon));
  const double bound = take_override(o, "action_bound", base->spec().action_bound);
  const double range = take_override(o, "reset_range", base->reset_range_);
  reject_leftovers(o, "linear");
  return std::make_unique<LinearEnv>(base->a_, base->b_, base->spec().goal_dim, threshold, horizon, bound, range);
}

Vector LinearEnv::phi(std::span<const double> state) const {
  check_state(state);
  return {state.begin(), state.begin() + static_cast<std::ptrdiff_t>(spec_.goal_dim)};
}

ResetResult LinearEnv::reset(Rng& rng) const {
  std::uniform_real_distribution<double> u(-reset_range_, reset_range_);
  ResetResult r;
  r.state.resize(spec_.state_dim);
  for (double& x : r.state) x = u(rng);
  r.goal.resize(spec_.goal_dim);
  for (double& x : r.goal) x = u(rng);
  return r;
}

Vector LinearEnv::transition(std::span<const double> s, std::span<const double> a) const {
  check_state(s);
  Vector n(spec_.state_dim, 0.0);
  for (std::size_t i = 0; i < n.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) acc += a_(i, j) * s[j];
    for (std::size_t j = 0; j < a.size(); ++j) acc += b_(i, j) * a[j];
    n[i] = acc;
  }
  return n;
}

}  // namespace romo
