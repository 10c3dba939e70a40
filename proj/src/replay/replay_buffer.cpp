#include "romo/replay/replay_buffer.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace romo {

const Vector& Trajectory::state(int k) const {
  if (k < 1 || k > horizon() + 1)
    throw ContractError("Trajectory::state: index " + std::to_string(k) + " outside 1.." + std::to_string(horizon() + 1));
  return k <= horizon() ? steps[k - 1].state : steps.back().next_state;
}

const Vector& Trajectory::achieved_goal(int k) const {
  require(k >= 1 && k <= horizon() + 1, "Trajectory::achieved_goal: index out of range");
  return achieved_goals[k - 1];
}

Trajectory build_trajectory(const GoalEnv& env, std::vector<Transition> steps) {
  require(!steps.empty(), "build_trajectory: no steps");
  Trajectory traj;
  traj.steps = std::move(steps);
  traj.achieved_goals.reserve(traj.steps.size() + 1);
  for (const auto& tr : traj.steps) traj.achieved_goals.push_back(env.phi(tr.state));
  traj.achieved_goals.push_back(env.phi(traj.steps.back().next_state));
  for (const auto& tr : traj.steps) {
    const double expected = env.reward(tr.next_state, tr.desired_goal);
    require(tr.reward == expected, "build_trajectory: step " + std::to_string(tr.t) + " stores reward " +
                                       std::to_string(tr.reward) + " but the environment gives " +
                                       std::to_string(expected));
  }
  validate_trajectory(traj, traj.horizon());
  return traj;
}

void validate_trajectory(const Trajectory& traj, int horizon) {
  require(traj.horizon() == horizon, "trajectory has " + std::to_string(traj.horizon()) + " steps, expected " +
                                         std::to_string(horizon));
  require(traj.achieved_goals.size() == traj.steps.size() + 1, "trajectory achieved-goal cache has wrong length");
  const Vector& goal = traj.goal();
  for (int i = 0; i < horizon; ++i) {
    const Transition& tr = traj.steps[i];
    require(tr.t == i + 1, "trajectory step " + std::to_string(i + 1) + " has t = " + std::to_string(tr.t));
    require(tr.desired_goal == goal, "trajectory step " + std::to_string(i + 1) + " has a different desired goal");
    require(tr.reward == 0.0 || tr.reward == -1.0, "trajectory step " + std::to_string(i + 1) + " reward not in {0,-1}");
    if (i + 1 < horizon) {
      require(tr.next_state == traj.steps[i + 1].state,
              "trajectory chaining broken: next_state of step " + std::to_string(i + 1) + " != state of step " +
                  std::to_string(i + 2));
    }
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int horizon) : capacity_(capacity), horizon_(horizon) {
  require(capacity > 0 && horizon > 0, "ReplayBuffer: capacity and horizon must be positive");
}

void ReplayBuffer::store(Trajectory traj) {
  validate_trajectory(traj, horizon_);
  traj.id = insertions_;
  for (auto& tr : traj.steps) tr.trajectory_id = traj.id;
  trajectories_.push_back(std::make_shared<const Trajectory>(std::move(traj)));
  ++insertions_;
  if (trajectories_.size() > capacity_) trajectories_.pop_front();
}

std::vector<SampledTransition> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (trajectories_.empty()) throw ContractError("ReplayBuffer::sample: buffer is empty");
  const std::size_t total = trajectories_.size() * static_cast<std::size_t>(horizon_);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::vector<SampledTransition> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = pick(rng);
    const auto& traj = trajectories_[idx / horizon_];
    out.push_back({traj->steps[idx % horizon_], traj});
  }
  return out;
}

namespace {

void write_row(std::ostream& out, const Vector& v) {
  for (double x : v) out << ',' << x;
}

}  // namespace

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) return;
  const Transition& first = trajectories.front().steps.front();
  out << "trajectory_id,t";
  const auto header = [&](const char* prefix, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out << ',' << prefix << i;
  };
  header("s", first.state.size());
  header("a", first.action.size());
  header("ns", first.next_state.size());
  header("g", first.desired_goal.size());
  out << ",reward\n" << std::setprecision(17);
  for (const auto& traj : trajectories) {
    for (const auto& tr : traj.steps) {
      out << traj.id << ',' << tr.t;
      write_row(out, tr.state);
      write_row(out, tr.action);
      write_row(out, tr.next_state);
      write_row(out, tr.desired_goal);
      out << ',' << tr.reward << '\n';
    }
  }
}

void write_trajectories(std::ostream& out, const ReplayBuffer& buffer) {
  std::vector<Trajectory> copies;
  for (const auto& t : buffer.trajectories()) copies.push_back(*t);
  write_trajectories(out, copies);
}

std::vector<Trajectory> read_trajectories(std::istream& in, const GoalEnv& env) {
  const auto& spec = env.spec();
  std::string line;
  if (!std::getline(in, line)) return {};
  std::size_t columns = 1;
  for (char c : line) columns += c == ',';
  const std::size_t expected = 2 + 2 * spec.state_dim + spec.action_dim + spec.goal_dim + 1;
  require(columns == expected, "read_trajectories: header has " + std::to_string(columns) + " columns, " + env.name() +
                                   " needs " + std::to_string(expected));

  std::vector<Trajectory> out;
  std::vector<Transition> pending;
  TrajectoryId pending_id = 0;
  const auto flush = [&] {
    if (pending.empty()) return;
    Trajectory traj = build_trajectory(env, std::move(pending));
    traj.id = pending_id;
    for (auto& tr : traj.steps) tr.trajectory_id = pending_id;
    out.push_back(std::move(traj));
    pending.clear();
  };
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    require(cells.size() == expected, "read_trajectories: line " + std::to_string(line_no) + " has " +
                                          std::to_string(cells.size()) + " columns");
    const auto id = static_cast<TrajectoryId>(cells[0]);
    if (!pending.empty() && id != pending_id) flush();
    pending_id = id;
    Transition tr;
    tr.trajectory_id = id;
    tr.t = static_cast<int>(cells[1]);
    auto it = cells.begin() + 2;
    const auto take = [&](std::size_t n) {
      Vector v(it, it + static_cast<std::ptrdiff_t>(n));
      it += static_cast<std::ptrdiff_t>(n);
      return v;
    };
    tr.state = take(spec.state_dim);
    tr.action = take(spec.action_dim);
    tr.next_state = take(spec.state_dim);
    tr.desired_goal = take(spec.goal_dim);
    tr.reward = *it;
    pending.push_back(std::move(tr));
  }
  flush();
  return out;
}

}  // namespace romo
