#include "romo/relabel/relabel.hpp"

namespace romo {

void RelabelMode::validate() const {
  require(n >= 0 && n <= kMaxRolloutSteps,
          "relabel mode: rollout depth " + std::to_string(n) + " outside 0.." + std::to_string(kMaxRolloutSteps));
  require(uses_model() || n == 0, "relabel mode: rollout depth given for a mode without a model");
}

std::string to_string(StartStrategy s) {
  switch (s) {
    case StartStrategy::Future: return "future";
    case StartStrategy::Episode: return "episode";
    case StartStrategy::Final: return "final";
  }
  return "?";
}

StartStrategy start_strategy_from_string(const std::string& name) {
  if (name == "future") return StartStrategy::Future;
  if (name == "episode") return StartStrategy::Episode;
  if (name == "final") return StartStrategy::Final;
  throw ContractError("unknown start strategy '" + name + "' (future, episode, final)");
}

std::string to_string(const RelabelMode& mode) {
  switch (mode.kind) {
    case RelabelKind::None: return "none";
    case RelabelKind::Her: return "her-" + to_string(mode.strategy);
    case RelabelKind::Foresight: return "fr-" + to_string(mode.strategy) + "-n" + std::to_string(mode.n);
    case RelabelKind::MherStyle: return "mher-n" + std::to_string(mode.n);
  }
  return "?";
}

int select_start_index(StartStrategy strategy, int t, int horizon, Rng& rng) {
  if (horizon < 1 || t < 1 || t > horizon)
    throw ContractError("select_start_index: t = " + std::to_string(t) + " outside 1.." + std::to_string(horizon));
  int lo = 1;
  switch (strategy) {
    case StartStrategy::Final: return horizon;
    case StartStrategy::Future: lo = std::min(t + 1, horizon); break;
    case StartStrategy::Episode: lo = 1; break;
  }
  if (lo == horizon) return horizon;
  return std::uniform_int_distribution<int>(lo, horizon)(rng);
}

std::size_t choose_rollout_state(std::size_t count, Rng& rng) {
  require(count >= 1, "choose_rollout_state: empty rollout");
  if (count == 1) return 0;
  return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
}

namespace {

void check_membership(const Transition& tr, const Trajectory& traj) {
  if (tr.t < 1 || tr.t > traj.horizon() || traj.steps[tr.t - 1].state != tr.state ||
      traj.steps[tr.t - 1].next_state != tr.next_state)
    throw ContractError("relabel: transition t = " + std::to_string(tr.t) + " does not belong to the given trajectory");
}

Transition with_goal(const Transition& tr, Vector goal, const GoalEnv& env) {
  Transition out = tr;
  out.reward = env.reward(tr.next_state, goal);
  out.desired_goal = std::move(goal);
  return out;
}

RolloutParams rollout_params(int n, const GoalEnv& env, double noise_scale) {
  return {n, noise_scale, env.spec().action_bound};
}

Transition finish_rollout(const Transition& tr, const VirtualRollout& r, const GoalEnv& env, Rng& rng) {
  const std::size_t pick = choose_rollout_state(r.states.size(), rng);
  return with_goal(tr, env.phi(r.states[pick]), env);
}

}  // namespace

Transition her_relabel(const Transition& transition, const Trajectory& trajectory, StartStrategy strategy,
                       const GoalEnv& env, Rng& rng) {
  check_membership(transition, trajectory);
  const int k = select_start_index(strategy, transition.t, trajectory.horizon(), rng);
  return with_goal(transition, trajectory.achieved_goal(k), env);
}

Transition fr_relabel(const Transition& transition, const Trajectory& trajectory, StartStrategy strategy, int n,
                      const GoalEnv& env, const DynamicsModel& model, const Policy& policy, Rng& rng,
                      double noise_scale) {
  check_membership(transition, trajectory);
  const int k = select_start_index(strategy, transition.t, trajectory.horizon(), rng);
  const auto r = rollout(model, policy, trajectory.state(k), transition.desired_goal,
                         rollout_params(n, env, noise_scale), rng);
  return finish_rollout(transition, r, env, rng);
}

Transition mher_style_relabel(const Transition& transition, const DynamicsModel& model, const Policy& policy, int n,
                              const GoalEnv& env, Rng& rng, double noise_scale) {
  const auto r = rollout(model, policy, transition.next_state, transition.desired_goal,
                         rollout_params(n, env, noise_scale), rng);
  return finish_rollout(transition, r, env, rng);
}

std::vector<Transition> apply_relabeling(std::span<const SampledTransition> batch, const RelabelMode& mode,
                                         double replay_ratio, const RelabelContext& ctx, Rng& rng,
                                         RelabelStats* stats) {
  mode.validate();
  require(replay_ratio >= 0.0 && replay_ratio <= 1.0, "apply_relabeling: replay ratio must lie in [0, 1]");
  RelabelStats local;
  std::vector<Transition> out;
  out.reserve(batch.size());
  for (const auto& s : batch) out.push_back(s.transition);

  if (mode.kind != RelabelKind::None && !batch.empty()) {
    require(ctx.env != nullptr, "apply_relabeling: no environment");
    if (mode.uses_model()) {
      require(ctx.model != nullptr && ctx.policy != nullptr,
              "apply_relabeling: mode " + to_string(mode) + " needs a dynamics model and a policy");
    }
    const GoalEnv& env = *ctx.env;
    std::bernoulli_distribution coin(replay_ratio);

    std::vector<std::size_t> pending;
    std::vector<Rng> pending_rngs;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Rng own(rng());
      if (!coin(own)) continue;
      ++local.relabeled;
      const auto& tr = batch[i].transition;
      if (mode.kind == RelabelKind::Her) {
        out[i] = her_relabel(tr, *batch[i].trajectory, mode.strategy, env, own);
        continue;
      }
      pending.push_back(i);
      pending_rngs.push_back(std::move(own));
    }

    if (!pending.empty()) {
      const std::size_t sd = env.spec().state_dim;
      const std::size_t gd = env.spec().goal_dim;
      Matrix starts(pending.size(), sd);
      Matrix goals(pending.size(), gd);
      for (std::size_t j = 0; j < pending.size(); ++j) {
        const auto& tr = batch[pending[j]].transition;
        const Vector* start = &tr.next_state;
        if (mode.kind == RelabelKind::Foresight) {
          const Trajectory& traj = *batch[pending[j]].trajectory;
          check_membership(tr, traj);
          start = &traj.state(select_start_index(mode.strategy, tr.t, traj.horizon(), pending_rngs[j]));
        }
        std::copy(start->begin(), start->end(), starts.row(j).begin());
        std::copy(tr.desired_goal.begin(), tr.desired_goal.end(), goals.row(j).begin());
      }
      const auto rollouts = rollout_batch(*ctx.model, *ctx.policy, starts, goals,
                                          rollout_params(mode.n, env, ctx.noise_scale), pending_rngs);
      for (std::size_t j = 0; j < pending.size(); ++j) {
        ++local.rollouts;
        if (rollouts[j].truncated) ++local.truncated_rollouts;
        out[pending[j]] = finish_rollout(batch[pending[j]].transition, rollouts[j], env, pending_rngs[j]);
      }
    }
  }

  double sum = 0.0;
  for (const auto& tr : out) sum += tr.reward;
  local.mean_reward = out.empty() ? 0.0 : sum / static_cast<double>(out.size());
  if (stats) *stats = local;
  return out;
}

}  // namespace romo
