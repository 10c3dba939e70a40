#include <doctest.h>

#include <cmath>
#include <map>

#include "romo/relabel/relabel.hpp"
#include "support/test_support.hpp"

using namespace romo;

namespace {

std::vector<SampledTransition> whole_buffer(const ReplayBuffer& buffer) {
  std::vector<SampledTransition> out;
  for (const auto& traj : buffer.trajectories())
    for (const auto& tr : traj->steps) out.push_back({tr, traj});
  return out;
}

ReplayBuffer random_buffer(const GoalEnv& env, int trajectories, Rng& rng) {
  ReplayBuffer buffer(static_cast<std::size_t>(trajectories), env.spec().horizon);
  for (int i = 0; i < trajectories; ++i) buffer.store(testing::collect_random(env, rng));
  return buffer;
}

bool close(const Vector& a, const Vector& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

// Step-by-step replay of select, roll out, choose using the true dynamics in
// place of the model and the same generator draws in the same order.
Vector oracle_goal(const LinearEnv& env, const Policy& policy, const Vector& start, const Vector& goal, int n,
                   Rng& rng) {
  std::vector<Vector> states{start};
  std::normal_distribution<double> noise(0.0, 0.2 * env.spec().action_bound);
  for (int j = 0; j < n; ++j) {
    const Matrix act = policy.act(Matrix::row_vector(states.back()), Matrix::row_vector(goal));
    Vector a(act.values().begin(), act.values().end());
    for (double& x : a) x = std::clamp(x + noise(rng), -1.0, 1.0);
    states.push_back(env.transition(states.back(), a));
  }
  std::size_t pick = 0;
  if (states.size() > 1) pick = std::uniform_int_distribution<std::size_t>(0, states.size() - 1)(rng);
  return env.phi(states[pick]);
}

}  // namespace

TEST_CASE("select_start_index: documented examples") {
  Rng rng(1);
  for (int t : {1, 17, 50}) CHECK(select_start_index(StartStrategy::Final, t, 50, rng) == 50);
  CHECK(select_start_index(StartStrategy::Future, 49, 50, rng) == 50);
  CHECK(select_start_index(StartStrategy::Future, 50, 50, rng) == 50);
  CHECK_THROWS_AS(select_start_index(StartStrategy::Episode, 0, 50, rng), ContractError);
  CHECK_THROWS_AS(select_start_index(StartStrategy::Episode, 51, 50, rng), ContractError);
}

TEST_CASE("select_start_index: index-domain laws over random t and T") {
  Rng rng(2);
  for (int i = 0; i < 20000; ++i) {
    const int horizon = std::uniform_int_distribution<int>(1, 80)(rng);
    const int t = std::uniform_int_distribution<int>(1, horizon)(rng);
    const int fut = select_start_index(StartStrategy::Future, t, horizon, rng);
    if (t < horizon) CHECK(fut > t);
    CHECK(fut <= horizon);
    const int ep = select_start_index(StartStrategy::Episode, t, horizon, rng);
    CHECK(ep >= 1);
    CHECK(ep <= horizon);
    CHECK(select_start_index(StartStrategy::Final, t, horizon, rng) == horizon);
  }
}

TEST_CASE("select_start_index: episode strategy is uniform over [1, T]") {
  Rng rng(3);
  std::map<int, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[select_start_index(StartStrategy::Episode, 10, 50, rng)];
  CHECK(counts.size() == 50);
  for (const auto& [k, c] : counts) {
    CHECK(k >= 1);
    CHECK(std::abs(static_cast<double>(c) / draws - 0.02) <= 0.005);
  }
}

TEST_CASE("select_start_index: future strategy is uniform over (t, T]") {
  Rng rng(4);
  std::map<int, int> counts;
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) ++counts[select_start_index(StartStrategy::Future, 44, 50, rng)];
  CHECK(counts.size() == 6);
  double chi2 = 0.0;
  for (const auto& [k, c] : counts) {
    CHECK(k >= 45);
    const double e = draws / 6.0;
    chi2 += (c - e) * (c - e) / e;
  }
  CHECK(chi2 < 20.5);  // 5 dof, p = 0.001
}

TEST_CASE("her_relabel: future picking k = t + 1 gives the own next achieved goal and reward 0") {
  const auto env = LinearEnv::standard();
  Rng rng(5);
  const auto traj = testing::collect_random(*env, rng);
  const Transition& tr = traj.steps[48];  // t = 49, so (t, T] = {50}
  const auto out = her_relabel(tr, traj, StartStrategy::Future, *env, rng);
  CHECK(out.desired_goal == env->phi(tr.next_state));
  CHECK(out.reward == 0.0);
  CHECK(out.state == tr.state);
  CHECK(out.action == tr.action);
  CHECK(out.next_state == tr.next_state);
}

TEST_CASE("her_relabel: final strategy uses phi(s_T) for every transition") {
  const auto env = LinearEnv::standard();
  Rng rng(6);
  const auto traj = testing::collect_random(*env, rng);
  const Vector expected = env->phi(traj.steps.back().state);
  for (const auto& tr : traj.steps) {
    const auto out = her_relabel(tr, traj, StartStrategy::Final, *env, rng);
    CHECK(out.desired_goal == expected);
    CHECK(out.reward == env->reward(tr.next_state, expected));
  }
}

TEST_CASE("her_relabel: a stationary trajectory relabels to reward 0 under every strategy") {
  const auto env = LinearEnv::standard();
  const auto traj = testing::stationary_trajectory(*env, Vector{0.1, 0.2, 0, 0}, Vector{0.4, 0.4});
  Rng rng(7);
  for (auto s : {StartStrategy::Future, StartStrategy::Episode, StartStrategy::Final})
    for (const auto& tr : traj.steps) CHECK(her_relabel(tr, traj, s, *env, rng).reward == 0.0);
}

TEST_CASE("her_relabel: a transition from another trajectory is rejected") {
  const auto env = LinearEnv::standard();
  Rng rng(8);
  const auto a = testing::collect_random(*env, rng);
  const auto b = testing::collect_random(*env, rng);
  CHECK_THROWS_AS(her_relabel(a.steps[3], b, StartStrategy::Final, *env, rng), ContractError);
}

TEST_CASE("fr_relabel: depth 0 reproduces her_relabel draw for draw") {
  const auto env = LinearEnv::standard();
  Rng rng(9);
  const auto traj = testing::collect_random(*env, rng);
  Rng init(1);
  DynamicsModel model(4, 2, DynamicsConfig{{16}, 1e-3, 2}, init);
  testing::SeekGoalPolicy policy;
  for (auto s : {StartStrategy::Future, StartStrategy::Episode, StartStrategy::Final}) {
    for (const auto& tr : traj.steps) {
      const auto seed = rng();
      Rng a(seed), b(seed);
      const auto her = her_relabel(tr, traj, s, *env, a);
      const auto fr = fr_relabel(tr, traj, s, 0, *env, model, policy, b);
      CHECK(her.desired_goal == fr.desired_goal);
      CHECK(her.reward == fr.reward);
      CHECK(a() == b());
    }
  }
}

TEST_CASE("fr_relabel: a zero-delta model gives her_relabel's goal for the same start draw") {
  const auto env = LinearEnv::standard();
  Rng rng(10);
  const auto traj = testing::collect_random(*env, rng);
  const auto model = testing::zero_model(4, 2);
  testing::SeekGoalPolicy policy;
  for (int n : {1, 3, 16}) {
    for (const auto& tr : traj.steps) {
      const auto seed = rng();
      Rng a(seed), b(seed);
      const auto her = her_relabel(tr, traj, StartStrategy::Episode, *env, a);
      const auto fr = fr_relabel(tr, traj, StartStrategy::Episode, n, *env, model, policy, b);
      CHECK(her.desired_goal == fr.desired_goal);
      CHECK(her.reward == fr.reward);
    }
  }
}

TEST_CASE("fr_relabel: matches a brute-force replay with the true linear dynamics") {
  const auto env = LinearEnv::standard();
  const auto model = testing::exact_linear_model(*env);
  testing::SeekGoalPolicy policy;
  Rng rng(11);
  const auto traj = testing::collect_random(*env, rng);
  for (auto s : {StartStrategy::Future, StartStrategy::Episode, StartStrategy::Final}) {
    for (const auto& tr : traj.steps) {
      const auto seed = rng();
      Rng a(seed), b(seed);
      const auto out = fr_relabel(tr, traj, s, 3, *env, model, policy, a);
      const int k = select_start_index(s, tr.t, traj.horizon(), b);
      const Vector expected = oracle_goal(*env, policy, traj.state(k), tr.desired_goal, 3, b);
      CHECK(close(out.desired_goal, expected, 1e-9));
      CHECK(out.reward == env->reward(tr.next_state, out.desired_goal));
      CHECK(a() == b());
    }
  }
}

TEST_CASE("fr_relabel: a truncated rollout chooses among the states it produced") {
  const auto env = LinearEnv::standard();
  auto model = testing::zero_model(4, 2);
  model.mlp().bias(model.mlp().num_layers() - 1)[0] = 1e308;
  testing::ConstantPolicy policy({0.0, 0.0});
  Rng rng(12);
  const auto traj = testing::collect_random(*env, rng);
  for (int i = 0; i < 200; ++i) {
    const auto out = fr_relabel(traj.steps[10], traj, StartStrategy::Episode, 8, *env, model, policy, rng);
    CHECK(all_finite(out.desired_goal));
    CHECK(out.reward == env->reward(traj.steps[10].next_state, out.desired_goal));
  }
}

TEST_CASE("mher_style_relabel: depth 0 always targets the own next state") {
  const auto env = LinearEnv::standard();
  Rng init(2);
  DynamicsModel model(4, 2, DynamicsConfig{{16}, 1e-3, 2}, init);
  testing::SeekGoalPolicy policy;
  Rng rng(13);
  const auto traj = testing::collect_random(*env, rng);
  for (const auto& tr : traj.steps) {
    const auto out = mher_style_relabel(tr, model, policy, 0, *env, rng);
    CHECK(out.desired_goal == env->phi(tr.next_state));
    CHECK(out.reward == 0.0);
  }
}

TEST_CASE("mher_style_relabel: a zero-delta model always yields reward 0") {
  const auto env = LinearEnv::standard();
  const auto model = testing::zero_model(4, 2);
  testing::SeekGoalPolicy policy;
  Rng rng(14);
  const auto traj = testing::collect_random(*env, rng);
  for (int n : {1, 5, 16})
    for (const auto& tr : traj.steps) CHECK(mher_style_relabel(tr, model, policy, n, *env, rng).reward == 0.0);
}

TEST_CASE("mher_style_relabel: two-step buffer matches a brute-force replay") {
  const auto base = LinearEnv::standard();
  const LinearEnv env(base->a(), base->b(), 2, 0.05, 2);
  const auto model = testing::exact_linear_model(env);
  testing::SeekGoalPolicy policy;
  Rng rng(15);
  const auto traj = testing::collect_random(env, rng);
  REQUIRE(traj.horizon() == 2);
  for (int n : {0, 1, 4}) {
    for (int rep = 0; rep < 50; ++rep) {
      for (const auto& tr : traj.steps) {
        const auto seed = rng();
        Rng a(seed), b(seed);
        const auto out = mher_style_relabel(tr, model, policy, n, env, a);
        CHECK(close(out.desired_goal, oracle_goal(env, policy, tr.next_state, tr.desired_goal, n, b), 1e-9));
      }
    }
  }
}

TEST_CASE("apply_relabeling: ratio 0 returns the minibatch unchanged") {
  const auto env = LinearEnv::standard();
  Rng rng(16);
  const auto buffer = random_buffer(*env, 3, rng);
  const auto batch = buffer.sample(200, rng);
  const auto model = testing::zero_model(4, 2);
  testing::SeekGoalPolicy policy;
  for (auto mode : {RelabelMode::her(StartStrategy::Future), RelabelMode::foresight(StartStrategy::Episode, 3),
                    RelabelMode::mher_style(2), RelabelMode::none()}) {
    const auto out = apply_relabeling(batch, mode, 0.0, {env.get(), &model, &policy}, rng);
    REQUIRE(out.size() == batch.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i].desired_goal == batch[i].transition.desired_goal);
      CHECK(out[i].reward == batch[i].transition.reward);
    }
  }
}

TEST_CASE("apply_relabeling: ratio 1 with final strategy sets every goal to phi(s_T)") {
  const auto env = LinearEnv::standard();
  Rng rng(17);
  const auto buffer = random_buffer(*env, 4, rng);
  const auto batch = buffer.sample(300, rng);
  const auto out = apply_relabeling(batch, RelabelMode::her(StartStrategy::Final), 1.0, {env.get()}, rng);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].desired_goal == batch[i].trajectory->achieved_goal(batch[i].trajectory->horizon()));
    CHECK(out[i].t == batch[i].transition.t);
  }
}

TEST_CASE("apply_relabeling: relabeled fraction follows the replay ratio") {
  const auto env = LinearEnv::standard();
  Rng rng(18);
  const auto buffer = random_buffer(*env, 20, rng);
  const auto batch = buffer.sample(100000, rng);
  RelabelStats stats;
  apply_relabeling(batch, RelabelMode::her(StartStrategy::Future), 0.8, {env.get()}, rng, &stats);
  CHECK(std::abs(static_cast<double>(stats.relabeled) / 100000.0 - 0.8) <= 0.01);
}

TEST_CASE("apply_relabeling: only goal and reward change, and rewards are recomputed exactly") {
  const auto env = make_env("point-push");
  Rng rng(19);
  const auto buffer = random_buffer(*env, 6, rng);
  const auto batch = buffer.sample(512, rng);
  Rng init(3);
  DynamicsModel model(6, 2, DynamicsConfig{{32, 32}, 1e-3, 2}, init);
  testing::SeekGoalPolicy policy;
  for (auto mode : {RelabelMode::her(StartStrategy::Episode), RelabelMode::foresight(StartStrategy::Future, 5),
                    RelabelMode::mher_style(5)}) {
    const auto out = apply_relabeling(batch, mode, 0.8, {env.get(), &model, &policy}, rng);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& in = batch[i].transition;
      CHECK(out[i].state == in.state);
      CHECK(out[i].action == in.action);
      CHECK(out[i].next_state == in.next_state);
      CHECK(out[i].t == in.t);
      CHECK(out[i].trajectory_id == in.trajectory_id);
      CHECK(out[i].reward == compute_reward(env->phi(in.next_state), out[i].desired_goal, env->spec().threshold));
    }
  }
}

TEST_CASE("apply_relabeling: batched rollouts equal per-transition relabeling") {
  const auto env = LinearEnv::standard();
  Rng rng(20);
  const auto buffer = random_buffer(*env, 5, rng);
  const auto batch = buffer.sample(256, rng);
  Rng init(4);
  DynamicsModel model(4, 2, DynamicsConfig{{32, 32}, 1e-3, 2}, init);
  testing::SeekGoalPolicy policy;
  for (auto mode : {RelabelMode::foresight(StartStrategy::Future, 4), RelabelMode::foresight(StartStrategy::Final, 2),
                    RelabelMode::mher_style(3), RelabelMode::her(StartStrategy::Episode)}) {
    Rng master(99), replay(99);
    const auto out = apply_relabeling(batch, mode, 0.8, {env.get(), &model, &policy}, master);
    std::bernoulli_distribution coin(0.8);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Rng own(replay());
      const auto& tr = batch[i].transition;
      Transition expected = tr;
      if (coin(own)) {
        if (mode.kind == RelabelKind::Her) expected = her_relabel(tr, *batch[i].trajectory, mode.strategy, *env, own);
        if (mode.kind == RelabelKind::Foresight)
          expected = fr_relabel(tr, *batch[i].trajectory, mode.strategy, mode.n, *env, model, policy, own);
        if (mode.kind == RelabelKind::MherStyle) expected = mher_style_relabel(tr, model, policy, mode.n, *env, own);
      }
      CHECK(out[i].desired_goal == expected.desired_goal);
      CHECK(out[i].reward == expected.reward);
    }
    CHECK(master() == replay());
  }
}

TEST_CASE("apply_relabeling: same inputs and seed give the same minibatch") {
  const auto env = LinearEnv::standard();
  Rng rng(21);
  const auto buffer = random_buffer(*env, 5, rng);
  const auto batch = buffer.sample(128, rng);
  Rng init(5);
  DynamicsModel model(4, 2, DynamicsConfig{{16}, 1e-3, 2}, init);
  testing::SeekGoalPolicy policy;
  Rng a(7), b(7);
  const auto mode = RelabelMode::foresight(StartStrategy::Episode, 5);
  const auto x = apply_relabeling(batch, mode, 0.8, {env.get(), &model, &policy}, a);
  const auto y = apply_relabeling(batch, mode, 0.8, {env.get(), &model, &policy}, b);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i].desired_goal == y[i].desired_goal);
}

TEST_CASE("apply_relabeling: start strategy, not the model, sets the failure proportion") {
  const auto env = make_env("point-reach");
  Rng rng(22);
  const auto buffer = random_buffer(*env, 10, rng);
  const auto batch = whole_buffer(buffer);
  const auto zero = testing::zero_model(4, 2);
  testing::SeekGoalPolicy policy;
  const RelabelContext ctx{env.get(), &zero, &policy};

  RelabelStats mher, her, fr;
  Rng a(1), b(2), c(2);
  apply_relabeling(batch, RelabelMode::mher_style(0), 1.0, ctx, a, &mher);
  apply_relabeling(batch, RelabelMode::her(StartStrategy::Episode), 1.0, ctx, b, &her);
  apply_relabeling(batch, RelabelMode::foresight(StartStrategy::Episode, 5), 1.0, ctx, c, &fr);
  CHECK(mher.mean_reward == 0.0);
  CHECK(fr.mean_reward == her.mean_reward);
  CHECK(her.mean_reward < -0.3);
}

TEST_CASE("apply_relabeling: configuration errors") {
  const auto env = LinearEnv::standard();
  Rng rng(23);
  const auto buffer = random_buffer(*env, 1, rng);
  const auto batch = buffer.sample(4, rng);
  testing::SeekGoalPolicy policy;
  CHECK_THROWS_AS(apply_relabeling(batch, RelabelMode::foresight(StartStrategy::Future, 3), 0.8, {env.get()}, rng),
                  ContractError);
  CHECK_THROWS_AS(apply_relabeling(batch, RelabelMode::mher_style(3), 0.8, {env.get(), nullptr, &policy}, rng),
                  ContractError);
  CHECK_THROWS_AS(apply_relabeling(batch, RelabelMode::her(StartStrategy::Future), 1.5, {env.get()}, rng),
                  ContractError);
  const auto zero = testing::zero_model(4, 2);
  CHECK_THROWS_AS(apply_relabeling(batch, RelabelMode::foresight(StartStrategy::Future, 17), 0.8,
                                   {env.get(), &zero, &policy}, rng),
                  ContractError);
}

TEST_CASE("relabel modes print and parse") {
  CHECK(to_string(RelabelMode::none()) == "none");
  CHECK(to_string(RelabelMode::her(StartStrategy::Future)) == "her-future");
  CHECK(to_string(RelabelMode::foresight(StartStrategy::Episode, 3)) == "fr-episode-n3");
  CHECK(to_string(RelabelMode::mher_style(5)) == "mher-n5");
  CHECK(start_strategy_from_string("final") == StartStrategy::Final);
  CHECK_THROWS_AS(start_strategy_from_string("last"), ContractError);
}
