#include <doctest.h>

#include <cmath>

#include "romo/dynamics/dynamics_model.hpp"
#include "romo/envs/point_envs.hpp"
#include "support/test_support.hpp"

using namespace romo;

namespace {

struct LinearData {
  Matrix states;
  Matrix actions;
  Matrix next;
};

LinearData linear_batch(const LinearEnv& env, std::size_t rows, Rng& rng) {
  const auto& spec = env.spec();
  LinearData d{Matrix(rows, spec.state_dim), Matrix(rows, spec.action_dim), Matrix(rows, spec.state_dim)};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (double& x : d.states.row(r)) x = u(rng);
    for (double& x : d.actions.row(r)) x = u(rng);
    const Vector n = env.transition(d.states.row(r), d.actions.row(r));
    std::copy(n.begin(), n.end(), d.next.row(r).begin());
  }
  return d;
}

// Mean squared residual recomputed with explicit loops over the parameter layout.
double oracle_loss(const DynamicsModel& model, const LinearData& d) {
  const Mlp& mlp = model.mlp();
  double total = 0.0;
  for (std::size_t r = 0; r < d.states.rows(); ++r) {
    Vector x = model.state_normalizer().apply(d.states.row(r));
    const Vector a = model.action_normalizer().apply(d.actions.row(r));
    x.insert(x.end(), a.begin(), a.end());
    for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
      const auto w = mlp.weights(l);
      const auto b = mlp.bias(l);
      Vector y(b.size());
      for (std::size_t o = 0; o < y.size(); ++o) {
        long double acc = b[o];
        for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<long double>(w[o * x.size() + i]) * x[i];
        y[o] = static_cast<double>(acc);
        if (l + 1 < mlp.num_layers()) y[o] = std::max(y[o], 0.0);
      }
      x = y;
    }
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double e = (d.next(r, c) - d.states(r, c)) - x[c];
      total += e * e;
    }
  }
  return total / static_cast<double>(d.states.rows());
}

DynamicsConfig small_config() {
  DynamicsConfig cfg;
  cfg.hidden = {32, 32};
  return cfg;
}

}  // namespace

TEST_CASE("predict_next: a zero-parameter model predicts no change") {
  const auto model = testing::zero_model(4, 2);
  Rng rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 20; ++i) {
    const Vector s{u(rng), u(rng), u(rng), u(rng)};
    CHECK(model.predict_next(s, Vector{u(rng), u(rng)}) == s);
  }
}

TEST_CASE("predict_next: finite for finite inputs, error for non-finite") {
  Rng rng(2);
  DynamicsModel model(4, 2, small_config(), rng);
  const Vector out = model.predict_next(Vector{1e6, -1e6, 3, 4}, Vector{1e9, -1e9});
  CHECK(all_finite(out));
  CHECK_THROWS_AS(model.predict_next(Vector{std::nan(""), 0, 0, 0}, Vector{0, 0}), NonFiniteError);
  CHECK_THROWS_AS(model.predict_next(Vector{0, 0, 0}, Vector{0, 0}), ContractError);
}

TEST_CASE("update: exact fit gives zero loss and leaves parameters unchanged") {
  auto model = testing::zero_model(3, 1);
  Matrix s = Matrix::from_rows({{0.1, 0.2, 0.3}, {-1.0, 0.5, 2.0}});
  Matrix a = Matrix::from_rows({{0.5}, {-0.5}});
  const Vector before(model.mlp().params().begin(), model.mlp().params().end());
  CHECK(model.update(s, a, s) == 0.0);
  CHECK(std::equal(before.begin(), before.end(), model.mlp().params().begin()));
  CHECK(model.update_count() == 2);
}

TEST_CASE("update: reported loss equals an independent recomputation before the step") {
  const auto env = LinearEnv::standard();
  Rng rng(3);
  DynamicsModel model(4, 2, small_config(), rng);
  const auto d = linear_batch(*env, 64, rng);
  model.observe(d.states, d.actions);
  const double expected = oracle_loss(model, d);
  CHECK(std::abs(model.loss(d.states, d.actions, d.next) - expected) <= 1e-10);
  CHECK(std::abs(model.update(d.states, d.actions, d.next) - expected) <= 1e-10);
}

TEST_CASE("loss gradient matches central finite differences on every parameter") {
  const auto env = LinearEnv::standard();
  Rng rng(31);
  DynamicsConfig cfg;
  cfg.hidden = {5, 4};
  DynamicsModel model(4, 2, cfg, rng);
  const auto d = linear_batch(*env, 12, rng);
  model.observe(d.states, d.actions);
  Vector grad;
  const double loss = model.loss(d.states, d.actions, d.next, &grad);
  CHECK(loss == model.loss(d.states, d.actions, d.next));
  REQUIRE(grad.size() == model.mlp().num_params());
  const auto params = model.mlp().params();
  const double h = 1e-6;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double keep = params[p];
    params[p] = keep + h;
    const double up = oracle_loss(model, d);
    params[p] = keep - h;
    const double down = oracle_loss(model, d);
    params[p] = keep;
    const double numeric = (up - down) / (2 * h);
    CHECK(std::abs(grad[p] - numeric) <= 1e-5 * std::max({std::abs(grad[p]), std::abs(numeric), 1.0}));
  }
}

TEST_CASE("update: loss on a fixed batch falls over 100 updates") {
  const auto env = LinearEnv::standard();
  Rng rng(4);
  DynamicsModel model(4, 2, small_config(), rng);
  const auto d = linear_batch(*env, 256, rng);
  model.observe(d.states, d.actions);
  double prev = model.update(d.states, d.actions, d.next);
  const double initial = prev;
  for (int i = 0; i < 99; ++i) {
    const double cur = model.update(d.states, d.actions, d.next);
    CHECK(cur <= prev * 1.05);
    prev = cur;
  }
  CHECK(prev < 0.1 * initial);
}

TEST_CASE("the loss on a singleton batch is the one-step residual of predict_next") {
  const auto env = LinearEnv::standard();
  Rng rng(5);
  DynamicsModel model(4, 2, small_config(), rng);
  const auto d = linear_batch(*env, 1, rng);
  const Vector pred = model.predict_next(d.states.row(0), d.actions.row(0));
  double residual = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    const double e = (d.next(0, c) - d.states(0, c)) - (pred[c] - d.states(0, c));
    residual += e * e;
  }
  CHECK(model.loss(d.states, d.actions, d.next) == doctest::Approx(residual).epsilon(1e-12));
}

TEST_CASE("model training ignores goals and rewards") {
  const auto env = LinearEnv::standard();
  Rng rng(6);
  ReplayBuffer buffer(4, env->spec().horizon);
  buffer.store(testing::collect_random(*env, rng));
  auto batch = buffer.sample(32, rng);
  auto mutated = batch;
  for (auto& s : mutated) {
    s.transition.desired_goal = Vector{9.0, -9.0};
    s.transition.reward = 0.0;
  }
  DynamicsModel a(4, 2, small_config(), rng);
  DynamicsModel b = a;
  CHECK(a.update(batch) == b.update(mutated));
  CHECK(std::equal(a.mlp().params().begin(), a.mlp().params().end(), b.mlp().params().begin()));
}

TEST_CASE("training on the identity linear system learns s + a") {
  const auto env = LinearEnv::identity(4);
  Rng rng(7);
  DynamicsConfig cfg;
  cfg.hidden = {64, 64};
  DynamicsModel model(4, 4, cfg, rng);
  const auto data = linear_batch(*env, 4096, rng);
  model.observe(data.states, data.actions);
  std::uniform_int_distribution<std::size_t> pick(0, 4095);
  for (int it = 0; it < 1500; ++it) {
    Matrix s(128, 4), a(128, 4), n(128, 4);
    for (std::size_t r = 0; r < 128; ++r) {
      const std::size_t i = pick(rng);
      std::copy(data.states.row(i).begin(), data.states.row(i).end(), s.row(r).begin());
      std::copy(data.actions.row(i).begin(), data.actions.row(i).end(), a.row(r).begin());
      std::copy(data.next.row(i).begin(), data.next.row(i).end(), n.row(r).begin());
    }
    model.update(s, a, n);
  }
  const auto test = linear_batch(*env, 200, rng);
  const Matrix pred = model.predict_next(test.states, test.actions);
  double worst = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) worst = std::max(worst, std::abs(pred.values()[i] - test.next.values()[i]));
  CHECK(worst < 5e-2);
}

TEST_CASE("rollout: n = 0 returns only the start state") {
  const auto model = testing::zero_model(4, 2);
  testing::ConstantPolicy policy({0.5, 0.5});
  Rng rng(8);
  const auto r = rollout(model, policy, Vector{1, 2, 3, 4}, Vector{0, 0}, {0, 0.2, 1.0}, rng);
  REQUIRE(r.states.size() == 1);
  CHECK(r.states[0] == Vector{1, 2, 3, 4});
  CHECK(r.actions.empty());
  CHECK_FALSE(r.truncated);
}

TEST_CASE("rollout: zero-delta model keeps every state at the start") {
  const auto model = testing::zero_model(4, 2);
  testing::ConstantPolicy policy({1.0, -1.0});
  Rng rng(9);
  const auto r = rollout(model, policy, Vector{1, 2, 3, 4}, Vector{0, 0}, {7, 0.2, 1.0}, rng);
  REQUIRE(r.states.size() == 8);
  for (const auto& s : r.states) CHECK(s == Vector{1, 2, 3, 4});
}

TEST_CASE("rollout: n steps make exactly n policy and n model evaluations") {
  const auto model = testing::zero_model(4, 2);
  testing::ConstantPolicy inner({0.1, 0.1});
  testing::CountingPolicy policy(inner);
  Rng rng(10);
  const auto before = model.prediction_count();
  rollout(model, policy, Vector{0, 0, 0, 0}, Vector{0, 0}, {5, 0.2, 1.0}, rng);
  CHECK(policy.rows == 5);
  CHECK(model.prediction_count() - before == 5);
}

TEST_CASE("rollout: an exact linear model reproduces closed-form iteration") {
  const auto env = LinearEnv::standard();
  const auto model = testing::exact_linear_model(*env);
  testing::ConstantPolicy policy({0.3, -0.7});
  Rng rng(11);
  Vector s{0.2, -0.1, 0.05, 0.3};
  const auto r = rollout(model, policy, s, Vector{0, 0}, {5, 0.0, 1.0}, rng);
  REQUIRE(r.states.size() == 6);
  for (int j = 1; j <= 5; ++j) {
    s = env->transition(s, Vector{0.3, -0.7});
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(r.states[j][c] - s[c]) < 1e-12);
  }
}

TEST_CASE("rollout: actions carry clipped Gaussian noise") {
  const auto model = testing::zero_model(2, 2);
  testing::ConstantPolicy policy({0.9, 0.0});
  Rng rng(12);
  const auto r = rollout(model, policy, Vector{0, 0}, Vector{0, 0}, {4000, 0.2, 1.0}, rng);
  double sum = 0, sq = 0;
  bool clipped = false;
  for (const auto& a : r.actions) {
    CHECK(std::abs(a[0]) <= 1.0);
    clipped = clipped || a[0] == 1.0;
    sum += a[1];
    sq += a[1] * a[1];
  }
  const double n = static_cast<double>(r.actions.size());
  CHECK(clipped);
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::sqrt(sq / n) == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("rollout: a diverging model truncates at the last finite state") {
  auto model = testing::zero_model(2, 1);
  // Output bias of 1e308 overflows after two steps.
  model.mlp().bias(model.mlp().num_layers() - 1)[0] = 1e308;
  testing::ConstantPolicy policy({0.0});
  Rng rng(13);
  const auto r = rollout(model, policy, Vector{0.0, 0.0}, Vector{0.0}, {5, 0.0, 1.0}, rng);
  CHECK(r.truncated);
  CHECK(r.states.size() == 2);
  for (const auto& s : r.states) CHECK(all_finite(s));
}

TEST_CASE("rollout_batch equals row-by-row rollouts with the same generators") {
  const auto env = LinearEnv::standard();
  Rng init(14);
  DynamicsModel model(4, 2, small_config(), init);
  testing::SeekGoalPolicy policy;
  Matrix starts(6, 4), goals(6, 2);
  for (double& v : starts.values()) v = std::uniform_real_distribution<double>(-0.5, 0.5)(init);
  for (double& v : goals.values()) v = std::uniform_real_distribution<double>(-0.5, 0.5)(init);
  std::vector<Rng> batch_rngs, single_rngs;
  for (int i = 0; i < 6; ++i) {
    batch_rngs.emplace_back(100 + i);
    single_rngs.emplace_back(100 + i);
  }
  const auto batch = rollout_batch(model, policy, starts, goals, {5, 0.2, 1.0}, batch_rngs);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto single = rollout(model, policy, starts.row(i), goals.row(i), {5, 0.2, 1.0}, single_rngs[i]);
    CHECK(single.states == batch[i].states);
    CHECK(single.actions == batch[i].actions);
    CHECK(single_rngs[i]() == batch_rngs[i]());
  }
}

TEST_CASE("normalizers only move through observe") {
  Rng rng(15);
  DynamicsModel model(4, 2, small_config(), rng);
  testing::ConstantPolicy policy({0.2, 0.2});
  const auto env = LinearEnv::standard();
  const auto d = linear_batch(*env, 32, rng);
  model.update(d.states, d.actions, d.next);
  rollout(model, policy, Vector{0, 0, 0, 0}, Vector{0, 0}, {5, 0.2, 1.0}, rng);
  CHECK(model.observed_count() == 0);
  model.observe(d.states, d.actions);
  CHECK(model.observed_count() == 32);
}
