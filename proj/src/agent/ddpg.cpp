#include "romo/agent/ddpg.hpp"

#include <algorithm>
#include <cmath>

#include "romo/kernels/kernels.hpp"

namespace romo {

void AgentConfig::validate() const {
  require(!hidden.empty(), "agent: at least one hidden layer");
  for (auto h : hidden) require(h > 0, "agent: hidden layer sizes must be positive");
  require(gamma > 0.0 && gamma < 1.0, "agent: gamma must lie in (0, 1)");
  require(polyak >= 0.0 && polyak <= 1.0, "agent: polyak must lie in [0, 1]");
  require(actor_lr > 0.0 && critic_lr > 0.0, "agent: learning rates must be positive");
  require(action_penalty >= 0.0 && noise_scale >= 0.0, "agent: penalty and noise must be non-negative");
  require(random_action_prob >= 0.0 && random_action_prob <= 1.0, "agent: random action probability outside [0, 1]");
}

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

void copy_row(std::span<const double> src, std::span<double> dst) { std::copy(src.begin(), src.end(), dst.begin()); }

void check_finite(std::span<const double> values, const char* what) {
  if (!all_finite(values)) throw NonFiniteError(std::string("ddpg: non-finite ") + what);
}

}  // namespace

DdpgAgent::DdpgAgent(const GoalEnvSpec& env, AgentConfig config, Rng& init_rng)
    : env_(env),
      config_(std::move(config)),
      actor_(layer_sizes(env.state_dim + env.goal_dim, config_.hidden, env.action_dim), Activation::Tanh),
      critic_(layer_sizes(env.state_dim + env.goal_dim + env.action_dim, config_.hidden, 1), Activation::Identity),
      obs_norm_(env.state_dim, config_.norm_clip),
      goal_norm_(env.goal_dim, config_.norm_clip) {
  config_.validate();
  actor_.init_fan_in_uniform(init_rng);
  critic_.init_fan_in_uniform(init_rng);
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_adam_ = AdamState(actor_.num_params(), config_.actor_lr);
  critic_adam_ = AdamState(critic_.num_params(), config_.critic_lr);
}

Matrix DdpgAgent::policy_input(const Matrix& states, const Matrix& goals) const {
  require(states.cols() == env_.state_dim && goals.cols() == env_.goal_dim && states.rows() == goals.rows(),
          "ddpg: state/goal batch has wrong shape");
  const Matrix s = obs_norm_.apply(states);
  const Matrix g = goal_norm_.apply(goals);
  return Matrix::hconcat({&s, &g});
}

Matrix DdpgAgent::act(const Matrix& states, const Matrix& goals) const {
  Matrix out = actor_.forward(policy_input(states, goals));
  for (double& x : out.values()) x *= env_.action_bound;
  check_finite(out.values(), "policy output");
  return out;
}

Vector DdpgAgent::select_action(std::span<const double> state, std::span<const double> goal, bool explore, Rng& rng,
                                bool* was_random) const {
  const Matrix out = act(Matrix::row_vector(state), Matrix::row_vector(goal));
  Vector a(out.values().begin(), out.values().end());
  bool random = false;
  if (explore) {
    const double bound = env_.action_bound;
    std::normal_distribution<double> noise(0.0, config_.noise_scale * bound);
    for (double& x : a) x = std::clamp(x + noise(rng), -bound, bound);
    if (std::bernoulli_distribution(config_.random_action_prob)(rng)) {
      random = true;
      std::uniform_real_distribution<double> u(-bound, bound);
      for (double& x : a) x = u(rng);
    }
  }
  if (was_random) *was_random = random;
  return a;
}

AgentBatch DdpgAgent::make_batch(std::span<const Transition> batch) const {
  require(!batch.empty(), "ddpg: empty minibatch");
  const std::size_t n = batch.size();
  Matrix s(n, env_.state_dim), ns(n, env_.state_dim), g(n, env_.goal_dim);
  AgentBatch out;
  out.actions = Matrix(n, env_.action_dim);
  out.rewards.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& tr = batch[i];
    require(tr.state.size() == env_.state_dim && tr.next_state.size() == env_.state_dim &&
                tr.desired_goal.size() == env_.goal_dim && tr.action.size() == env_.action_dim,
            "ddpg: transition has wrong dimensions");
    copy_row(tr.state, s.row(i));
    copy_row(tr.next_state, ns.row(i));
    copy_row(tr.desired_goal, g.row(i));
    for (std::size_t c = 0; c < env_.action_dim; ++c) out.actions(i, c) = tr.action[c] / env_.action_bound;
    out.rewards[i] = tr.reward;
  }
  out.obs_goal = policy_input(s, g);
  out.next_obs_goal = policy_input(ns, g);
  return out;
}

Vector DdpgAgent::critic_targets(const AgentBatch& batch) const {
  const Matrix next_action = target_actor_.forward(batch.next_obs_goal);
  const Matrix next_q = target_critic_.forward(Matrix::hconcat({&batch.next_obs_goal, &next_action}));
  const double floor = -1.0 / (1.0 - config_.gamma);
  Vector y(batch.rewards.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = std::clamp(batch.rewards[i] + config_.gamma * next_q.values()[i], floor, 0.0);
  return y;
}

double DdpgAgent::critic_loss(const AgentBatch& batch, Vector* grad) const {
  const Vector y = critic_targets(batch);
  MlpTrace trace;
  const Matrix q = critic_.forward(Matrix::hconcat({&batch.obs_goal, &batch.actions}), trace);
  const double n = static_cast<double>(y.size());
  Matrix upstream(y.size(), 1);
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = q.values()[i] - y[i];
    loss += d * d;
    upstream.values()[i] = 2.0 * d / n;
  }
  loss /= n;
  if (!std::isfinite(loss)) throw NonFiniteError("ddpg: non-finite critic loss");
  if (grad) {
    grad->assign(critic_.num_params(), 0.0);
    critic_.backward(trace, upstream, *grad);
  }
  return loss;
}

double DdpgAgent::actor_loss(const AgentBatch& batch, Vector* grad) const {
  MlpTrace actor_trace;
  const Matrix action = actor_.forward(batch.obs_goal, actor_trace);
  MlpTrace critic_trace;
  const Matrix q = critic_.forward(Matrix::hconcat({&batch.obs_goal, &action}), critic_trace);
  const Matrix& pre = actor_trace.pre.back();
  const std::size_t rows = q.rows();
  const double n = static_cast<double>(rows);
  double q_sum = 0.0;
  for (double v : q.values()) q_sum += v;
  double penalty = 0.0;
  for (double v : pre.values()) penalty += v * v;
  const double loss = -q_sum / n + config_.action_penalty * penalty / n;
  if (!std::isfinite(loss)) throw NonFiniteError("ddpg: non-finite actor loss");
  if (grad) {
    Vector critic_scratch(critic_.num_params(), 0.0);
    const Matrix d_input = critic_.backward(critic_trace, Matrix(rows, 1, -1.0 / n), critic_scratch);
    const Matrix d_action = d_input.columns(batch.obs_goal.cols(), action.cols());
    Matrix d_pre = pre;
    for (double& v : d_pre.values()) v *= 2.0 * config_.action_penalty / n;
    grad->assign(actor_.num_params(), 0.0);
    actor_.backward(actor_trace, d_action, *grad, &d_pre);
  }
  return loss;
}

double DdpgAgent::critic_update(std::span<const Transition> batch) { return critic_update(make_batch(batch)); }

double DdpgAgent::actor_update(std::span<const Transition> batch) { return actor_update(make_batch(batch)); }

double DdpgAgent::critic_update(const AgentBatch& batch) {
  Vector grad;
  const double loss = critic_loss(batch, &grad);
  adam_step(critic_.params(), grad, critic_adam_, critic_.segments());
  return loss;
}

double DdpgAgent::actor_update(const AgentBatch& batch) {
  Vector grad;
  const double loss = actor_loss(batch, &grad);
  adam_step(actor_.params(), grad, actor_adam_, actor_.segments());
  return loss;
}

void DdpgAgent::polyak_update() {
  const auto& k = kernels::active();
  k.lerp(actor_.num_params(), config_.polyak, actor_.params().data(), target_actor_.params().data());
  k.lerp(critic_.num_params(), config_.polyak, critic_.params().data(), target_critic_.params().data());
  ++polyak_steps_;
}

void DdpgAgent::observe(const Trajectory& traj) {
  const int horizon = traj.horizon();
  Matrix states(static_cast<std::size_t>(horizon) + 1, env_.state_dim);
  for (int k = 1; k <= horizon + 1; ++k) copy_row(traj.state(k), states.row(k - 1));
  Matrix goals(traj.achieved_goals.size() + 1, env_.goal_dim);
  for (std::size_t i = 0; i < traj.achieved_goals.size(); ++i) copy_row(traj.achieved_goals[i], goals.row(i));
  copy_row(traj.goal(), goals.row(goals.rows() - 1));
  obs_norm_.update(states);
  goal_norm_.update(goals);
}

void DdpgAgent::set_normalizers(RunningNormalizer obs, RunningNormalizer goal) {
  require(obs.dim() == env_.state_dim && goal.dim() == env_.goal_dim, "ddpg: normalizer dimensions do not match");
  obs_norm_ = std::move(obs);
  goal_norm_ = std::move(goal);
}

double evaluate(const Policy& policy, const GoalEnv& env, int trials, Rng& rng) {
  require(trials >= 1, "evaluate: trials must be at least 1");
  int successes = 0;
  for (int i = 0; i < trials; ++i) {
    const auto reset = env.reset(rng);
    Vector s = reset.state;
    const Matrix goal = Matrix::row_vector(reset.goal);
    for (int t = 0; t < env.spec().horizon; ++t) {
      const Matrix a = policy.act(Matrix::row_vector(s), goal);
      const auto step = env.step(s, a.values(), reset.goal);
      if (step.success) {
        ++successes;
        break;
      }
      s = step.next_state;
    }
  }
  return static_cast<double>(successes) / trials;
}

}  // namespace romo
