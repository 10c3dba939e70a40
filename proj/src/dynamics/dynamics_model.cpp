#include "romo/dynamics/dynamics_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace romo {

namespace {

std::vector<std::size_t> model_layers(std::size_t state_dim, std::size_t action_dim,
                                      const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> sizes{state_dim + action_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(state_dim);
  return sizes;
}

}  // namespace

DynamicsModel::DynamicsModel(std::size_t state_dim, std::size_t action_dim, DynamicsConfig config, Rng& init_rng)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      config_(std::move(config)),
      mlp_(model_layers(state_dim, action_dim, config_.hidden), Activation::Identity),
      state_norm_(state_dim),
      action_norm_(action_dim) {
  require(config_.updates_per_batch >= 1, "DynamicsModel: updates_per_batch must be positive");
  mlp_.init_fan_in_uniform(init_rng);
  adam_ = AdamState(mlp_.num_params(), config_.learning_rate);
}

DynamicsModel::DynamicsModel(const DynamicsModel& other)
    : state_dim_(other.state_dim_),
      action_dim_(other.action_dim_),
      config_(other.config_),
      mlp_(other.mlp_),
      adam_(other.adam_),
      state_norm_(other.state_norm_),
      action_norm_(other.action_norm_),
      predictions_(other.prediction_count()) {}

DynamicsModel& DynamicsModel::operator=(const DynamicsModel& other) {
  if (this != &other) {
    state_dim_ = other.state_dim_;
    action_dim_ = other.action_dim_;
    config_ = other.config_;
    mlp_ = other.mlp_;
    adam_ = other.adam_;
    state_norm_ = other.state_norm_;
    action_norm_ = other.action_norm_;
    predictions_.store(other.prediction_count(), std::memory_order_relaxed);
  }
  return *this;
}

void DynamicsModel::set_normalizers(RunningNormalizer state_norm, RunningNormalizer action_norm) {
  require(state_norm.dim() == state_dim_ && action_norm.dim() == action_dim_,
          "DynamicsModel::set_normalizers: dimension mismatch");
  state_norm_ = std::move(state_norm);
  action_norm_ = std::move(action_norm);
}

Matrix DynamicsModel::model_input(const Matrix& states, const Matrix& actions) const {
  require(states.cols() == state_dim_ && actions.cols() == action_dim_ && states.rows() == actions.rows(),
          "DynamicsModel: expected " + std::to_string(state_dim_) + " state and " + std::to_string(action_dim_) +
              " action columns with matching rows");
  const Matrix ns = state_norm_.apply(states);
  const Matrix na = action_norm_.apply(actions);
  return Matrix::hconcat({&ns, &na});
}

Matrix DynamicsModel::predict_next(const Matrix& states, const Matrix& actions) const {
  if (!all_finite(states.values()) || !all_finite(actions.values())) {
    throw NonFiniteError("DynamicsModel::predict_next: non-finite state or action");
  }
  Matrix next = mlp_.forward(model_input(states, actions));
  for (std::size_t i = 0; i < next.size(); ++i) next.values()[i] += states.values()[i];
  predictions_.fetch_add(states.rows(), std::memory_order_relaxed);
  return next;
}

Vector DynamicsModel::predict_next(std::span<const double> state, std::span<const double> action) const {
  const Matrix next = predict_next(Matrix::row_vector(state), Matrix::row_vector(action));
  return {next.values().begin(), next.values().end()};
}

double DynamicsModel::loss(const Matrix& states, const Matrix& actions, const Matrix& next_states,
                           Vector* grad) const {
  require(next_states.rows() == states.rows() && next_states.cols() == state_dim_,
          "DynamicsModel::loss: next_states shape mismatch");
  return loss_on(model_input(states, actions), states, next_states, grad);
}

double DynamicsModel::loss_on(const Matrix& input, const Matrix& states, const Matrix& next_states,
                              Vector* grad) const {
  MlpTrace trace;
  const Matrix pred = grad ? mlp_.forward(input, trace) : mlp_.forward(input);
  const double inv_batch = 1.0 / static_cast<double>(states.rows());
  Matrix upstream(pred.rows(), pred.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    for (std::size_t c = 0; c < state_dim_; ++c) {
      const double e = pred(r, c) - (next_states(r, c) - states(r, c));
      total += e * e;
      upstream(r, c) = 2.0 * e * inv_batch;
    }
  }
  if (grad) {
    grad->assign(mlp_.num_params(), 0.0);
    mlp_.backward(trace, upstream, *grad);
  }
  return total * inv_batch;
}

double DynamicsModel::update(const Matrix& states, const Matrix& actions, const Matrix& next_states) {
  require(states.rows() > 0, "DynamicsModel::update: empty batch");
  require(next_states.rows() == states.rows() && next_states.cols() == state_dim_,
          "DynamicsModel::update: next_states shape mismatch");
  const Matrix input = model_input(states, actions);
  double first_loss = 0.0;
  Vector grad;
  for (int step = 0; step < config_.updates_per_batch; ++step) {
    const double loss_value = loss_on(input, states, next_states, &grad);
    if (!std::isfinite(loss_value)) {
      std::ostringstream msg;
      msg << "DynamicsModel::update: non-finite loss on batch of " << states.rows() << " rows (update " << step + 1
          << " of " << config_.updates_per_batch << ", finite states: " << all_finite(states.values())
          << ", finite next states: " << all_finite(next_states.values()) << ")";
      throw NonFiniteError(msg.str());
    }
    if (step == 0) first_loss = loss_value;
    adam_step(mlp_.params(), grad, adam_, mlp_.segments());
  }
  return first_loss;
}

void DynamicsModel::set_learning_rate(double lr) {
  require(lr > 0.0 && std::isfinite(lr), "DynamicsModel: learning rate must be positive and finite");
  config_.learning_rate = lr;
  adam_.lr = lr;
}

double DynamicsModel::update(std::span<const SampledTransition> batch) {
  require(!batch.empty(), "DynamicsModel::update: empty batch");
  Matrix s(batch.size(), state_dim_), a(batch.size(), action_dim_), n(batch.size(), state_dim_);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const Transition& tr = batch[r].transition;
    std::copy(tr.state.begin(), tr.state.end(), s.row(r).begin());
    std::copy(tr.action.begin(), tr.action.end(), a.row(r).begin());
    std::copy(tr.next_state.begin(), tr.next_state.end(), n.row(r).begin());
  }
  return update(s, a, n);
}

void DynamicsModel::observe(const Matrix& states, const Matrix& actions) {
  state_norm_.update(states);
  action_norm_.update(actions);
}

void DynamicsModel::observe(const Trajectory& traj) {
  Matrix s(traj.steps.size(), state_dim_), a(traj.steps.size(), action_dim_);
  for (std::size_t r = 0; r < traj.steps.size(); ++r) {
    std::copy(traj.steps[r].state.begin(), traj.steps[r].state.end(), s.row(r).begin());
    std::copy(traj.steps[r].action.begin(), traj.steps[r].action.end(), a.row(r).begin());
  }
  observe(s, a);
}

VirtualRollout rollout(const DynamicsModel& model, const Policy& policy, std::span<const double> start,
                       std::span<const double> goal, const RolloutParams& params, Rng& rng) {
  auto out = rollout_batch(model, policy, Matrix::row_vector(start), Matrix::row_vector(goal), params,
                           std::span<Rng>(&rng, 1));
  return std::move(out.front());
}

std::vector<VirtualRollout> rollout_batch(const DynamicsModel& model, const Policy& policy, const Matrix& starts,
                                          const Matrix& goals, const RolloutParams& params, std::span<Rng> rngs) {
  require(params.n >= 0, "rollout: n must be non-negative");
  require(starts.rows() == goals.rows() && rngs.size() == starts.rows(), "rollout: batch shapes disagree");
  require(starts.cols() == model.state_dim(), "rollout: start state has wrong dimension");
  if (!all_finite(starts.values())) throw NonFiniteError("rollout: non-finite start state");

  const std::size_t rows = starts.rows();
  std::vector<VirtualRollout> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    out[r].goal.assign(goals.row(r).begin(), goals.row(r).end());
    out[r].states.emplace_back(starts.row(r).begin(), starts.row(r).end());
  }
  const double sigma = params.noise_scale * params.action_bound;
  std::vector<std::normal_distribution<double>> noise(rows, std::normal_distribution<double>(0.0, sigma > 0 ? sigma : 1.0));

  std::vector<std::size_t> active(rows);
  for (std::size_t r = 0; r < rows; ++r) active[r] = r;
  Matrix current = starts;
  Matrix current_goals = goals;
  for (int j = 0; j < params.n && !active.empty(); ++j) {
    Matrix actions = policy.act(current, current_goals);
    require(actions.rows() == active.size() && actions.cols() == model.action_dim(),
            "rollout: policy returned wrong action shape");
    for (std::size_t i = 0; i < active.size(); ++i) {
      const std::size_t r = active[i];
      for (double& a : actions.row(i)) {
        if (sigma > 0) a += noise[r](rngs[r]);
        a = std::clamp(a, -params.action_bound, params.action_bound);
      }
    }
    const Matrix next = model.predict_next(current, actions);

    std::vector<std::size_t> still_active;
    std::vector<std::size_t> keep_rows;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const std::size_t r = active[i];
      out[r].actions.emplace_back(actions.row(i).begin(), actions.row(i).end());
      if (!all_finite(next.row(i))) {
        out[r].truncated = true;
        out[r].actions.pop_back();
        continue;
      }
      out[r].states.emplace_back(next.row(i).begin(), next.row(i).end());
      still_active.push_back(r);
      keep_rows.push_back(i);
    }
    if (keep_rows.size() != active.size()) {
      Matrix c(keep_rows.size(), current.cols()), g(keep_rows.size(), goals.cols());
      for (std::size_t k = 0; k < keep_rows.size(); ++k) {
        std::copy(next.row(keep_rows[k]).begin(), next.row(keep_rows[k]).end(), c.row(k).begin());
        std::copy(current_goals.row(keep_rows[k]).begin(), current_goals.row(keep_rows[k]).end(), g.row(k).begin());
      }
      current = std::move(c);
      current_goals = std::move(g);
    } else {
      current = next;
    }
    active = std::move(still_active);
  }
  return out;
}

}  // namespace romo
