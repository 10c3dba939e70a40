#include "romo/agent/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace romo {

void TrainConfig::validate() const {
  require(horizon > 0 && episodes > 0 && trajectories_per_episode > 0 && updates_per_trajectory > 0,
          "train config: counts must be positive");
  require(batch_size > 0 && buffer_trajectories > 0 && eval_trials > 0, "train config: sizes must be positive");
  require(replay_ratio >= 0.0 && replay_ratio <= 1.0, "train config: replay ratio must lie in [0, 1]");
  require(rollout_noise >= 0.0, "train config: rollout noise must be non-negative");
  mode.validate();
  agent.validate();
  require(!mode.uses_model() || (!dynamics.hidden.empty() && dynamics.updates_per_batch >= 0),
          "train config: model modes need a dynamics network");
}

const char* MetricsLog::header() {
  return "episode,env_steps,success_rate,critic_loss,actor_loss,model_loss,mean_relabeled_reward,truncated_rollouts";
}

void MetricsLog::write_csv(std::ostream& out) const {
  out << header() << '\n' << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.episode << ',' << r.env_steps << ',' << r.success_rate << ',' << r.critic_loss << ',' << r.actor_loss
        << ',';
    if (std::isnan(r.model_loss))
      out << "nan";
    else
      out << r.model_loss;
    out << ',' << r.mean_relabeled_reward << ',' << r.truncated_rollouts << '\n';
  }
}

MetricsLog MetricsLog::read_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == header(), "metrics csv: unexpected header");
  MetricsLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    require(cells.size() == 8, "metrics csv: row has " + std::to_string(cells.size()) + " columns");
    MetricsRow r;
    r.episode = std::stoi(cells[0]);
    r.env_steps = std::stoull(cells[1]);
    r.success_rate = std::stod(cells[2]);
    r.critic_loss = std::stod(cells[3]);
    r.actor_loss = std::stod(cells[4]);
    r.model_loss = cells[5] == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cells[5]);
    r.mean_relabeled_reward = std::stod(cells[6]);
    r.truncated_rollouts = std::stoull(cells[7]);
    log.rows.push_back(r);
  }
  return log;
}

namespace {

Rng stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return Rng(seq);
}

EnvOverrides with_horizon(EnvOverrides overrides, int horizon) {
  overrides["horizon"] = horizon;
  return overrides;
}

}  // namespace

Trainer::Trainer(TrainConfig config)
    : config_((config.validate(), std::move(config))),
      env_(make_env(config_.env, with_horizon(config_.env_overrides, config_.horizon))),
      init_rng_(stream(config_.seed, 0)),
      env_rng_(stream(config_.seed, 1)),
      explore_rng_(stream(config_.seed, 2)),
      sample_rng_(stream(config_.seed, 3)),
      relabel_rng_(stream(config_.seed, 4)),
      eval_rng_(stream(config_.seed, 5)),
      buffer_(config_.buffer_trajectories, config_.horizon) {
  agent_ = std::make_unique<DdpgAgent>(env_->spec(), config_.agent, init_rng_);
  if (config_.mode.uses_model())
    model_ = std::make_unique<DynamicsModel>(env_->spec().state_dim, env_->spec().action_dim, config_.dynamics,
                                             init_rng_);
}

void Trainer::run_trajectory() {
  const auto reset = env_->reset(env_rng_);
  std::vector<Transition> steps;
  steps.reserve(static_cast<std::size_t>(config_.horizon));
  Vector s = reset.state;
  for (int t = 1; t <= config_.horizon; ++t) {
    Transition tr;
    tr.action = agent_->select_action(s, reset.goal, true, explore_rng_);
    const auto step = env_->step(s, tr.action, reset.goal);
    tr.state = std::move(s);
    tr.next_state = step.next_state;
    tr.desired_goal = reset.goal;
    tr.reward = step.reward;
    tr.t = t;
    s = step.next_state;
    steps.push_back(std::move(tr));
  }
  Trajectory traj = build_trajectory(*env_, std::move(steps));
  agent_->observe(traj);
  if (model_) model_->observe(traj);
  buffer_.store(std::move(traj));
  ++counters_.trajectories;

  int done = 0;
  for (iteration_ = 1; iteration_ <= config_.updates_per_trajectory; ++iteration_) {
    try {
      update_iteration();
    } catch (const std::exception& e) {
      throw TrainingError("training failed at episode " + std::to_string(episode_ + 1) + ", trajectory " +
                          std::to_string(trajectory_in_episode_ + 1) + ", iteration " + std::to_string(iteration_) +
                          ": " + e.what());
    }
    ++done;
  }
  counters_.iterations_per_trajectory.push_back(done);
}

void Trainer::update_iteration() {
  const auto batch = buffer_.sample(config_.batch_size, sample_rng_);
  ++counters_.batches_sampled;
  counters_.transitions_sampled += batch.size();

  if (model_) {
    const auto before = model_->update_count();
    acc_.model += model_->update(batch);
    counters_.model_updates += model_->update_count() - before;
    ++acc_.model_iterations;
  }

  RelabelStats stats;
  const RelabelContext ctx{env_.get(), model_.get(), agent_.get(), config_.rollout_noise};
  const auto relabeled = apply_relabeling(batch, config_.mode, config_.replay_ratio, ctx, relabel_rng_, &stats);
  ++counters_.relabel_passes;
  counters_.rollouts += stats.rollouts;

  const AgentBatch agent_batch = agent_->make_batch(relabeled);
  acc_.critic += agent_->critic_update(agent_batch);
  ++counters_.critic_steps;
  acc_.actor += agent_->actor_update(agent_batch);
  ++counters_.actor_steps;
  agent_->polyak_update();
  ++counters_.polyak_steps;

  acc_.reward += stats.mean_reward;
  acc_.truncated += stats.truncated_rollouts;
  ++acc_.iterations;
  ++counters_.iterations;
}

const MetricsRow& Trainer::run_episode() {
  acc_ = {};
  for (trajectory_in_episode_ = 0; trajectory_in_episode_ < config_.trajectories_per_episode;
       ++trajectory_in_episode_)
    run_trajectory();
  ++episode_;

  MetricsRow row;
  row.episode = episode_;
  row.env_steps = buffer_.stored_transitions();
  row.success_rate = evaluate(*agent_, *env_, config_.eval_trials, eval_rng_);
  const double n = static_cast<double>(acc_.iterations);
  row.critic_loss = acc_.critic / n;
  row.actor_loss = acc_.actor / n;
  row.model_loss = model_ ? acc_.model / static_cast<double>(acc_.model_iterations)
                          : std::numeric_limits<double>::quiet_NaN();
  row.mean_relabeled_reward = acc_.reward / n;
  row.truncated_rollouts = acc_.truncated;
  log_.rows.push_back(row);
  return log_.rows.back();
}

const MetricsLog& Trainer::train(const std::function<void(const MetricsRow&)>& on_episode) {
  while (episode_ < config_.episodes) {
    const MetricsRow& row = run_episode();
    if (on_episode) on_episode(row);
    if (config_.stop_at_success >= 0.0 && row.success_rate >= config_.stop_at_success) break;
  }
  return log_;
}

MetricsLog train(const TrainConfig& config) {
  Trainer trainer(config);
  trainer.train();
  return trainer.log();
}

}  // namespace romo
