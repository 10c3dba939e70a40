#include "romo/cli/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "romo/kernels/kernels.hpp"

namespace romo {

namespace fs = std::filesystem;

double quantile(std::vector<double> values, double q) {
  require(!values.empty(), "quantile: no values");
  require(q >= 0.0 && q <= 1.0, "quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<AggregateRow> aggregate(const std::vector<MetricsLog>& logs) {
  std::size_t episodes = 0;
  for (const auto& log : logs) episodes = std::max(episodes, log.rows.size());
  std::vector<AggregateRow> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    std::vector<double> success;
    AggregateRow row;
    for (const auto& log : logs) {
      if (e >= log.rows.size()) continue;
      const auto& r = log.rows[e];
      require(r.episode == static_cast<int>(e) + 1, "aggregate: episodes are not numbered 1, 2, ...");
      require(success.empty() || r.env_steps == row.env_steps, "aggregate: runs disagree on env steps per episode");
      row.env_steps = r.env_steps;
      success.push_back(r.success_rate);
    }
    row.episode = static_cast<int>(e) + 1;
    row.seeds = success.size();
    row.success_median = quantile(success, 0.5);
    row.success_q25 = quantile(success, 0.25);
    row.success_q75 = quantile(success, 0.75);
    out.push_back(row);
  }
  return out;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "episode,env_steps,seeds,success_median,success_q25,success_q75\n" << std::setprecision(17);
  for (const auto& r : rows)
    out << r.episode << ',' << r.env_steps << ',' << r.seeds << ',' << r.success_median << ',' << r.success_q25
        << ',' << r.success_q75 << '\n';
}

std::optional<int> first_crossing(const MetricsLog& log, double threshold) {
  for (const auto& r : log.rows)
    if (r.success_rate >= threshold) return r.episode;
  return std::nullopt;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

void write_mlp(const fs::path& path, const Mlp& mlp) {
  auto out = open_out(path);
  save_mlp(out, mlp);
}

Mlp read_mlp(const fs::path& path) {
  auto in = open_in(path);
  return load_mlp(in);
}

void write_norm(const fs::path& path, const RunningNormalizer& norm) {
  auto out = open_out(path);
  save_normalizer(out, norm);
}

RunningNormalizer read_norm(const fs::path& path) {
  auto in = open_in(path);
  return load_normalizer(in);
}

std::vector<std::size_t> hidden_of(const Mlp& mlp) {
  const auto& sizes = mlp.layer_sizes();
  return {sizes.begin() + 1, sizes.end() - 1};
}

Rng stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return Rng(seq);
}

constexpr std::uint64_t kGoalDumpStream = 6;

}  // namespace

void save_snapshot(const fs::path& dir, const DdpgAgent& agent, const DynamicsModel* model) {
  fs::create_directories(dir);
  write_mlp(dir / "actor.mlp", agent.actor());
  write_mlp(dir / "critic.mlp", agent.critic());
  write_mlp(dir / "target_actor.mlp", agent.target_actor());
  write_mlp(dir / "target_critic.mlp", agent.target_critic());
  write_norm(dir / "obs.norm", agent.obs_normalizer());
  write_norm(dir / "goal.norm", agent.goal_normalizer());
  if (model) {
    write_mlp(dir / "model.mlp", model->mlp());
    write_norm(dir / "model_state.norm", model->state_normalizer());
    write_norm(dir / "model_action.norm", model->action_normalizer());
  } else {
    fs::remove(dir / "model.mlp");
  }
}

Snapshot load_snapshot(const fs::path& dir, const GoalEnvSpec& env) {
  Rng unused(0);
  Mlp actor = read_mlp(dir / "actor.mlp");
  AgentConfig config;
  config.hidden = hidden_of(actor);
  Snapshot snap;
  snap.agent = std::make_unique<DdpgAgent>(env, config, unused);
  require(actor.layer_sizes() == snap.agent->actor().layer_sizes(), "snapshot: actor does not fit the environment");
  Mlp critic = read_mlp(dir / "critic.mlp");
  require(critic.layer_sizes() == snap.agent->critic().layer_sizes(),
          "snapshot: critic does not fit the environment");
  snap.agent->actor() = std::move(actor);
  snap.agent->critic() = std::move(critic);
  snap.agent->target_actor() = read_mlp(dir / "target_actor.mlp");
  snap.agent->target_critic() = read_mlp(dir / "target_critic.mlp");
  snap.agent->set_normalizers(read_norm(dir / "obs.norm"), read_norm(dir / "goal.norm"));
  if (fs::exists(dir / "model.mlp")) {
    Mlp mlp = read_mlp(dir / "model.mlp");
    DynamicsConfig mc;
    mc.hidden = hidden_of(mlp);
    snap.model = std::make_unique<DynamicsModel>(env.state_dim, env.action_dim, mc, unused);
    require(mlp.layer_sizes() == snap.model->mlp().layer_sizes(), "snapshot: model does not fit the environment");
    snap.model->mlp() = std::move(mlp);
    snap.model->set_normalizers(read_norm(dir / "model_state.norm"), read_norm(dir / "model_action.norm"));
  }
  return snap;
}

std::vector<GoalSample> sample_relabeled_goals(const ReplayBuffer& buffer, const RelabelMode& mode,
                                               const RelabelContext& ctx, std::size_t count, Rng& rng) {
  require(ctx.env != nullptr, "goal dump: environment missing");
  require(!buffer.empty(), "goal dump: replay buffer is empty");
  const auto batch = buffer.sample(count, rng);
  const auto relabeled = apply_relabeling(batch, mode, 1.0, ctx, rng);
  std::vector<GoalSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& original = batch[i].transition;
    out.push_back({ctx.env->phi(original.next_state), original.desired_goal, relabeled[i].desired_goal,
                   relabeled[i].reward});
  }
  return out;
}

void write_goal_samples(std::ostream& out, const std::vector<GoalSample>& samples) {
  const std::size_t dim = samples.empty() ? 0 : samples.front().desired.size();
  for (const char* prefix : {"ag", "dg", "rg"})
    for (std::size_t j = 0; j < dim; ++j) out << prefix << j << ',';
  out << "reward\n" << std::setprecision(17);
  for (const auto& s : samples) {
    for (const Vector* v : {&s.achieved, &s.desired, &s.relabeled}) {
      require(v->size() == dim, "goal dump: goal dimensions differ between samples");
      for (double x : *v) out << x << ',';
    }
    out << s.reward << '\n';
  }
}

double mean_relabeled_reward(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "goal dump: missing header");
  const auto last_comma = line.rfind(',');
  require(line.substr(last_comma == std::string::npos ? 0 : last_comma + 1) == "reward",
          "goal dump: last column must be reward");
  double sum = 0.0;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    sum += std::stod(line.substr(comma == std::string::npos ? 0 : comma + 1));
    ++n;
  }
  require(n > 0, "goal dump: no samples");
  return sum / static_cast<double>(n);
}

bool ExperimentResult::all_ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.ok; });
}

std::vector<const RunRecord*> ExperimentResult::runs_for(const RelabelMode& mode) const {
  std::vector<const RunRecord*> out;
  for (const auto& r : runs)
    if (r.mode == mode) out.push_back(&r);
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress) {
  spec.validate();
  ExperimentResult result;
  result.root = fs::path(spec.out_dir) / spec.label;
  fs::create_directories(result.root);
  const auto rel = [&](const fs::path& p) { return fs::relative(p, result.root).generic_string(); };
  {
    auto out = open_out(result.root / "config.txt");
    write_config(out, spec);
  }

  nlohmann::json manifest;
  manifest["label"] = spec.label;
  manifest["kernels"] = std::string(kernels::active().name);
  nlohmann::json settings = nlohmann::json::object();
  for (const auto& [k, v] : resolved_settings(spec)) settings[k] = v;
  manifest["settings"] = settings;
  manifest["modes"] = nlohmann::json::array();
  manifest["runs"] = nlohmann::json::array();

  for (const auto& mode : spec.modes()) {
    const std::string name = to_string(mode);
    const fs::path dir = result.root / name;
    fs::create_directories(dir);
    std::vector<MetricsLog> ok_logs;
    for (const auto seed : spec.seeds) {
      RunRecord rec;
      rec.mode = mode;
      rec.seed = seed;
      const std::string stem = "seed-" + std::to_string(seed);
      rec.metrics = dir / (stem + ".csv");
      nlohmann::json run{{"mode", name}, {"seed", seed}, {"metrics", rel(rec.metrics)}};
      try {
        TrainConfig config = spec.train;
        config.mode = mode;
        config.seed = seed;
        Trainer trainer(config);
        trainer.train([&](const MetricsRow& row) {
          if (progress) progress(mode, seed, row);
        });
        rec.log = trainer.log();
        {
          auto out = open_out(rec.metrics);
          rec.log.write_csv(out);
        }
        if (spec.snapshots) {
          save_snapshot(dir / stem, trainer.agent(), trainer.model());
          run["snapshot"] = rel(dir / stem);
        }
        if (spec.dump_goals > 0) {
          Rng rng = stream(seed, kGoalDumpStream);
          const RelabelContext ctx{&trainer.env(), trainer.model(), &trainer.agent(), config.rollout_noise};
          const auto samples = sample_relabeled_goals(trainer.buffer(), mode, ctx, spec.dump_goals, rng);
          const fs::path path = dir / (stem + ".goals.csv");
          auto out = open_out(path);
          write_goal_samples(out, samples);
          run["goals"] = rel(path);
        }
        if (spec.dump_buffer) {
          const fs::path path = dir / (stem + ".trajectories.csv");
          auto out = open_out(path);
          write_trajectories(out, trainer.buffer());
          run["trajectories"] = rel(path);
        }
        rec.ok = true;
        ok_logs.push_back(rec.log);
        run["status"] = "ok";
        run["episodes"] = rec.log.rows.size();
        run["final_success"] = rec.log.rows.empty() ? 0.0 : rec.log.rows.back().success_rate;
      } catch (const std::exception& e) {
        rec.error = e.what();
        run["status"] = "failed";
        run["error"] = rec.error;
      }
      manifest["runs"].push_back(run);
      result.runs.push_back(std::move(rec));
    }
    nlohmann::json mode_entry{{"mode", name}, {"completed_seeds", ok_logs.size()}};
    if (!ok_logs.empty()) {
      const fs::path path = dir / "aggregate.csv";
      auto out = open_out(path);
      write_aggregate_csv(out, aggregate(ok_logs));
      mode_entry["aggregate"] = rel(path);
    }
    manifest["modes"].push_back(mode_entry);
  }

  manifest["all_ok"] = result.all_ok();
  result.manifest = result.root / "manifest.json";
  auto out = open_out(result.manifest);
  out << manifest.dump(2) << '\n';
  return result;
}

}  // namespace romo
