// romo_her: train, compare and inspect goal-relabeling agents.
//
//   romo_her run --env point-push --mode fr --strategy episode --n-steps 5 --seeds 0,1,2
//   romo_her run --config push.cfg --episodes 10
//   romo_her dump-goals --env point-push --buffer run/seed-0.trajectories.csv --snapshot run/seed-0 --mode mher
//   romo_her mean-reward goals.csv
//   romo_her aggregate --file agg.csv seed-0.csv seed-1.csv
//   romo_her config --config push.cfg

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

#include <CLI11.hpp>

#include "romo/cli/experiment.hpp"

namespace {

using namespace romo;

struct SettingFlag {
  const char* flag;
  const char* key;
  const char* help;
};

// Flags that map one-to-one onto config-file keys. Applied after the config
// file, in this order, so flags win and mode is resolved before its fields.
const std::vector<SettingFlag>& setting_flags() {
  static const std::vector<SettingFlag> flags{
      {"--env", "env", "point-reach, point-push or linear"},
      {"--mode", "mode", "none, her, fr or mher"},
      {"--strategy", "strategy", "future, episode or final"},
      {"--n-steps", "n_steps", "model rollout depth for fr and mher"},
      {"--compare", "compare", "comma list of modes, e.g. her-future,fr-episode-n5"},
      {"--replay-ratio", "replay_ratio", "probability that a sampled transition is relabeled"},
      {"--episodes", "episodes", "training episodes"},
      {"--seeds,--seed", "seeds", "seed or comma list of seeds"},
      {"--out", "out", "output directory"},
      {"--label", "label", "run label (subdirectory of --out)"},
      {"--trials", "trials", "evaluation episodes per training episode"},
      {"--dump-goals", "dump_goals", "relabeled-goal samples to write per run"},
      {"--horizon", "horizon", "steps per trajectory"},
      {"--stop-at-success", "stop_at_success", "stop a run once evaluation reaches this success rate"},
  };
  return flags;
}

struct SettingOptions {
  std::string config;
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "flat key = value file; flags override it")->check(CLI::ExistingFile);
    for (const auto& f : setting_flags()) app.add_option(f.flag, values[f.key], f.help);
    app.add_option("--set", sets, "extra setting key=value (repeatable), e.g. --set env.threshold=0.03");
  }

  ExperimentSpec resolve(const CLI::App& app) const {
    ExperimentSpec spec;
    if (!config.empty()) {
      std::ifstream in(config);
      apply_settings(spec, parse_config(in));
    }
    for (const auto& f : setting_flags()) {
      const std::string flag = f.flag;
      const std::string name = flag.substr(0, flag.find(','));
      if (app.count(name) > 0) apply_setting(spec, f.key, values.at(f.key));
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      require(eq != std::string::npos, "--set expects key=value, got '" + s + "'");
      apply_setting(spec, s.substr(0, eq), s.substr(eq + 1));
    }
    return spec;
  }
};

int cmd_run(const ExperimentSpec& spec, bool quiet) {
  const auto result = run_experiment(spec, [&](const RelabelMode& mode, std::uint64_t seed, const MetricsRow& row) {
    if (quiet) return;
    std::fprintf(stderr, "%s seed %llu episode %d: success %.2f critic %.4f actor %.4f relabeled reward %.3f\n",
                 to_string(mode).c_str(), static_cast<unsigned long long>(seed), row.episode, row.success_rate,
                 row.critic_loss, row.actor_loss, row.mean_relabeled_reward);
  });
  for (const auto& run : result.runs) {
    if (run.ok) {
      const auto crossing = first_crossing(run.log, 0.8);
      std::printf("%s seed %llu: %zu episodes, final success %.2f, 0.8 reached %s\n", to_string(run.mode).c_str(),
                  static_cast<unsigned long long>(run.seed), run.log.rows.size(),
                  run.log.rows.empty() ? 0.0 : run.log.rows.back().success_rate,
                  crossing ? ("at episode " + std::to_string(*crossing)).c_str() : "never");
    } else {
      std::printf("%s seed %llu: FAILED: %s\n", to_string(run.mode).c_str(), static_cast<unsigned long long>(run.seed),
                  run.error.c_str());
    }
  }
  std::printf("manifest: %s\n", result.manifest.string().c_str());
  return result.all_ok() ? 0 : 1;
}

int cmd_dump_goals(const ExperimentSpec& spec, const std::string& buffer_path, const std::string& snapshot_dir,
                   const std::string& out_path) {
  const TrainConfig& t = spec.train;
  EnvOverrides overrides = t.env_overrides;
  overrides["horizon"] = t.horizon;
  const auto env = make_env(t.env, overrides);

  std::ifstream in(buffer_path);
  require(static_cast<bool>(in), "cannot read " + buffer_path);
  auto trajectories = read_trajectories(in, *env);
  require(!trajectories.empty(), "dump-goals: " + buffer_path + " holds no trajectories");
  ReplayBuffer buffer(trajectories.size(), t.horizon);
  for (auto& traj : trajectories) buffer.store(std::move(traj));

  Snapshot snap;
  if (!snapshot_dir.empty()) snap = load_snapshot(snapshot_dir, env->spec());
  require(!t.mode.uses_model() || (snap.agent && snap.model),
          "dump-goals: mode " + to_string(t.mode) + " needs --snapshot with a dynamics model");

  const std::uint64_t seed = spec.seeds.front();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 6u};
  Rng rng(seq);
  const RelabelContext ctx{env.get(), snap.model.get(), snap.agent.get(), t.rollout_noise};
  const std::size_t count = spec.dump_goals > 0 ? spec.dump_goals : 1000;
  const auto samples = sample_relabeled_goals(buffer, t.mode, ctx, count, rng);

  std::ofstream out(out_path);
  require(static_cast<bool>(out), "cannot write " + out_path);
  write_goal_samples(out, samples);
  double mean = 0.0;
  for (const auto& s : samples) mean += s.reward;
  std::printf("%zu samples of %s written to %s; mean relabeled reward %.6f\n", samples.size(),
              to_string(t.mode).c_str(), out_path.c_str(), mean / static_cast<double>(samples.size()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-relabeling DDPG on desk-scale goal environments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "train every (mode, seed) pair and write metrics, aggregates and a manifest");
  SettingOptions run_opts;
  run_opts.attach(*run);
  bool quiet = false;
  bool dump_buffer = false;
  bool no_snapshots = false;
  run->add_flag("--quiet", quiet, "no per-episode progress on stderr");
  run->add_flag("--dump-buffer", dump_buffer, "also write each run's final replay buffer");
  run->add_flag("--no-snapshots", no_snapshots, "skip writing trained networks");

  auto* dump = app.add_subcommand("dump-goals", "relabel a stored buffer and write the goal distribution");
  SettingOptions dump_opts;
  dump_opts.attach(*dump);
  std::string buffer_path, snapshot_dir, dump_out = "goals.csv";
  dump->add_option("--buffer", buffer_path, "trajectory CSV written by run --dump-buffer")
      ->required()
      ->check(CLI::ExistingFile);
  dump->add_option("--snapshot", snapshot_dir, "snapshot directory written by run")->check(CLI::ExistingDirectory);
  dump->add_option("--file", dump_out, "output CSV");

  auto* mean = app.add_subcommand("mean-reward", "mean relabeled reward of a goal CSV");
  std::string goals_file;
  mean->add_option("file", goals_file, "goal CSV")->required()->check(CLI::ExistingFile);

  auto* agg = app.add_subcommand("aggregate", "success median and IQR across metrics CSVs");
  std::vector<std::string> metrics_files;
  std::string agg_out;
  agg->add_option("files", metrics_files, "per-seed metrics CSVs")->required()->check(CLI::ExistingFile);
  agg->add_option("--file", agg_out, "output CSV (default stdout)");

  auto* show = app.add_subcommand("config", "print the resolved settings");
  SettingOptions show_opts;
  show_opts.attach(*show);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentSpec spec = run_opts.resolve(*run);
      if (dump_buffer) spec.dump_buffer = true;
      if (no_snapshots) spec.snapshots = false;
      return cmd_run(spec, quiet);
    }
    if (dump->parsed()) return cmd_dump_goals(dump_opts.resolve(*dump), buffer_path, snapshot_dir, dump_out);
    if (mean->parsed()) {
      std::ifstream in(goals_file);
      std::printf("%.17g\n", mean_relabeled_reward(in));
      return 0;
    }
    if (agg->parsed()) {
      std::vector<MetricsLog> logs;
      for (const auto& f : metrics_files) {
        std::ifstream in(f);
        logs.push_back(MetricsLog::read_csv(in));
      }
      const auto rows = aggregate(logs);
      if (agg_out.empty()) {
        write_aggregate_csv(std::cout, rows);
      } else {
        std::ofstream out(agg_out);
        require(static_cast<bool>(out), "cannot write " + agg_out);
        write_aggregate_csv(out, rows);
      }
      return 0;
    }
    if (show->parsed()) {
      const ExperimentSpec spec = show_opts.resolve(*show);
      spec.validate();
      write_config(std::cout, spec);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "romo_her: %s\n", e.what());
    return 2;
  }
  return 0;
}
