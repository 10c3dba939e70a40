#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "romo/cli/config.hpp"

namespace romo {

/// Quantile with linear interpolation between order statistics:
/// position q * (n - 1) in the sorted values.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct AggregateRow {
  int episode = 0;
  std::uint64_t env_steps = 0;
  std::size_t seeds = 0;  // runs that reached this episode
  double success_median = 0.0;
  double success_q25 = 0.0;
  double success_q75 = 0.0;
};

/// Per-episode success median and interquartile range across seeds. Runs
/// stopped early contribute only to the episodes they completed.
std::vector<AggregateRow> aggregate(const std::vector<MetricsLog>& logs);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

/// First episode whose success rate reaches threshold.
std::optional<int> first_crossing(const MetricsLog& log, double threshold);

/// Trained agent (and dynamics model for model-based modes) on disk.
struct Snapshot {
  std::unique_ptr<DdpgAgent> agent;
  std::unique_ptr<DynamicsModel> model;  // null for model-free runs
};

void save_snapshot(const std::filesystem::path& dir, const DdpgAgent& agent, const DynamicsModel* model);
/// Restores networks and normalizers; optimizer state is not kept.
Snapshot load_snapshot(const std::filesystem::path& dir, const GoalEnvSpec& env);

struct GoalSample {
  Vector achieved;   // phi(next_state)
  Vector desired;    // original desired goal
  Vector relabeled;  // goal after relabeling
  double reward = 0.0;
};

/// Samples count transitions and relabels every one of them with mode
/// (ratio 1), recording the goals involved and the recomputed reward.
std::vector<GoalSample> sample_relabeled_goals(const ReplayBuffer& buffer, const RelabelMode& mode,
                                               const RelabelContext& ctx, std::size_t count, Rng& rng);
/// Header ag0..,dg0..,rg0..,reward then one row per sample.
void write_goal_samples(std::ostream& out, const std::vector<GoalSample>& samples);
/// Mean of the reward column of a goal-sample CSV.
double mean_relabeled_reward(std::istream& in);

struct RunRecord {
  RelabelMode mode;
  std::uint64_t seed = 0;
  std::filesystem::path metrics;
  bool ok = false;
  std::string error;
  MetricsLog log;
};

struct ExperimentResult {
  std::filesystem::path root;
  std::vector<RunRecord> runs;
  std::filesystem::path manifest;

  bool all_ok() const;
  std::vector<const RunRecord*> runs_for(const RelabelMode& mode) const;
};

using ProgressFn = std::function<void(const RelabelMode&, std::uint64_t seed, const MetricsRow&)>;

/// Trains every (mode, seed) pair under one budget and writes, below
/// out_dir/label:
///   config.txt                      resolved settings, reloadable
///   <mode>/seed-<s>.csv             per-episode metrics
///   <mode>/aggregate.csv            success median and IQR across seeds
///   <mode>/seed-<s>/                snapshot (when enabled)
///   <mode>/seed-<s>.goals.csv       relabeled goals (when dump_goals > 0)
///   <mode>/seed-<s>.trajectories.csv final buffer (when dump_buffer)
///   manifest.json                   settings, runs, files and outcomes
/// A failed run is recorded and skipped; the others still run.
ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {});

}  // namespace romo
