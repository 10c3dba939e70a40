#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "romo/agent/trainer.hpp"

namespace romo {

struct ExperimentSpec {
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir = "runs";
  std::string label = "experiment";
  /// Modes run under identical budgets; empty means just train.mode.
  std::vector<RelabelMode> compare;
  /// Relabeled-goal samples written per run after training (0 = none).
  std::size_t dump_goals = 0;
  bool dump_buffer = false;
  bool snapshots = true;
  /// Strategy and depth remembered for modes set by kind; a mode that has no
  /// strategy or depth ignores them.
  StartStrategy strategy = StartStrategy::Future;
  int n_steps = 5;

  std::vector<RelabelMode> modes() const;
  void validate() const;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

/// "none", "her", "fr", "mher" with a start strategy and depth; fields the
/// kind does not use are ignored.
RelabelMode make_mode(const std::string& kind, StartStrategy strategy, int n);
/// Inverse of to_string(RelabelMode): "none", "her-final", "fr-episode-n5", "mher-n3".
RelabelMode relabel_mode_from_string(const std::string& text);

/// Flat "key = value" lines; '#' starts a comment; blank lines ignored.
Settings parse_config(std::istream& in);

/// Applies one setting. Keys match the config-file names listed by
/// setting_keys(); "env.<name>" sets an environment constant override.
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);
void apply_settings(ExperimentSpec& spec, const Settings& settings);
const std::vector<std::string>& setting_keys();

/// Every resolved setting, in a stable order, in the config-file syntax.
Settings resolved_settings(const ExperimentSpec& spec);
void write_config(std::ostream& out, const ExperimentSpec& spec);

}  // namespace romo
