#include "romo/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace romo {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ContractError("setting '" + key + "': '" + value + "' is not a number");
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ContractError("setting '" + key + "': '" + value + "' is not an integer");
}

std::size_t to_count(const std::string& key, const std::string& value) {
  const long long v = to_int(key, value);
  require(v >= 0, "setting '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ContractError("setting '" + key + "': '" + value + "' is not a boolean");
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& item : split(value, ',')) out.push_back(to_count(key, item));
  require(!out.empty(), "setting '" + key + "' needs at least one layer size");
  return out;
}

// Shortest text that reads back to the same double.
std::string format(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < items.size(); ++i) ss << (i ? "," : "") << items[i];
  return ss.str();
}

std::string mode_kind(const RelabelMode& m) {
  switch (m.kind) {
    case RelabelKind::None: return "none";
    case RelabelKind::Her: return "her";
    case RelabelKind::Foresight: return "fr";
    case RelabelKind::MherStyle: return "mher";
  }
  return "?";
}

bool has_strategy(const RelabelMode& m) { return m.kind == RelabelKind::Her || m.kind == RelabelKind::Foresight; }

}  // namespace

std::vector<RelabelMode> ExperimentSpec::modes() const {
  return compare.empty() ? std::vector<RelabelMode>{train.mode} : compare;
}

void ExperimentSpec::validate() const {
  train.validate();
  require(!seeds.empty(), "experiment: seed list is empty");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  require(unique.size() == seeds.size(), "experiment: seed list has duplicates");
  require(!out_dir.empty() && !label.empty(), "experiment: output directory and label must be set");
  for (const auto& m : modes()) m.validate();
  std::set<std::string> names;
  for (const auto& m : modes()) names.insert(to_string(m));
  require(names.size() == modes().size(), "experiment: comparison set repeats a mode");
}

RelabelMode make_mode(const std::string& kind, StartStrategy strategy, int n) {
  if (kind == "none") return RelabelMode::none();
  if (kind == "her") return RelabelMode::her(strategy);
  if (kind == "fr") return RelabelMode::foresight(strategy, n);
  if (kind == "mher") return RelabelMode::mher_style(n);
  throw ContractError("unknown mode '" + kind + "' (none, her, fr, mher)");
}

RelabelMode relabel_mode_from_string(const std::string& text) {
  const auto parts = split(text, '-');
  const auto depth = [&](const std::string& p) {
    require(p.size() > 1 && p[0] == 'n', "mode '" + text + "': expected a depth like n5");
    return static_cast<int>(to_int("mode", p.substr(1)));
  };
  RelabelMode m;
  if (parts.size() == 1 && parts[0] == "none") {
    m = RelabelMode::none();
  } else if (parts.size() == 2 && parts[0] == "her") {
    m = RelabelMode::her(start_strategy_from_string(parts[1]));
  } else if (parts.size() == 3 && parts[0] == "fr") {
    m = RelabelMode::foresight(start_strategy_from_string(parts[1]), depth(parts[2]));
  } else if (parts.size() == 2 && parts[0] == "mher") {
    m = RelabelMode::mher_style(depth(parts[1]));
  } else {
    throw ContractError("cannot parse mode '" + text + "' (none, her-<strategy>, fr-<strategy>-n<k>, mher-n<k>)");
  }
  m.validate();
  return m;
}

Settings parse_config(std::istream& in) {
  Settings out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config line " + std::to_string(line_no) + ": expected key = value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys{
      "env",          "mode",          "strategy",       "n_steps",
      "compare",      "replay_ratio",  "episodes",       "trajectories_per_episode",
      "updates_per_trajectory",        "batch_size",     "horizon",
      "buffer_trajectories",           "trials",         "seeds",
      "out",          "label",         "gamma",          "polyak",
      "actor_lr",     "critic_lr",     "action_penalty", "noise_scale",
      "random_action_prob",            "hidden",         "model_hidden",
      "model_lr",     "model_updates", "rollout_noise",  "stop_at_success",
      "dump_goals",   "dump_buffer",   "snapshots"};
  return keys;
}

void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value) {
  TrainConfig& t = spec.train;
  if (key.rfind("env.", 0) == 0) {
    require(key.size() > 4, "setting 'env.': missing constant name");
    t.env_overrides[key.substr(4)] = to_double(key, value);
  } else if (key == "env") {
    t.env = value;
  } else if (key == "mode") {
    t.mode = make_mode(value, spec.strategy, spec.n_steps);
  } else if (key == "strategy") {
    spec.strategy = start_strategy_from_string(value);
    if (has_strategy(t.mode)) t.mode.strategy = spec.strategy;
  } else if (key == "n_steps") {
    spec.n_steps = static_cast<int>(to_int(key, value));
    if (t.mode.uses_model()) t.mode.n = spec.n_steps;
  } else if (key == "compare") {
    spec.compare.clear();
    for (const auto& item : split(value, ',')) spec.compare.push_back(relabel_mode_from_string(item));
  } else if (key == "replay_ratio") {
    t.replay_ratio = to_double(key, value);
  } else if (key == "episodes") {
    t.episodes = static_cast<int>(to_int(key, value));
  } else if (key == "trajectories_per_episode") {
    t.trajectories_per_episode = static_cast<int>(to_int(key, value));
  } else if (key == "updates_per_trajectory") {
    t.updates_per_trajectory = static_cast<int>(to_int(key, value));
  } else if (key == "batch_size") {
    t.batch_size = to_count(key, value);
  } else if (key == "horizon") {
    t.horizon = static_cast<int>(to_int(key, value));
  } else if (key == "buffer_trajectories") {
    t.buffer_trajectories = to_count(key, value);
  } else if (key == "trials") {
    t.eval_trials = static_cast<int>(to_int(key, value));
  } else if (key == "seeds" || key == "seed") {
    spec.seeds.clear();
    for (const auto& item : split(value, ',')) spec.seeds.push_back(to_count(key, item));
    if (!spec.seeds.empty()) t.seed = spec.seeds.front();
  } else if (key == "out") {
    spec.out_dir = value;
  } else if (key == "label") {
    spec.label = value;
  } else if (key == "gamma") {
    t.agent.gamma = to_double(key, value);
  } else if (key == "polyak") {
    t.agent.polyak = to_double(key, value);
  } else if (key == "actor_lr") {
    t.agent.actor_lr = to_double(key, value);
  } else if (key == "critic_lr") {
    t.agent.critic_lr = to_double(key, value);
  } else if (key == "action_penalty") {
    t.agent.action_penalty = to_double(key, value);
  } else if (key == "noise_scale") {
    t.agent.noise_scale = to_double(key, value);
  } else if (key == "random_action_prob") {
    t.agent.random_action_prob = to_double(key, value);
  } else if (key == "hidden") {
    t.agent.hidden = to_sizes(key, value);
  } else if (key == "model_hidden") {
    t.dynamics.hidden = to_sizes(key, value);
  } else if (key == "model_lr") {
    t.dynamics.learning_rate = to_double(key, value);
  } else if (key == "model_updates") {
    t.dynamics.updates_per_batch = static_cast<int>(to_int(key, value));
  } else if (key == "rollout_noise") {
    t.rollout_noise = to_double(key, value);
  } else if (key == "stop_at_success") {
    t.stop_at_success = to_double(key, value);
  } else if (key == "dump_goals") {
    spec.dump_goals = to_count(key, value);
  } else if (key == "dump_buffer") {
    spec.dump_buffer = to_bool(key, value);
  } else if (key == "snapshots") {
    spec.snapshots = to_bool(key, value);
  } else {
    throw ContractError("unknown setting '" + key + "'");
  }
}

void apply_settings(ExperimentSpec& spec, const Settings& settings) {
  for (const auto& [k, v] : settings) apply_setting(spec, k, v);
}

Settings resolved_settings(const ExperimentSpec& spec) {
  const TrainConfig& t = spec.train;
  std::vector<std::string> compare;
  for (const auto& m : spec.compare) compare.push_back(to_string(m));
  Settings s{
      {"env", t.env},
      {"mode", mode_kind(t.mode)},
      {"strategy", to_string(has_strategy(t.mode) ? t.mode.strategy : spec.strategy)},
      {"n_steps", std::to_string(t.mode.uses_model() ? t.mode.n : spec.n_steps)},
      {"compare", join(compare)},
      {"replay_ratio", format(t.replay_ratio)},
      {"episodes", std::to_string(t.episodes)},
      {"trajectories_per_episode", std::to_string(t.trajectories_per_episode)},
      {"updates_per_trajectory", std::to_string(t.updates_per_trajectory)},
      {"batch_size", std::to_string(t.batch_size)},
      {"horizon", std::to_string(t.horizon)},
      {"buffer_trajectories", std::to_string(t.buffer_trajectories)},
      {"trials", std::to_string(t.eval_trials)},
      {"seeds", join(spec.seeds)},
      {"out", spec.out_dir},
      {"label", spec.label},
      {"gamma", format(t.agent.gamma)},
      {"polyak", format(t.agent.polyak)},
      {"actor_lr", format(t.agent.actor_lr)},
      {"critic_lr", format(t.agent.critic_lr)},
      {"action_penalty", format(t.agent.action_penalty)},
      {"noise_scale", format(t.agent.noise_scale)},
      {"random_action_prob", format(t.agent.random_action_prob)},
      {"hidden", join(t.agent.hidden)},
      {"model_hidden", join(t.dynamics.hidden)},
      {"model_lr", format(t.dynamics.learning_rate)},
      {"model_updates", std::to_string(t.dynamics.updates_per_batch)},
      {"rollout_noise", format(t.rollout_noise)},
      {"stop_at_success", format(t.stop_at_success)},
      {"dump_goals", std::to_string(spec.dump_goals)},
      {"dump_buffer", spec.dump_buffer ? "true" : "false"},
      {"snapshots", spec.snapshots ? "true" : "false"},
  };
  for (const auto& [k, v] : t.env_overrides) s.emplace_back("env." + k, format(v));
  return s;
}

void write_config(std::ostream& out, const ExperimentSpec& spec) {
  for (const auto& [k, v] : resolved_settings(spec)) {
    if (v.empty()) continue;
    out << k << " = " << v << '\n';
  }
}

}  // namespace romo
