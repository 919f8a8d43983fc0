#include "patrol/config.hpp"

#include <fstream>
#include <sstream>

namespace patrol::harness {

namespace {

std::string trim(const std::string& s) {
  size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("bad integer list for " + key + ": " + value);
    }
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

class KeyReader {
 public:
  explicit KeyReader(std::map<std::string, std::string> entries)
      : entries_(std::move(entries)) {}

  template <typename F>
  void take(const std::string& key, F&& apply) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    apply(it->second);
    entries_.erase(it);
  }

  void take_int(const std::string& key, int& into) {
    take(key, [&](const std::string& v) {
      try {
        into = std::stoi(v);
      } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": " + v);
      }
    });
  }
  void take_double(const std::string& key, double& into) {
    take(key, [&](const std::string& v) {
      try {
        into = std::stod(v);
      } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": " + v);
      }
    });
  }
  void take_bool(const std::string& key, bool& into) {
    take(key, [&](const std::string& v) {
      if (v == "true" || v == "1")
        into = true;
      else if (v == "false" || v == "0")
        into = false;
      else
        throw ConfigError("bad boolean for " + key + ": " + v);
    });
  }
  void take_string(const std::string& key, std::string& into) {
    take(key, [&](const std::string& v) { into = v; });
  }
  void take_u64(const std::string& key, uint64_t& into) {
    take(key, [&](const std::string& v) {
      try {
        into = std::stoull(v);
      } catch (const std::exception&) {
        throw ConfigError("bad seed for " + key + ": " + v);
      }
    });
  }
  void take_list(const std::string& key, std::vector<int>& into) {
    take(key, [&](const std::string& v) { into = parse_int_list(v, key); });
  }

  void reject_leftovers() const {
    if (!entries_.empty()) throw ConfigError("unknown config key: " + entries_.begin()->first);
  }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> entries;
  std::istringstream stream(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("bad section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    entries[section.empty() ? key : section + "." + key] = value;
  }

  ExperimentConfig cfg;
  KeyReader reader(std::move(entries));

  reader.take_string("run.map", cfg.map_path);
  reader.take_string("run.strategy", cfg.strategy);
  reader.take_u64("run.seed", cfg.seed);
  reader.take_string("run.out", cfg.out_dir);

  reader.take_int("env.b_max", cfg.env.b_max);
  reader.take_int("env.b_swap_min", cfg.env.b_swap_min);
  reader.take_int("env.b_swap_max", cfg.env.b_swap_max);
  reader.take_double("env.p_dyn_min", cfg.env.p_dyn_min);
  reader.take_double("env.p_dyn_max", cfg.env.p_dyn_max);
  reader.take_double("env.drain_extra_max", cfg.env.drain_extra_max);
  reader.take_double("env.idle_jitter", cfg.env.idle_jitter);
  reader.take_double("env.b_l", cfg.env.b_l);
  reader.take_int("env.max_agents", cfg.env.max_agents);
  reader.take_double("env.idle_cap", cfg.env.idle_cap);

  reader.take_double("reward.c_norm", cfg.reward.c_norm);
  reader.take_double("reward.c_b", cfg.reward.c_b);
  reader.take_double("reward.c_rp", cfg.reward.c_rp);
  reader.take_double("reward.c_rd", cfg.reward.c_rd);
  reader.take_double("reward.c_recharge", cfg.reward.c_recharge);
  reader.take_double("reward.c_patrol", cfg.reward.c_patrol);

  reader.take_double("train.gamma", cfg.train.gamma);
  reader.take_double("train.lambda", cfg.train.lambda);
  reader.take_double("train.clip", cfg.train.clip);
  reader.take_int("train.epochs", cfg.train.epochs);
  reader.take_int("train.batches", cfg.train.batches);
  reader.take_double("train.entropy_start", cfg.train.entropy_start);
  reader.take_double("train.entropy_step", cfg.train.entropy_step);
  reader.take_int("train.entropy_every", cfg.train.entropy_every);
  reader.take_double("train.entropy_min", cfg.train.entropy_min);
  reader.take_double("train.lr_start", cfg.train.lr_start);
  reader.take_double("train.lr_step", cfg.train.lr_step);
  reader.take_int("train.lr_every", cfg.train.lr_every);
  reader.take_int("train.rounds", cfg.train.rounds);
  reader.take_int("train.horizon", cfg.train.horizon);
  reader.take_list("train.episode_agents", cfg.train.episode_agents);
  reader.take_int("train.checkpoint_every", cfg.train.checkpoint_every);
  reader.take_bool("train.adv_norm", cfg.train.adv_norm);

  reader.take_int("eval.tests", cfg.eval.tests);
  reader.take_int("eval.episodes", cfg.eval.episodes);
  reader.take_int("eval.horizon", cfg.eval.horizon);
  reader.take_list("eval.agent_counts", cfg.eval.agent_counts);
  reader.take_int("eval.warmup", cfg.eval.warmup);
  reader.take_int("eval.retry_bound", cfg.eval.retry_bound);
  reader.take_int("eval.day_steps", cfg.eval.day_steps);
  reader.take_int("eval.days", cfg.eval.days);
  reader.take_int("eval.fault_initial", cfg.eval.fault_initial);
  reader.take_string("eval.fault_events", cfg.eval.fault_events);
  reader.take_int("eval.cr_margin", cfg.eval.cr_margin);

  reader.reject_leftovers();

  cfg.reward.b_l = cfg.env.b_l;
  if (cfg.strategy != "marl" && cfg.strategy != "cr" && cfg.strategy != "individual")
    throw ConfigError("unknown strategy: " + cfg.strategy);
  if (cfg.env.b_l <= 0.0 || cfg.env.b_l >= 1.0) throw ConfigError("b_l must be in (0, 1)");
  if (cfg.env.b_max <= 0) throw ConfigError("b_max must be positive");
  if (cfg.env.b_swap_min <= 0 || cfg.env.b_swap_max < cfg.env.b_swap_min)
    throw ConfigError("bad b_swap interval");
  if (cfg.env.p_dyn_min < 0.0 || cfg.env.p_dyn_max > 1.0 ||
      cfg.env.p_dyn_min > cfg.env.p_dyn_max)
    throw ConfigError("bad p_dyn interval");
  for (int n : cfg.eval.agent_counts)
    if (n < 1 || n > 8) throw ConfigError("eval agent counts must be in [1, 8]");
  cfg.train.individual = cfg.strategy == "individual";
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config: " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_config(buffer.str());
}

std::map<std::string, std::string> config_entries(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> out;
  auto put = [&](const std::string& key, auto value) {
    std::ostringstream ss;
    ss << value;
    out[key] = ss.str();
  };
  put("run.map", cfg.map_path);
  put("run.strategy", cfg.strategy);
  put("run.seed", cfg.seed);
  put("run.out", cfg.out_dir);
  put("env.b_max", cfg.env.b_max);
  put("env.b_swap_min", cfg.env.b_swap_min);
  put("env.b_swap_max", cfg.env.b_swap_max);
  put("env.p_dyn_min", cfg.env.p_dyn_min);
  put("env.p_dyn_max", cfg.env.p_dyn_max);
  put("env.drain_extra_max", cfg.env.drain_extra_max);
  put("env.idle_jitter", cfg.env.idle_jitter);
  put("env.b_l", cfg.env.b_l);
  put("env.max_agents", cfg.env.max_agents);
  put("env.idle_cap", cfg.env.idle_cap);
  put("reward.c_norm", cfg.reward.c_norm);
  put("reward.c_b", cfg.reward.c_b);
  put("reward.c_rp", cfg.reward.c_rp);
  put("reward.c_rd", cfg.reward.c_rd);
  put("reward.c_recharge", cfg.reward.c_recharge);
  put("reward.c_patrol", cfg.reward.c_patrol);
  put("train.gamma", cfg.train.gamma);
  put("train.lambda", cfg.train.lambda);
  put("train.clip", cfg.train.clip);
  put("train.epochs", cfg.train.epochs);
  put("train.batches", cfg.train.batches);
  put("train.entropy_start", cfg.train.entropy_start);
  put("train.entropy_step", cfg.train.entropy_step);
  put("train.entropy_every", cfg.train.entropy_every);
  put("train.entropy_min", cfg.train.entropy_min);
  put("train.lr_start", cfg.train.lr_start);
  put("train.lr_step", cfg.train.lr_step);
  put("train.lr_every", cfg.train.lr_every);
  put("train.rounds", cfg.train.rounds);
  put("train.horizon", cfg.train.horizon);
  {
    std::ostringstream ss;
    for (size_t i = 0; i < cfg.train.episode_agents.size(); ++i)
      ss << (i ? "," : "") << cfg.train.episode_agents[i];
    out["train.episode_agents"] = ss.str();
  }
  put("train.checkpoint_every", cfg.train.checkpoint_every);
  put("train.adv_norm", cfg.train.adv_norm ? "true" : "false");
  put("eval.tests", cfg.eval.tests);
  put("eval.episodes", cfg.eval.episodes);
  put("eval.horizon", cfg.eval.horizon);
  {
    std::ostringstream ss;
    for (size_t i = 0; i < cfg.eval.agent_counts.size(); ++i)
      ss << (i ? "," : "") << cfg.eval.agent_counts[i];
    out["eval.agent_counts"] = ss.str();
  }
  put("eval.warmup", cfg.eval.warmup);
  put("eval.retry_bound", cfg.eval.retry_bound);
  put("eval.day_steps", cfg.eval.day_steps);
  put("eval.days", cfg.eval.days);
  put("eval.fault_initial", cfg.eval.fault_initial);
  put("eval.fault_events", cfg.eval.fault_events);
  put("eval.cr_margin", cfg.eval.cr_margin);
  return out;
}

}  // namespace patrol::harness
