#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "patrol/environment.hpp"
#include "patrol/mappo.hpp"
#include "patrol/rewards.hpp"

namespace patrol::harness {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalConfig {
  int tests = 10;
  int episodes = 100;
  int horizon = 14400;
  std::vector<int> agent_counts = {1, 2, 3, 4, 5, 6, 7, 8};
  int warmup = 150;
  int retry_bound = 50;  // retries per clean episode before QuotaUnreachable
  int day_steps = 14400;
  int days = 200;
  int fault_initial = 0;          // 0 = drawn from the schedule rng
  std::string fault_events;       // scripted "day:fail:n,day:add:n"; empty = random
  int cr_margin = 5;
};

struct ExperimentConfig {
  std::string map_path;
  std::string strategy = "marl";  // marl | cr | individual
  EnvConfig env;
  rewards::RewardParams reward;
  mappo::TrainConfig train;
  EvalConfig eval;
  uint64_t seed = 1;
  std::string out_dir = "out";
};

// Flat key-value text with [section] headers, '#' comments. Unknown keys are
// rejected so typos fail loud.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Flattened "section.key = value" view, used for the manifest snapshot.
std::map<std::string, std::string> config_entries(const ExperimentConfig& cfg);

}  // namespace patrol::harness
