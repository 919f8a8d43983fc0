#pragma once

#include <ostream>

#include "patrol/baselines.hpp"
#include "patrol/config.hpp"
#include "patrol/metrics.hpp"

namespace patrol::harness {

inline constexpr const char* kVersion = "0.1.0";

struct QuotaUnreachable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Supplies a joint action for the patrolling agents each step.
class ActionProvider {
 public:
  virtual ~ActionProvider() = default;
  virtual std::map<int, Action> act(const Env& env) = 0;
};

class MarlProvider : public ActionProvider {
 public:
  MarlProvider(const PolicySet& policy, double c_norm, uint64_t seed)
      : policy_(policy), c_norm_(c_norm), rng_(seed) {}
  std::map<int, Action> act(const Env& env) override;

 private:
  const PolicySet& policy_;
  double c_norm_;
  Rng rng_;
};

class CrProvider : public ActionProvider {
 public:
  CrProvider(baselines::CrParams params, uint64_t seed) : params_(params), rng_(seed) {}
  std::map<int, Action> act(const Env& env) override;

 private:
  baselines::CrParams params_;
  std::map<int, baselines::CrAgentState> states_;
  Rng rng_;
};

// Builds the provider selected by cfg.strategy; `checkpoint` is required for
// marl/individual.
std::unique_ptr<ActionProvider> make_provider(const ExperimentConfig& cfg,
                                              const PolicySet* policy, uint64_t seed);

// Runs one evaluation episode to the horizon; battery failures do not end it.
metrics::EpisodeTrace run_eval_episode(std::shared_ptr<const GridMap> map,
                                       const EnvConfig& env_cfg, ActionProvider& provider,
                                       int n_agents, int horizon, uint64_t seed);

struct FileChecksum {
  std::string path;  // relative to the output directory
  std::string checksum;
};

uint64_t fnv1a64(const std::string& bytes);
std::string file_checksum(const std::string& path);

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs);

int cmd_train(const ExperimentConfig& cfg);
int cmd_eval_battery(const ExperimentConfig& cfg, const std::string& checkpoint);
int cmd_eval_patrol(const ExperimentConfig& cfg, const std::string& checkpoint);
int cmd_eval_fault(const ExperimentConfig& cfg, const std::string& checkpoint);
int cmd_gradcheck(std::ostream& out);

// Shared entry point for the CLI and the python module. Exit codes:
// 0 success, 1 invariant violation, 2 config error.
int run_command(const std::string& command, const std::string& config_path,
                const std::string& checkpoint, std::optional<uint64_t> seed_override,
                const std::string& out_override);

}  // namespace patrol::harness
