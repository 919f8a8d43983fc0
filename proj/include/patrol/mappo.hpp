#pragma once

#include <functional>
#include <optional>

#include "patrol/policy.hpp"
#include "patrol/rewards.hpp"

namespace patrol::mappo {

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LengthMismatch : TrainError {
  using TrainError::TrainError;
};
struct EmptyBatch : TrainError {
  using TrainError::TrainError;
};

struct TransitionRecord {
  CriticObservation critic_obs;
  ActorObservation actor_obs;
  Action action = Action::Up;
  double prob = 1.0;    // behavior-policy probability of `action`
  double reward = 0.0;
  double value = 0.0;   // critic estimate of s_t
  int step = 0;
  bool swap_filled = false;  // reconstructed from another agent's trajectory
};

struct Trajectory {
  int agent_id = 0;
  std::vector<TransitionRecord> records;  // step-ordered
};

struct TrainConfig {
  double gamma = 0.95;
  double lambda = 0.95;
  double clip = 0.15;
  int epochs = 3;
  int batches = 50;
  double entropy_start = 0.04;
  double entropy_step = 0.01;
  int entropy_every = 500;  // rounds between entropy coefficient decreases
  double entropy_min = 0.005;
  double lr_start = 2e-4;
  double lr_step = 5e-5;
  int lr_every = 1000;  // rounds between learning-rate decreases
  int rounds = 3000;
  int horizon = 5000;
  std::vector<int> episode_agents = {1, 1, 1, 1, 2, 3, 4, 5};
  int checkpoint_every = 100;
  bool adv_norm = true;
  bool individual = false;  // per-agent actors, no experience sharing
};

double lr_schedule(const TrainConfig& cfg, int round);
double entropy_schedule(const TrainConfig& cfg, int round);

struct EpisodeResult {
  int n_agents = 0;
  int length = 0;
  bool battery_failure = false;
  std::vector<Trajectory> trajectories;        // one per agent, id order
  std::vector<double> cumulative_rewards;      // per agent, own records only
  std::vector<double> recharge_batteries;      // battery at each hot-swap entry
};

// Runs one episode to the horizon, or ends it early at the first battery
// failure. Swapping agents produce no records while away.
EpisodeResult collect_episode(const PolicySet& policy,
                              std::shared_ptr<const GridMap> map, const EnvConfig& env_cfg,
                              const rewards::RewardParams& reward_params, int n_agents,
                              int horizon, uint64_t seed);

std::vector<EpisodeResult> collect_round(const PolicySet& policy,
                                         std::shared_ptr<const GridMap> map,
                                         const EnvConfig& env_cfg,
                                         const rewards::RewardParams& reward_params,
                                         const TrainConfig& cfg, uint64_t master_seed,
                                         int round);

// Fills each agent's swap gaps with copies of the lowest-id active agent's
// records at those steps; steps where no agent was active stay empty.
void reconstruct_swap_gaps(std::vector<Trajectory>& trajectories, int episode_len);

std::vector<double> compute_gae(const std::vector<double>& rewards,
                                const std::vector<double>& values, double bootstrap,
                                double gamma, double lambda);

// Discounted reward-to-go per timeline step for one (step, reward) series;
// steps without a record contribute nothing but still advance the discount.
std::vector<double> discounted_to_go(const std::vector<std::pair<int, double>>& series,
                                     int len, double gamma);

// Scalarized critic target: mean over agents of discounted reward-to-go.
std::vector<double> compute_v_targ_prime(const std::vector<Trajectory>& trajectories,
                                         int len, double gamma);

// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A), differentiable through ratio
ad::Tensor clipped_surrogate(const ad::Tensor& ratio, double advantage, double clip);

struct LossReport {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  int actor_samples = 0;
  int critic_samples = 0;
};

struct RoundLog {
  int round = 0;
  int episode = 0;
  int n_agents = 0;
  int length = 0;
  std::vector<double> cumulative_rewards;
  std::vector<double> recharge_batteries;  // chronological within the episode
  double mean_recharge_battery = 1.0;      // 1 when the episode had no recharges
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
};

class Trainer {
 public:
  Trainer(std::shared_ptr<const GridMap> map, EnvConfig env_cfg,
          rewards::RewardParams reward_params, TrainConfig cfg, uint64_t seed);

  PolicySet& policy() { return policy_; }
  const PolicySet& policy() const { return policy_; }

  // Clipped-surrogate update over one round of reconstructed trajectories.
  LossReport update(std::vector<EpisodeResult>& episodes, int round);

  // collect -> reconstruct -> advantages/targets -> update, `rounds` times
  std::vector<RoundLog> run(int rounds,
                            const std::function<void(int, const PolicySet&)>& on_checkpoint = {});

 private:
  std::shared_ptr<const GridMap> map_;
  EnvConfig env_cfg_;
  rewards::RewardParams reward_params_;
  TrainConfig cfg_;
  uint64_t seed_;
  PolicySet policy_;
  std::vector<ad::Adam> actor_opts_;
  ad::Adam critic_opt_;
};

}  // namespace patrol::mappo
