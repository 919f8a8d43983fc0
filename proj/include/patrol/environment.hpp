#pragma once

#include <map>
#include <memory>
#include <vector>

#include "patrol/gridmap.hpp"
#include "patrol/rng.hpp"

namespace patrol {

struct EnvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooManyAgents : EnvError {
  using EnvError::EnvError;
};
struct InvalidAction : EnvError {
  using EnvError::EnvError;
};
struct MissingAction : EnvError {
  using EnvError::EnvError;
};
struct UnknownAgent : EnvError {
  using EnvError::EnvError;
};
struct AlreadyFailed : EnvError {
  using EnvError::EnvError;
};
struct CapacityExceeded : EnvError {
  using EnvError::EnvError;
};
struct AgentUnavailable : EnvError {
  using EnvError::EnvError;
};

struct EnvConfig {
  int b_max = 550;             // battery capacity in timesteps
  int b_swap_min = 80;         // hot-swap duration, inclusive interval
  int b_swap_max = 150;
  double p_dyn_min = 0.0;      // per-agent per-step perturbation probability
  double p_dyn_max = 0.05;
  double drain_extra_max = 0.05;  // max fractional extra battery drain per step
  double idle_jitter = 0.05;      // max fractional +- variation of step duration
  double b_l = 0.1;               // safety threshold fraction
  int max_agents = 5;
  double idle_cap = 1500.0;  // finite stand-in for the unvisited-cell "infinity"
};

enum class AgentStatus { Patrolling, Swapping, Failed };

struct AgentState {
  int id = 0;
  Loc loc;
  double battery = 1.0;  // fraction of b_max remaining
  AgentStatus status = AgentStatus::Patrolling;
  int swap_remaining = 0;  // > 0 while Swapping
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

// Per-cell elapsed time since last visit. Obstacles are pinned at -1,
// stations at 0; vertex entries are >= 0 and clamped at the cap.
struct IdlenessState {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  double at(Loc loc) const { return values[loc.row * cols + loc.col]; }
  double& at(Loc loc) { return values[loc.row * cols + loc.col]; }
  friend bool operator==(const IdlenessState&, const IdlenessState&) = default;
};

struct MoveRecord {
  int id = 0;
  Loc from;
  Loc to;
  bool perturbed = false;
  // landing-cell idleness after the step's increment but before visit resets;
  // the difference-reward counterfactual restores this value
  double pre_reset_idleness = 0.0;
  bool co_occupied = false;  // another non-failed agent ended on the same cell
};

struct StepOutcome {
  double duration = 0.0;  // real timesteps elapsed this step
  std::vector<int> intentional_recharges;
  std::vector<int> battery_failures;
  std::vector<int> perturbed;
  std::vector<MoveRecord> moves;  // one per acting agent, id order
};

struct ActorObservation {
  int rows = 0;
  int cols = 0;
  std::vector<double> map_channel;       // cell codes as reals
  std::vector<double> idleness_channel;  // normalized; other agents' cells 0
  double loc_row = 0.0;                  // own location normalized to [0,1]
  double loc_col = 0.0;
  double battery = 1.0;
  std::array<int, 4> mask{};
};

struct CriticObservation {
  int rows = 0;
  int cols = 0;
  std::vector<double> map_channel;
  std::vector<double> idleness_channel;  // all agents' cells 0
  std::vector<double> batteries;         // length max_agents, vacancies = 1
  std::vector<double> locations;         // length 2*max_agents, normalized,
                                         // vacancies = first station
};

// Discrete-time patrolling world. Exclusively owned by one episode runner;
// the random stream is part of the state, so equal seeds replay bit-identically.
class Env {
 public:
  Env() = default;

  // Agents placed uniformly at random on non-obstacle cells, batteries
  // uniform in [b_l, 1]; idleness starts at the cap on vertices.
  static Env reset(std::shared_ptr<const GridMap> map, const EnvConfig& config,
                   int n_agents, uint64_t seed);

  // Advances one step. `actions` must cover exactly the Patrolling agents,
  // and every action must be valid under valid_actions.
  StepOutcome step(const std::map<int, Action>& actions);

  void fail_agent(int id);
  int add_agent();

  ActorObservation observe_actor(int id, double c_norm) const;
  CriticObservation observe_critic(double c_norm) const;

  const GridMap& map() const { return *map_; }
  const std::shared_ptr<const GridMap>& map_ptr() const { return map_; }
  const EnvConfig& config() const { return config_; }
  const IdlenessState& idleness() const { return idle_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const AgentState* find_agent(int id) const;
  long time() const { return time_; }

  std::vector<int> patrolling_ids() const;
  int active_count() const;  // non-failed

  bool same_state(const Env& other) const {
    return idle_ == other.idle_ && agents_ == other.agents_ && time_ == other.time_ &&
           rng_ == other.rng_ && next_id_ == other.next_id_;
  }

 private:
  AgentState* find_agent_mut(int id);

  std::shared_ptr<const GridMap> map_;
  EnvConfig config_;
  IdlenessState idle_;
  std::vector<AgentState> agents_;
  long time_ = 0;
  Rng rng_;
  int next_id_ = 0;
};

}  // namespace patrol
