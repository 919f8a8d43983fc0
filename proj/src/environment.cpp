#include "patrol/environment.hpp"

#include <algorithm>

#include "patrol/rewards.hpp"

namespace patrol {

namespace {

double norm_coord(int v, int extent) {
  return extent > 1 ? static_cast<double>(v) / (extent - 1) : 0.0;
}

}  // namespace

Env Env::reset(std::shared_ptr<const GridMap> map, const EnvConfig& config,
               int n_agents, uint64_t seed) {
  if (n_agents < 1 || n_agents > config.max_agents)
    throw TooManyAgents("n_agents must be in [1, max_agents]");
  Env env;
  env.map_ = std::move(map);
  env.config_ = config;
  env.rng_ = Rng(seed);

  const GridMap& m = *env.map_;
  env.idle_.rows = m.rows();
  env.idle_.cols = m.cols();
  env.idle_.values.resize(m.rows() * m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      switch (m.cell({r, c})) {
        case CellKind::Vertex:
          env.idle_.at({r, c}) = config.idle_cap;
          break;
        case CellKind::Obstacle:
          env.idle_.at({r, c}) = -1.0;
          break;
        case CellKind::ChargingStation:
          env.idle_.at({r, c}) = 0.0;
          break;
      }
    }
  }

  std::vector<Loc> cells = m.traversable_cells();
  for (int i = 0; i < n_agents; ++i) {
    AgentState agent;
    agent.id = env.next_id_++;
    agent.loc = cells[env.rng_.uniform_int(0, static_cast<int>(cells.size()) - 1)];
    agent.battery = env.rng_.uniform(config.b_l, 1.0);
    env.agents_.push_back(agent);
  }
  return env;
}

const AgentState* Env::find_agent(int id) const {
  for (const AgentState& a : agents_)
    if (a.id == id) return &a;
  return nullptr;
}

AgentState* Env::find_agent_mut(int id) {
  for (AgentState& a : agents_)
    if (a.id == id) return &a;
  return nullptr;
}

std::vector<int> Env::patrolling_ids() const {
  std::vector<int> ids;
  for (const AgentState& a : agents_)
    if (a.status == AgentStatus::Patrolling) ids.push_back(a.id);
  return ids;
}

int Env::active_count() const {
  int n = 0;
  for (const AgentState& a : agents_)
    if (a.status != AgentStatus::Failed) ++n;
  return n;
}

StepOutcome Env::step(const std::map<int, Action>& actions) {
  // exactly the Patrolling agents act
  for (const auto& [id, action] : actions) {
    const AgentState* agent = find_agent(id);
    if (!agent) throw UnknownAgent("action for unknown agent " + std::to_string(id));
    if (agent->status != AgentStatus::Patrolling)
      throw InvalidAction("action supplied for non-patrolling agent " + std::to_string(id));
    if (!map_->valid_actions(agent->loc)[static_cast<int>(action)])
      throw InvalidAction("masked action submitted for agent " + std::to_string(id));
  }
  for (const AgentState& agent : agents_) {
    if (agent.status == AgentStatus::Patrolling && !actions.count(agent.id))
      throw MissingAction("no action for patrolling agent " + std::to_string(agent.id));
  }

  StepOutcome outcome;
  outcome.duration = 1.0 + rng_.uniform(-config_.idle_jitter, config_.idle_jitter);

  // moves + drain, agents in id order (agents_ is id-ordered by construction)
  for (AgentState& agent : agents_) {
    if (agent.status != AgentStatus::Patrolling) continue;
    Action intended = actions.at(agent.id);
    MoveRecord move;
    move.id = agent.id;
    move.from = agent.loc;
    double p = rng_.uniform(config_.p_dyn_min, config_.p_dyn_max);
    bool fired = rng_.next_double() < p;
    if (fired) {
      // dynamics override the intended action: uniform over the current cell
      // and all valid neighbor cells
      std::vector<Loc> candidates{agent.loc};
      std::array<int, 4> mask = map_->valid_actions(agent.loc);
      for (int i = 0; i < 4; ++i)
        if (mask[i]) candidates.push_back(neighbor(agent.loc, kActionOrder[i]));
      agent.loc = candidates[rng_.uniform_int(0, static_cast<int>(candidates.size()) - 1)];
      outcome.perturbed.push_back(agent.id);
    } else {
      agent.loc = neighbor(agent.loc, intended);
    }
    move.to = agent.loc;
    move.perturbed = fired;
    outcome.moves.push_back(move);
    double extra = rng_.uniform(0.0, config_.drain_extra_max);
    agent.battery -= outcome.duration * (1.0 + extra) / config_.b_max;
  }

  // swap countdown; a finished swap redeploys a charged agent at the station
  for (AgentState& agent : agents_) {
    if (agent.status != AgentStatus::Swapping) continue;
    if (--agent.swap_remaining <= 0) {
      agent.swap_remaining = 0;
      agent.status = AgentStatus::Patrolling;
      agent.battery = 1.0;
    }
  }

  // idleness: vertices accrue the step duration, then visited cells reset
  for (int r = 0; r < idle_.rows; ++r) {
    for (int c = 0; c < idle_.cols; ++c) {
      if (map_->cell({r, c}) == CellKind::Vertex) {
        double& v = idle_.at({r, c});
        v = std::min(v + outcome.duration, config_.idle_cap);
      }
    }
  }
  for (MoveRecord& move : outcome.moves) {
    move.pre_reset_idleness = std::max(idle_.at(move.to), 0.0);
  }
  for (const AgentState& agent : agents_) {
    if (agent.status == AgentStatus::Failed) continue;
    if (map_->cell(agent.loc) == CellKind::Vertex) idle_.at(agent.loc) = 0.0;
  }

  // battery failure or intentional recharge, id order
  for (AgentState& agent : agents_) {
    if (agent.status != AgentStatus::Patrolling) continue;
    auto it = std::find_if(outcome.moves.begin(), outcome.moves.end(),
                           [&](const MoveRecord& m) { return m.id == agent.id; });
    if (it == outcome.moves.end()) continue;  // redeployed this step, did not act
    if (agent.battery <= 0.0) {
      agent.battery = 0.0;
      agent.status = AgentStatus::Failed;
      outcome.battery_failures.push_back(agent.id);
    } else if (!it->perturbed && map_->cell(agent.loc) == CellKind::ChargingStation) {
      agent.status = AgentStatus::Swapping;
      agent.swap_remaining = rng_.uniform_int(config_.b_swap_min, config_.b_swap_max);
      outcome.intentional_recharges.push_back(agent.id);
    }
  }

  for (MoveRecord& move : outcome.moves) {
    for (const AgentState& other : agents_) {
      if (other.id != move.id && other.status != AgentStatus::Failed && other.loc == move.to) {
        move.co_occupied = true;
        break;
      }
    }
  }

  ++time_;
  return outcome;
}

void Env::fail_agent(int id) {
  AgentState* agent = find_agent_mut(id);
  if (!agent) throw UnknownAgent("no agent " + std::to_string(id));
  if (agent->status == AgentStatus::Failed)
    throw AlreadyFailed("agent " + std::to_string(id) + " already failed");
  agent->status = AgentStatus::Failed;
  agent->swap_remaining = 0;
}

int Env::add_agent() {
  if (active_count() >= config_.max_agents)
    throw CapacityExceeded("active agents already at max_agents");
  AgentState agent;
  agent.id = next_id_++;
  agent.loc = map_->stations().front();
  agent.battery = 1.0;
  agents_.push_back(agent);
  return agent.id;
}

ActorObservation Env::observe_actor(int id, double c_norm) const {
  const AgentState* agent = find_agent(id);
  if (!agent || agent->status != AgentStatus::Patrolling)
    throw AgentUnavailable("agent " + std::to_string(id) + " cannot observe");
  ActorObservation obs;
  obs.rows = idle_.rows;
  obs.cols = idle_.cols;
  obs.map_channel.resize(idle_.values.size());
  obs.idleness_channel.resize(idle_.values.size());
  for (int r = 0; r < idle_.rows; ++r) {
    for (int c = 0; c < idle_.cols; ++c) {
      int i = r * idle_.cols + c;
      CellKind kind = map_->cell({r, c});
      obs.map_channel[i] = cell_code(kind);
      obs.idleness_channel[i] = kind == CellKind::Obstacle
                                    ? -1.0
                                    : rewards::normalize_idleness(idle_.values[i], c_norm);
    }
  }
  // shared locations: other non-failed agents' cells read as freshly visited
  for (const AgentState& other : agents_) {
    if (other.id == id || other.status == AgentStatus::Failed) continue;
    obs.idleness_channel[other.loc.row * idle_.cols + other.loc.col] = 0.0;
  }
  obs.loc_row = norm_coord(agent->loc.row, idle_.rows);
  obs.loc_col = norm_coord(agent->loc.col, idle_.cols);
  obs.battery = agent->battery;
  obs.mask = map_->valid_actions(agent->loc);
  return obs;
}

CriticObservation Env::observe_critic(double c_norm) const {
  CriticObservation obs;
  obs.rows = idle_.rows;
  obs.cols = idle_.cols;
  obs.map_channel.resize(idle_.values.size());
  obs.idleness_channel.resize(idle_.values.size());
  for (int r = 0; r < idle_.rows; ++r) {
    for (int c = 0; c < idle_.cols; ++c) {
      int i = r * idle_.cols + c;
      CellKind kind = map_->cell({r, c});
      obs.map_channel[i] = cell_code(kind);
      obs.idleness_channel[i] = kind == CellKind::Obstacle
                                    ? -1.0
                                    : rewards::normalize_idleness(idle_.values[i], c_norm);
    }
  }
  for (const AgentState& agent : agents_) {
    if (agent.status == AgentStatus::Failed) continue;
    obs.idleness_channel[agent.loc.row * idle_.cols + agent.loc.col] = 0.0;
  }
  // fixed-size vectors over patrolling agents in id order; vacant slots are
  // battery 1 and the first station's coordinates
  Loc pad = map_->stations().front();
  obs.batteries.assign(config_.max_agents, 1.0);
  obs.locations.assign(2 * config_.max_agents, 0.0);
  for (int i = 0; i < config_.max_agents; ++i) {
    obs.locations[2 * i] = norm_coord(pad.row, idle_.rows);
    obs.locations[2 * i + 1] = norm_coord(pad.col, idle_.cols);
  }
  int slot = 0;
  for (const AgentState& agent : agents_) {
    if (agent.status != AgentStatus::Patrolling) continue;
    if (slot >= config_.max_agents) break;
    obs.batteries[slot] = agent.battery;
    obs.locations[2 * slot] = norm_coord(agent.loc.row, idle_.rows);
    obs.locations[2 * slot + 1] = norm_coord(agent.loc.col, idle_.cols);
    ++slot;
  }
  return obs;
}

}  // namespace patrol
