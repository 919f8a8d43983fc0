#include "patrol/baselines.hpp"

namespace patrol::baselines {

double cr_critical_point(const GridMap& map, Loc loc, const CrParams& params) {
  auto [station, path] = map.nearest_station(loc);
  (void)station;
  return params.b_l + (static_cast<double>(path.size()) + params.margin) / params.b_max;
}

namespace {

Action stalest_neighbor(const GridMap& map, const IdlenessState& idleness, Loc loc, Rng& rng) {
  std::array<int, 4> mask = map.valid_actions(loc);
  double best = -2.0;
  std::vector<Action> winners;
  for (int i = 0; i < 4; ++i) {
    if (!mask[i]) continue;
    double v = idleness.at(neighbor(loc, kActionOrder[i]));
    if (v > best) {
      best = v;
      winners.assign(1, kActionOrder[i]);
    } else if (v == best) {
      winners.push_back(kActionOrder[i]);
    }
  }
  if (winners.size() == 1) return winners.front();
  return winners[rng.uniform_int(0, static_cast<int>(winners.size()) - 1)];
}

}  // namespace

Action cr_action(const GridMap& map, const IdlenessState& shared_idleness, Loc loc,
                 double battery, CrAgentState& state, const CrParams& params, Rng& rng) {
  double threshold = cr_critical_point(map, loc, params);
  if (state.mode == CrAgentState::Mode::ReturnToCharge &&
      battery > threshold + 2.0 / params.b_max) {
    // battery this far above the trigger means a hot-swap completed
    state.mode = CrAgentState::Mode::Patrol;
    state.path.clear();
    state.has_expected = false;
  }
  if (state.mode == CrAgentState::Mode::Patrol && battery <= threshold) {
    state.mode = CrAgentState::Mode::ReturnToCharge;
    state.path = map.nearest_station(loc).second;
    state.has_expected = false;
  }
  if (state.mode == CrAgentState::Mode::ReturnToCharge) {
    if (state.has_expected && loc != state.expected) {
      // dynamics moved the agent; replan from where it actually is
      state.path = map.nearest_station(loc).second;
    }
    if (state.path.empty() && map.cell(loc) != CellKind::ChargingStation) {
      state.path = map.nearest_station(loc).second;
    }
    Action a;
    if (state.path.empty()) {
      // parked on a station without an intentional landing (perturbed there);
      // step off, then walk back so the landing counts
      a = stalest_neighbor(map, shared_idleness, loc, rng);
    } else {
      a = state.path.front();
      state.path.erase(state.path.begin());
    }
    state.expected = neighbor(loc, a);
    state.has_expected = true;
    return a;
  }
  Action a = stalest_neighbor(map, shared_idleness, loc, rng);
  state.expected = neighbor(loc, a);
  state.has_expected = true;
  return a;
}

mappo::TrainConfig individual_learner_config(mappo::TrainConfig base) {
  base.individual = true;
  // one episode per solo agent, three random subsets, one with everyone
  base.episode_agents = {1, 1, 1, 1, 1, 2, 3, 4, 5};
  return base;
}

}  // namespace patrol::baselines
