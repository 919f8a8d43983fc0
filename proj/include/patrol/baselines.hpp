#pragma once

#include "patrol/environment.hpp"
#include "patrol/mappo.hpp"

namespace patrol::baselines {

struct CrParams {
  double b_l = 0.1;
  int b_max = 550;
  int margin = 5;  // extra battery timesteps kept in reserve on the way back
};

// Per-agent mode record owned by the episode runner.
struct CrAgentState {
  enum class Mode { Patrol, ReturnToCharge };
  Mode mode = Mode::Patrol;
  std::vector<Action> path;  // remaining actions toward the chosen station
  Loc expected;              // where the last emitted action should have landed
  bool has_expected = false;
};

// Battery fraction below which the agent heads for the nearest station:
// b_l + (path length + margin) / b_max.
double cr_critical_point(const GridMap& map, Loc loc, const CrParams& params);

// Patrol mode: valid neighbor with maximum shared idleness, ties uniform at
// random. ReturnToCharge mode: next stored action, path recomputed from the
// current cell whenever dynamics displaced the agent.
Action cr_action(const GridMap& map, const IdlenessState& shared_idleness, Loc loc,
                 double battery, CrAgentState& state, const CrParams& params, Rng& rng);

// Per-agent actor parameter sets and the single-agent-per-episode plan; no
// cross-agent experience sharing.
mappo::TrainConfig individual_learner_config(mappo::TrainConfig base);

}  // namespace patrol::baselines
