#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "patrol/environment.hpp"
#include "patrol/rewards.hpp"
#include "test_util.hpp"

using namespace patrol;

namespace {

EnvConfig quiet_config() {
  // all stochastic ranges collapsed
  EnvConfig cfg;
  cfg.p_dyn_min = cfg.p_dyn_max = 0.0;
  cfg.idle_jitter = 0.0;
  cfg.drain_extra_max = 0.0;
  return cfg;
}

std::map<int, Action> first_valid(const Env& env) {
  std::map<int, Action> actions;
  for (int id : env.patrolling_ids()) {
    auto mask = env.map().valid_actions(env.find_agent(id)->loc);
    for (int i = 0; i < 4; ++i) {
      if (mask[i]) {
        actions[id] = static_cast<Action>(i);
        break;
      }
    }
  }
  return actions;
}

}  // namespace

TEST_CASE("reset places agents and initializes idleness") {
  auto map = testutil::make_map(testutil::kOpen3x3);
  EnvConfig cfg = quiet_config();
  Env env = Env::reset(map, cfg, 1, 42);
  REQUIRE(env.agents().size() == 1);
  const AgentState& agent = env.agents()[0];
  CHECK(agent.status == AgentStatus::Patrolling);
  CHECK(map->traversable(agent.loc));
  CHECK(agent.battery >= cfg.b_l);
  CHECK(agent.battery <= 1.0);
  CHECK(env.idleness().at({1, 1}) == 0.0);  // station stays 0
  CHECK(env.idleness().at({0, 0}) == cfg.idle_cap);
  CHECK(env.time() == 0);

  CHECK_THROWS_AS(Env::reset(map, cfg, cfg.max_agents + 1, 1), TooManyAgents);
}

TEST_CASE("same seed twice gives bit-identical states") {
  auto map = testutil::make_map(testutil::kCorridor6x6);
  EnvConfig cfg;  // full stochastic ranges
  Env a = Env::reset(map, cfg, 3, 99);
  Env b = Env::reset(map, cfg, 3, 99);
  CHECK(a.same_state(b));
  for (int step = 0; step < 200; ++step) {
    a.step(first_valid(a));
    b.step(first_valid(b));
    REQUIRE(a.same_state(b));
  }
}

TEST_CASE("disabled dynamics make the step exact") {
  auto map = testutil::make_map(testutil::kOpen3x3);
  EnvConfig cfg = quiet_config();
  Env env = Env::reset(map, cfg, 1, 3);
  double before = env.agents()[0].battery;
  StepOutcome outcome = env.step(first_valid(env));
  CHECK(outcome.duration == doctest::Approx(1.0));
  CHECK(outcome.perturbed.empty());
  CHECK(env.agents()[0].battery == doctest::Approx(before - 1.0 / cfg.b_max));
}

TEST_CASE("visited vertices reset to zero and obstacles stay at -1") {
  auto map = testutil::make_map(testutil::kCorridor6x6);
  EnvConfig cfg = quiet_config();
  Env env = Env::reset(map, cfg, 1, 11);
  for (int step = 0; step < 50; ++step) {
    env.step(first_valid(env));
    const AgentState& agent = env.agents()[0];
    if (agent.status == AgentStatus::Patrolling &&
        map->cell(agent.loc) == CellKind::Vertex)
      CHECK(env.idleness().at(agent.loc) == 0.0);
    CHECK(env.idleness().at({1, 1}) == -1.0);
    CHECK(env.idleness().at({3, 2}) == 0.0);
  }
}

TEST_CASE("idleness bookkeeping follows the per-cell law") {
  auto map = testutil::make_map(testutil::kOpen3x3);
  EnvConfig cfg = quiet_config();
  Env env = Env::reset(map, cfg, 2, 5);
  for (int step = 0; step < 300; ++step) {
    IdlenessState before = env.idleness();
    StepOutcome outcome = env.step(first_valid(env));
    // every vertex accrues the duration (clamped at the cap) and cells under
    // non-failed agents read zero
    for (Loc v : map->traversable_cells()) {
      if (map->cell(v) != CellKind::Vertex) continue;
      bool occupied = false;
      for (const AgentState& agent : env.agents())
        if (agent.status != AgentStatus::Failed && agent.loc == v) occupied = true;
      double expected =
          occupied ? 0.0 : std::min(before.at(v) + outcome.duration, cfg.idle_cap);
      CHECK(env.idleness().at(v) == doctest::Approx(expected).epsilon(1e-12));
    }
    // cached pre-reset values match the increment law as well
    for (const MoveRecord& move : outcome.moves) {
      if (map->cell(move.to) != CellKind::Vertex) continue;
      CHECK(move.pre_reset_idleness ==
            doctest::Approx(std::min(before.at(move.to) + outcome.duration, cfg.idle_cap))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("missing or masked actions are rejected") {
  auto map = testutil::make_map(testutil::kCorridor6x6);
  Env env = Env::reset(map, quiet_config(), 2, 17);
  CHECK_THROWS_AS(env.step({}), MissingAction);
  std::map<int, Action> actions = first_valid(env);
  actions[99] = Action::Up;
  CHECK_THROWS_AS(env.step(actions), UnknownAgent);
  // force a masked action: agent at (1,2) cannot go Left
  Env env2 = Env::reset(map, quiet_config(), 1, 17);
  std::map<int, Action> bad = first_valid(env2);
  auto mask = env2.map().valid_actions(env2.agents()[0].loc);
  for (int i = 0; i < 4; ++i) {
    if (!mask[i]) {
      bad[env2.agents()[0].id] = static_cast<Action>(i);
      CHECK_THROWS_AS(env2.step(bad), InvalidAction);
      break;
    }
  }
}

TEST_CASE("perturbation frequency tracks p_dyn and never triggers swaps") {
  auto map = testutil::make_map(testutil::kOpen3x3);
  EnvConfig cfg = quiet_config();
  cfg.p_dyn_min = cfg.p_dyn_max = 1.0;  // every move perturbed
  cfg.b_max = 1000000;                  // keep the agent alive
  Env env = Env::reset(map, cfg, 1, 23);
  for (int step = 0; step < 2000; ++step) {
    StepOutcome outcome = env.step(first_valid(env));
    CHECK(outcome.intentional_recharges.empty());
    CHECK(env.agents()[0].status != AgentStatus::Swapping);
  }
}

TEST_CASE("intentional station landing starts a hot swap") {
  auto map = testutil::make_map(testutil::kCorridor6x6);
  EnvConfig cfg = quiet_config();
  cfg.b_swap_min = cfg.b_swap_max = 4;
  Env env = Env::reset(map, cfg, 1, 2);
  // walk the agent onto the station deterministically
  while (env.agents()[0].status == AgentStatus::Patrolling) {
    Loc loc = env.agents()[0].loc;
    auto path = map->shortest_path(loc, {3, 2});
    REQUIRE(!path.empty());
    env.step({{0, path.front()}});
  }
  const AgentState& agent = env.agents()[0];
  REQUIRE(agent.status == AgentStatus::Swapping);
  CHECK(agent.swap_remaining == 4);
  double landing_battery = agent.battery;
  CHECK(landing_battery < 1.0);
  // no actions accepted while swapping; redeploys charged after 4 steps
  for (int i = 0; i < 4; ++i) {
    CHECK(env.patrolling_ids().empty());
    env.step({});
  }
  CHECK(env.agents()[0].status == AgentStatus::Patrolling);
  CHECK(env.agents()[0].battery == 1.0);
  CHECK(env.agents()[0].loc == Loc{3, 2});
}

TEST_CASE("battery exhaustion fails the agent") {
  auto map = testutil::make_map(testutil::kOpen3x3);
  EnvConfig cfg = quiet_config();
  cfg.b_max = 3;  // dies within a few steps
  Env env = Env::reset(map, cfg, 1, 8);
  // steer away from the station so the swap never rescues it
  auto avoid_station = [&](const Env& e) {
    std::map<int, Action> actions;
    for (int id : e.patrolling_ids()) {
      Loc loc = e.find_agent(id)->loc;
      auto mask = map->valid_actions(loc);
      for (int i = 0; i < 4; ++i) {
        if (!mask[i]) continue;
        actions[id] = static_cast<Action>(i);
        if (map->cell(neighbor(loc, kActionOrder[i])) != CellKind::ChargingStation) break;
      }
    }
    return actions;
  };
  bool failed = false;
  for (int step = 0; step < 10 && !failed; ++step) {
    StepOutcome outcome = env.step(avoid_station(env));
    if (!outcome.battery_failures.empty()) {
      failed = true;
      CHECK(outcome.battery_failures[0] == 0);
      CHECK(env.agents()[0].status == AgentStatus::Failed);
      CHECK(env.agents()[0].battery == 0.0);
    }
  }
  CHECK(failed);
  // failed agents no longer act or reset idleness
  Loc grave = env.agents()[0].loc;
  env.step({});
  env.step({});
  if (map->cell(grave) == CellKind::Vertex) CHECK(env.idleness().at(grave) > 0.0);
}

TEST_CASE("fail_agent removes the agent from observations") {
  auto map = testutil::make_map(testutil::kCorridor6x6);
  EnvConfig cfg = quiet_config();
  Env env = Env::reset(map, cfg, 3, 31);
  CHECK(env.active_count() == 3);
  CriticObservation before = env.observe_critic(150.0);
  int padding_before = 0;
  for (double b : before.batteries)
    if (b == 1.0) ++padding_before;

  env.fail_agent(1);
  CHECK(env.active_count() == 2);
  CHECK_THROWS_AS(env.fail_agent(1), AlreadyFailed);
  CHECK_THROWS_AS(env.fail_agent(9), UnknownAgent);
  CHECK_THROWS_AS(env.observe_actor(1, 150.0), AgentUnavailable);

  CriticObservation after = env.observe_critic(150.0);
  int padding_after = 0;
  for (double b : after.batteries)
    if (b == 1.0) ++padding_after;
  CHECK(padding_after >= padding_before + 1);

  // visit some cells, then fail everyone: the empty system still steps and
  // vertices below the cap keep accruing
  for (int i = 0; i < 5; ++i) env.step(first_valid(env));
  env.fail_agent(0);
  env.fail_agent(2);
  Loc fresh{-1, -1};
  for (Loc v : map->traversable_cells()) {
    if (map->cell(v) == CellKind::Vertex && env.idleness().at(v) < cfg.idle_cap - 10.0) {
      fresh = v;
      break;
    }
  }
  REQUIRE(fresh.row >= 0);
  double idle_before = env.idleness().at(fresh);
  env.step({});
  CHECK(env.idleness().at(fresh) > idle_before);
  CHECK(env.patrolling_ids().empty());
}

TEST_CASE("add_agent deploys at the first station fully charged") {
  auto map = testutil::make_map(testutil::kCorridor6x6);
  EnvConfig cfg = quiet_config();
  cfg.max_agents = 2;
  Env env = Env::reset(map, cfg, 1, 12);
  int id = env.add_agent();
  CHECK(id == 1);
  const AgentState* added = env.find_agent(id);
  CHECK(added->loc == Loc{3, 2});
  CHECK(added->battery == 1.0);
  CHECK_THROWS_AS(env.add_agent(), CapacityExceeded);
  env.fail_agent(0);
  int replacement = env.add_agent();
  CHECK(replacement == 2);
}

TEST_CASE("adding an agent after total failure resumes patrolling") {
  auto map = testutil::make_map(testutil::kCorridor6x6);
  EnvConfig cfg = quiet_config();
  Env env = Env::reset(map, cfg, 1, 21);
  env.fail_agent(0);
  env.step({});
  int id = env.add_agent();
  REQUIRE(env.patrolling_ids() == std::vector<int>{id});
  // move off the station onto a vertex: the visit resets the cell again
  Loc station = env.find_agent(id)->loc;
  auto mask = map->valid_actions(station);
  Action a = Action::Up;
  for (int i = 0; i < 4; ++i)
    if (mask[i]) a = static_cast<Action>(i);
  env.step({{id, a}});
  Loc landed = env.find_agent(id)->loc;
  if (map->cell(landed) == CellKind::Vertex) CHECK(env.idleness().at(landed) == 0.0);
}

TEST_CASE("actor observation carries shared idleness and the mask") {
  auto map = testutil::make_map(testutil::kOpen3x3);
  EnvConfig cfg = quiet_config();
  Env env = Env::reset(map, cfg, 2, 77);
  env.step(first_valid(env));
  int self = env.patrolling_ids().front();
  ActorObservation obs = env.observe_actor(self, 150.0);
  const AgentState* self_agent = env.find_agent(self);
  CHECK(obs.mask == map->valid_actions(self_agent->loc));
  CHECK(obs.battery == self_agent->battery);
  // own and other agents' cells read 0
  for (const AgentState& agent : env.agents()) {
    if (agent.status == AgentStatus::Failed) continue;
    CHECK(obs.idleness_channel[agent.loc.row * 3 + agent.loc.col] == 0.0);
  }
  // normalized entries stay in {-1} U [0, 1]
  for (double v : obs.idleness_channel) {
    bool ok = v == -1.0 || (v >= 0.0 && v <= 1.0);
    CHECK(ok);
  }
  // map channel feeds raw cell codes
  CHECK(obs.map_channel[1 * 3 + 1] == 5.0);
}

TEST_CASE("critic observation pads to max_agents") {
  auto map = testutil::make_map(testutil::kCorridor6x6);
  EnvConfig cfg = quiet_config();
  cfg.max_agents = 5;
  Env env = Env::reset(map, cfg, 2, 13);
  CriticObservation obs = env.observe_critic(150.0);
  REQUIRE(obs.batteries.size() == 5);
  REQUIRE(obs.locations.size() == 10);
  CHECK(obs.batteries[2] == 1.0);
  CHECK(obs.batteries[3] == 1.0);
  CHECK(obs.batteries[4] == 1.0);
  // vacancies carry the first station's normalized coordinates
  double station_row = 3.0 / 5.0;
  double station_col = 2.0 / 5.0;
  CHECK(obs.locations[8] == doctest::Approx(station_row));
  CHECK(obs.locations[9] == doctest::Approx(station_col));

  Env full = Env::reset(map, cfg, 5, 13);
  CriticObservation full_obs = full.observe_critic(150.0);
  for (int i = 0; i < 5; ++i) CHECK(full_obs.batteries[i] == full.agents()[i].battery);
}
