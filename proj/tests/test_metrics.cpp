#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "patrol/metrics.hpp"
#include "test_util.hpp"

using namespace patrol;
using namespace patrol::metrics;

namespace {

EpisodeTrace constant_trace(int steps, double mean, double peak) {
  EpisodeTrace trace;
  trace.mean_idleness.assign(steps, mean);
  trace.max_idleness.assign(steps, peak);
  trace.durations.assign(steps, 1.0);
  trace.agent_count.assign(steps, 1);
  return trace;
}

}  // namespace

TEST_CASE("summarize_patrol on constant traces") {
  EpisodeTrace trace = constant_trace(400, 12.5, 30.0);
  PatrolSummary s = summarize_patrol(trace, 150);
  CHECK(s.avg_h == doctest::Approx(12.5));
  CHECK(s.maxbar_h == doctest::Approx(30.0));
  CHECK(s.max_h == 30.0);
  CHECK(s.avg_h <= s.maxbar_h);
  CHECK_THROWS_AS(summarize_patrol(constant_trace(150, 1, 1), 150), TraceTooShort);
}

TEST_CASE("summarize_patrol matches a direct mean oracle") {
  Rng rng(41);
  EpisodeTrace trace;
  for (int t = 0; t < 500; ++t) {
    double mean = rng.uniform(0.0, 100.0);
    trace.mean_idleness.push_back(mean);
    trace.max_idleness.push_back(mean + rng.uniform(0.0, 50.0));
    trace.durations.push_back(1.0);
    trace.agent_count.push_back(2);
  }
  PatrolSummary s = summarize_patrol(trace, 150);
  double avg = 0.0, maxbar = 0.0;
  for (int t = 150; t < 500; ++t) {
    avg += trace.mean_idleness[t];
    maxbar += trace.max_idleness[t];
  }
  avg /= 350;
  maxbar /= 350;
  CHECK(std::abs(s.avg_h - avg) < 1e-12);
  CHECK(std::abs(s.maxbar_h - maxbar) < 1e-12);
  CHECK(s.avg_h <= s.maxbar_h);
}

TEST_CASE("trace recording pulls idleness statistics from the environment") {
  auto map = testutil::make_map(testutil::kOpen3x3);
  EnvConfig cfg;
  cfg.p_dyn_min = cfg.p_dyn_max = 0.0;
  cfg.idle_jitter = 0.0;
  cfg.drain_extra_max = 0.0;
  cfg.idle_cap = 100.0;
  Env env = Env::reset(map, cfg, 1, 5);
  EpisodeTrace trace;
  for (int step = 0; step < 10; ++step) {
    std::map<int, Action> actions;
    for (int id : env.patrolling_ids()) {
      auto mask = map->valid_actions(env.find_agent(id)->loc);
      for (int i = 0; i < 4; ++i)
        if (mask[i]) {
          actions[id] = static_cast<Action>(i);
          break;
        }
    }
    StepOutcome outcome = env.step(actions);
    trace.record_step(env, outcome);
  }
  CHECK(trace.length() == 10);
  for (int t = 0; t < 10; ++t) {
    CHECK(trace.mean_idleness[t] <= trace.max_idleness[t]);
    CHECK(trace.agent_count[t] >= 0);
  }
}

TEST_CASE("battery_stats aggregates events test by test") {
  SUBCASE("clean recharges exactly at the threshold") {
    EpisodeTrace trace;
    trace.recharges = {{10, 0, 0.1}, {20, 0, 0.1}, {30, 1, 0.1}};
    BatteryStats stats = battery_stats({{trace}});
    CHECK(stats.mean_battery == doctest::Approx(0.1));
    CHECK(stats.std_battery == doctest::Approx(0.0));
    CHECK(stats.rate_available);
    CHECK(stats.fail_rate == 0.0);
    CHECK(stats.fail_rate_std == 0.0);
  }
  SUBCASE("one failure among a hundred required events") {
    EpisodeTrace trace;
    for (int i = 0; i < 99; ++i) trace.recharges.push_back({i, 0, 0.12});
    trace.failures.push_back({99, 0});
    BatteryStats stats = battery_stats({{trace}});
    CHECK(stats.rate_available);
    CHECK(stats.fail_rate == doctest::Approx(0.01));
  }
  SUBCASE("no required events leaves the rate unavailable") {
    EpisodeTrace empty;
    BatteryStats stats = battery_stats({{empty}, {empty}});
    CHECK_FALSE(stats.rate_available);
    CHECK(stats.recharge_events == 0);
  }
  SUBCASE("rates are computed per test then averaged") {
    EpisodeTrace a;
    a.recharges = {{1, 0, 0.1}};
    a.failures = {{2, 0}};  // rate 0.5
    EpisodeTrace b;
    b.recharges = {{1, 0, 0.1}, {2, 0, 0.1}, {3, 0, 0.1}};
    b.failures = {{4, 0}};  // rate 0.25
    BatteryStats stats = battery_stats({{a}, {b}});
    CHECK(stats.fail_rate == doctest::Approx(0.375));
    CHECK(stats.fail_rate_std == doctest::Approx(0.125));
  }
}

TEST_CASE("fault schedule obeys the population constraints") {
  SUBCASE("a 200-day horizon has 19 boundaries") {
    Rng rng(7);
    FaultSchedule schedule = fault_tolerance_schedule(200, rng);
    CHECK(schedule.events.size() == 19);
    CHECK(schedule.events.front().day == 10);
    CHECK(schedule.events.back().day == 190);
  }
  SUBCASE("active count stays within [1, 8] under any seed") {
    for (uint64_t seed = 0; seed < 200; ++seed) {
      Rng rng(seed);
      FaultSchedule schedule = fault_tolerance_schedule(200, rng);
      int active = schedule.initial_agents;
      CHECK(active >= 1);
      CHECK(active <= 8);
      for (const FaultEvent& event : schedule.events) {
        active -= event.fail_count;
        CHECK(active >= 1);
        active += event.add_count;
        CHECK(active <= 8);
      }
    }
  }
  SUBCASE("the schedule is a pure function of the seed") {
    Rng a(99), b(99);
    FaultSchedule sa = fault_tolerance_schedule(100, a);
    FaultSchedule sb = fault_tolerance_schedule(100, b);
    CHECK(sa.initial_agents == sb.initial_agents);
    REQUIRE(sa.events.size() == sb.events.size());
    for (size_t i = 0; i < sa.events.size(); ++i) {
      CHECK(sa.events[i].day == sb.events[i].day);
      CHECK(sa.events[i].fail_count == sb.events[i].fail_count);
      CHECK(sa.events[i].add_count == sb.events[i].add_count);
    }
  }
}
