#pragma once

#include "patrol/environment.hpp"

namespace patrol::metrics {

struct MetricsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TraceTooShort : MetricsError {
  using MetricsError::MetricsError;
};

struct RechargeEvent {
  long step = 0;
  int agent = 0;
  double battery = 0.0;
};

struct FailureEvent {
  long step = 0;
  int agent = 0;
};

// Per-step measurements of one episode; idleness in raw timesteps.
struct EpisodeTrace {
  std::vector<double> mean_idleness;  // Idle(G_t) over vertex cells
  std::vector<double> max_idleness;   // max Idle(v_t)
  std::vector<double> durations;
  std::vector<int> agent_count;  // non-failed agents after the step
  std::vector<RechargeEvent> recharges;
  std::vector<FailureEvent> failures;

  void record_step(const Env& env, const StepOutcome& outcome);
  int length() const { return static_cast<int>(mean_idleness.size()); }
};

struct PatrolSummary {
  double avg_h = 0.0;     // mean of Idle(G_t) over the window
  double maxbar_h = 0.0;  // mean of per-step max idleness over the window
  double max_h = 0.0;     // single largest Idle(v_t) seen in the window
  int warmup = 0;
};

// Statistics over steps (warmup, end].
PatrolSummary summarize_patrol(const EpisodeTrace& trace, int warmup = 150);

struct BatteryStats {
  double mean_battery = 0.0;  // over all recharge events
  double std_battery = 0.0;
  double fail_rate = 0.0;  // mean over tests of failures / required events
  double fail_rate_std = 0.0;
  bool rate_available = false;  // false when no test had a required event
  long recharge_events = 0;
  long failure_events = 0;
};

// `tests` groups episode traces test-by-test; the failure rate is computed
// per test and aggregated across tests.
BatteryStats battery_stats(const std::vector<std::vector<EpisodeTrace>>& tests);

struct FaultEvent {
  int day = 0;  // 10-day boundaries: 10, 20, ...
  int fail_count = 0;
  int add_count = 0;
};

struct FaultSchedule {
  int initial_agents = 1;
  std::vector<FaultEvent> events;
};

// Random schedule honoring the >=1-active and <=8-total constraints;
// deterministic under the rng seed.
FaultSchedule fault_tolerance_schedule(int horizon_days, Rng& rng);

}  // namespace patrol::metrics
