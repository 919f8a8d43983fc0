#include "patrol/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace patrol::metrics {

void EpisodeTrace::record_step(const Env& env, const StepOutcome& outcome) {
  const GridMap& map = env.map();
  const IdlenessState& idle = env.idleness();
  double sum = 0.0;
  double peak = 0.0;
  int count = 0;
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      if (map.cell({r, c}) != CellKind::Vertex) continue;
      double v = idle.at({r, c});
      sum += v;
      peak = std::max(peak, v);
      ++count;
    }
  }
  mean_idleness.push_back(count > 0 ? sum / count : 0.0);
  max_idleness.push_back(peak);
  durations.push_back(outcome.duration);
  agent_count.push_back(env.active_count());
  long step = env.time() - 1;
  for (int id : outcome.intentional_recharges)
    recharges.push_back({step, id, env.find_agent(id)->battery});
  for (int id : outcome.battery_failures) failures.push_back({step, id});
}

PatrolSummary summarize_patrol(const EpisodeTrace& trace, int warmup) {
  if (trace.length() <= warmup)
    throw TraceTooShort("trace shorter than the warmup window");
  PatrolSummary out;
  out.warmup = warmup;
  int n = trace.length() - warmup;
  for (int t = warmup; t < trace.length(); ++t) {
    out.avg_h += trace.mean_idleness[t];
    out.maxbar_h += trace.max_idleness[t];
    out.max_h = std::max(out.max_h, trace.max_idleness[t]);
  }
  out.avg_h /= n;
  out.maxbar_h /= n;
  return out;
}

BatteryStats battery_stats(const std::vector<std::vector<EpisodeTrace>>& tests) {
  BatteryStats out;
  std::vector<double> batteries;
  std::vector<double> rates;
  for (const auto& test : tests) {
    long required = 0;
    long failed = 0;
    for (const EpisodeTrace& trace : test) {
      for (const RechargeEvent& event : trace.recharges) batteries.push_back(event.battery);
      required += static_cast<long>(trace.recharges.size() + trace.failures.size());
      failed += static_cast<long>(trace.failures.size());
      out.failure_events += static_cast<long>(trace.failures.size());
    }
    if (required > 0) rates.push_back(static_cast<double>(failed) / required);
  }
  out.recharge_events = static_cast<long>(batteries.size());
  if (!batteries.empty()) {
    for (double b : batteries) out.mean_battery += b;
    out.mean_battery /= batteries.size();
    for (double b : batteries)
      out.std_battery += (b - out.mean_battery) * (b - out.mean_battery);
    out.std_battery = std::sqrt(out.std_battery / batteries.size());
  }
  if (!rates.empty()) {
    out.rate_available = true;
    for (double r : rates) out.fail_rate += r;
    out.fail_rate /= rates.size();
    for (double r : rates)
      out.fail_rate_std += (r - out.fail_rate) * (r - out.fail_rate);
    out.fail_rate_std = std::sqrt(out.fail_rate_std / rates.size());
  }
  return out;
}

FaultSchedule fault_tolerance_schedule(int horizon_days, Rng& rng) {
  FaultSchedule schedule;
  schedule.initial_agents = rng.uniform_int(1, 8);
  int active = schedule.initial_agents;
  for (int day = 10; day < horizon_days; day += 10) {
    FaultEvent event;
    event.day = day;
    event.fail_count = active > 1 ? rng.uniform_int(1, active - 1) : 0;
    active -= event.fail_count;
    event.add_count = rng.uniform_int(0, 8 - active);
    active += event.add_count;
    schedule.events.push_back(event);
  }
  return schedule;
}

}  // namespace patrol::metrics
