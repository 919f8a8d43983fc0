#include "patrol/rewards.hpp"

#include <algorithm>
#include <cmath>

namespace patrol::rewards {

double normalize_idleness(double idleness, double c_norm) {
  if (idleness < 0.0) throw NegativeIdleness("idleness must be >= 0");
  return 1.0 - std::exp(-idleness / c_norm);
}

namespace {

double base_from_values(const std::vector<double>& values, const GridMap& map, double c_norm) {
  double sum = 0.0;
  double max_norm = 0.0;
  int count = 0;
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      if (map.cell({r, c}) != CellKind::Vertex) continue;
      double f = normalize_idleness(values[r * map.cols() + c], c_norm);
      sum += f;
      max_norm = std::max(max_norm, f);
      ++count;
    }
  }
  if (count == 0) throw NoVertices("map has no vertex cells");
  return (2.0 - sum / count - max_norm) / 2.0;
}

}  // namespace

double patrol_reward_base(const IdlenessState& idleness, const GridMap& map, double c_norm) {
  return base_from_values(idleness.values, map, c_norm);
}

double difference_reward(const IdlenessState& after, const GridMap& map, Loc prev, Loc next,
                         double pre_reset_next, bool next_co_occupied, double c_norm) {
  if (!map.traversable(prev) || !map.traversable(next))
    throw LocIsObstacle("difference reward over obstacle cells");
  if (prev == next) return 0.0;
  double actual = patrol_reward_base(after, map, c_norm);
  std::vector<double> counterfactual = after.values;
  if (map.cell(prev) == CellKind::Vertex)
    counterfactual[prev.row * map.cols() + prev.col] = 0.0;
  if (!next_co_occupied && map.cell(next) == CellKind::Vertex)
    counterfactual[next.row * map.cols() + next.col] = pre_reset_next;
  return actual - base_from_values(counterfactual, map, c_norm);
}

double patrol_reward(double base, double diff, double c_rp, double c_rd) {
  return base * c_rp + diff * c_rd;
}

double battery_failure_penalty(bool ran_out, double c_b) { return ran_out ? -c_b : 0.0; }

double battery_recharge_term(double battery, double b_l) {
  if (battery < 0.0 || battery > 1.0) throw BatteryOutOfRange("battery outside [0, 1]");
  if (battery <= b_l) return 1.0 - battery / b_l;
  return (battery - b_l) / (1.0 - b_l);
}

double battery_patrol_term(double battery, double b_l) {
  if (battery < 0.0 || battery > 1.0) throw BatteryOutOfRange("battery outside [0, 1]");
  return battery <= b_l ? b_l - battery : 0.0;
}

double battery_threshold_penalty(double battery, double b_l, bool recharged,
                                 double c_recharge, double c_patrol) {
  double recharge = recharged ? battery_recharge_term(battery, b_l) : 0.0;
  double patrol = battery_patrol_term(battery, b_l);
  return kThresholdPenaltySign * (c_recharge * recharge + c_patrol * patrol);
}

RewardBreakdown total_reward(const IdlenessState& after, const GridMap& map,
                             const AgentStepContext& ctx, const RewardParams& params) {
  RewardBreakdown out;
  double base = patrol_reward_base(after, map, params.c_norm);
  double diff = difference_reward(after, map, ctx.prev, ctx.next, ctx.pre_reset_next,
                                  ctx.next_co_occupied, params.c_norm);
  out.r_p = patrol_reward(base, diff, params.c_rp, params.c_rd);
  out.r_b1 = battery_failure_penalty(ctx.ran_out, params.c_b);
  out.r_b2 = battery_threshold_penalty(ctx.battery, params.b_l, ctx.recharged,
                                       params.c_recharge, params.c_patrol);
  out.total = out.r_p + out.r_b1 + out.r_b2;
  return out;
}

}  // namespace patrol::rewards
