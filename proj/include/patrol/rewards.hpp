#pragma once

#include "patrol/environment.hpp"

namespace patrol::rewards {

struct RewardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NegativeIdleness : RewardError {
  using RewardError::RewardError;
};
struct NoVertices : RewardError {
  using RewardError::RewardError;
};
struct BatteryOutOfRange : RewardError {
  using RewardError::RewardError;
};

struct RewardParams {
  double c_norm = 150.0;
  double c_b = 50.0;
  double c_rp = 0.5;
  double c_rd = 50.0;
  double c_recharge = 1.0;
  double c_patrol = 25.0;
  double b_l = 0.1;
};

// The threshold terms are positive-valued penalty magnitudes; they enter the
// total with this sign. Flip the constant to read them as a bonus instead.
inline constexpr double kThresholdPenaltySign = -1.0;

struct RewardBreakdown {
  double r_p = 0.0;
  double r_b1 = 0.0;
  double r_b2 = 0.0;
  double total = 0.0;
};

// f(i) = 1 - exp(-i / c_norm), strictly increasing, range [0, 1)
double normalize_idleness(double idleness, double c_norm);

// (2 - mean - max) / 2 over normalized vertex idleness; stations and
// obstacles are excluded from both statistics
double patrol_reward_base(const IdlenessState& idleness, const GridMap& map, double c_norm);

// Credit term: actual patrol base minus the counterfactual where agent k did
// not move. The counterfactual keeps k's previous cell freshly visited and
// restores k's landing cell to `pre_reset_next` unless another agent also
// ended there.
double difference_reward(const IdlenessState& after, const GridMap& map, Loc prev, Loc next,
                         double pre_reset_next, bool next_co_occupied, double c_norm);

double patrol_reward(double base, double diff, double c_rp, double c_rd);

double battery_failure_penalty(bool ran_out, double c_b);

// piecewise recharge miss: 1 - b/b_l below the threshold, (b - b_l)/(1 - b_l)
// above; 0 exactly at b_l
double battery_recharge_term(double battery, double b_l);

// b_l - b while patrolling below the threshold, else 0
double battery_patrol_term(double battery, double b_l);

// signed contribution of both threshold terms for one step
double battery_threshold_penalty(double battery, double b_l, bool recharged,
                                 double c_recharge, double c_patrol);

struct AgentStepContext {
  Loc prev;
  Loc next;
  double pre_reset_next = 0.0;
  bool next_co_occupied = false;
  bool ran_out = false;
  bool recharged = false;   // intentional station landing this step
  double battery = 1.0;     // after this step's drain
};

RewardBreakdown total_reward(const IdlenessState& after, const GridMap& map,
                             const AgentStepContext& ctx, const RewardParams& params);

}  // namespace patrol::rewards
