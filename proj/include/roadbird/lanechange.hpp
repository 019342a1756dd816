#pragma once

#include <cstdint>
#include <string_view>

#include "roadbird/carfollow.hpp"
#include "roadbird/rng.hpp"

namespace roadbird {

enum class LaneChangeModel { straightforward, gipps, ghr };

LaneChangeModel lane_change_model_from(std::string_view name);
std::string_view to_string(LaneChangeModel m);

enum class LaneDecision { stay, shift };

struct GapAcceptanceParams {
  double lambda = 0.5;        // 1/s, > 0
  double critical_gap = 1.0;  // T, s, >= 0
};

struct GhrParams {
  double sensitivity = 15.0;     // c
  double speed_exponent = 1.0;   // m, in [-2, 2]
  double headway_exponent = 2.0; // l, in [-1, 4]
  int lag_steps = 1;             // T expressed in timesteps
};

struct LaneChangeEvents {
  std::int64_t zero_speed_time_gap = 0;  // t = g/v singular at v = 0
  std::int64_t singular_ghr = 0;         // lagged spacing <= 0
};

struct NeighborInfo {
  bool present = false;
  double speed = 0.0;  // m/s
  double gap = 1e9;    // bumper-to-bumper clearance, m
};

/// Everything one candidate-side evaluation needs, assembled by the engine.
/// Gaps are bumper-to-bumper; a candidate whose occupancy would overlap the
/// subject is rejected upstream via target_free.
struct LaneContext {
  double speed = 0.0;             // v_n
  double achievable_speed = 0.0;  // this step's car-following speed, current lane
  double proximity_threshold = 0.0;  // m, slower-leader trigger distance
  NeighborInfo leader;               // current-lane effective leader

  bool target_free = false;  // target strips free over the subject's extent

  // Hypothetical post-change car-following states (Eq. 5 inputs).
  FollowState subject_after;   // subject vs target-side leader
  bool has_follower = false;
  FollowState follower_after;  // target follower vs subject as its new leader
  GippsParams follower_params;

  double lead_gap = 1e18;  // m; huge when no target-side leader
  double lag_gap = 1e18;   // m; huge when no target-side follower

  // Lagged stimulus for the GHR trigger.
  bool history_warm = false;
  double lagged_dv = 0.0;  // leader speed - subject speed, T steps ago
  double lagged_dx = 0.0;  // spacing, T steps ago
};

/// A vehicle wants to leave its lane when it cannot move this step or a
/// slower leader sits within the proximity threshold.
bool desire_to_change(const LaneContext& ctx);

/// Naive rule: shift whenever the target strips can accommodate the vehicle.
LaneDecision straightforward_change(const LaneContext& ctx);

/// Speed drop across one step, the braking measure fed to the feasibility
/// gate (Eq.-5 speeds in, per-step drop out).
double implied_braking(double v_prev, double v_now);

/// Actual time gap t = g / v. Zero speed with positive clearance reads as an
/// unbounded gap; non-positive clearance reads as no gap.
double time_gap(double gap, double speed, LaneChangeEvents* events = nullptr);

/// Gap acceptance probability: 1 - exp(-lambda (t - T)) for t > T, else 0.
double gap_probability(double t_actual, const GapAcceptanceParams& p);

/// Probability that both lead and lag gaps are accepted.
double joint_gap_probability(double p_lead, double p_lag);

/// Gap-acceptance lane change: feasible when neither the subject nor the
/// target follower would have to brake harder than its desired braking; a
/// feasible change is taken with the joint gap probability.
LaneDecision gipps_change(const LaneContext& ctx, const GippsParams& subject,
                          const GapAcceptanceParams& gap, RandomStream& rng,
                          LaneChangeEvents* events = nullptr);

/// Stimulus-response trigger score c * v^m * dv / dx^l evaluated on lagged
/// values. Only its sign drives the lane-change desire.
double ghr_acceleration(double speed, double dv_lagged, double dx_lagged,
                        const GhrParams& p);

/// GHR-triggered change: desire when the lagged stimulus is negative, then
/// feasibility and gap acceptance exactly as gipps_change.
LaneDecision ghr_change(const LaneContext& ctx, const GhrParams& ghr,
                        const GippsParams& subject,
                        const GapAcceptanceParams& gap, RandomStream& rng,
                        LaneChangeEvents* events = nullptr);

}  // namespace roadbird
