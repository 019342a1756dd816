#pragma once

#include <cstdint>
#include <string_view>

namespace roadbird {

/// One follower/leader pair at the start of a timestep. Positions are
/// front-bumper offsets along the link; the leader's rear sits at
/// leader_position - leader_length.
struct FollowState {
  double position = 0.0;         // x_n, m
  double speed = 0.0;            // v_n, m/s
  double accel = 1.7;            // a_n, model acceleration, m/s^2
  double desired_speed = 13.89;  // v_d, m/s
  double leader_position = 1e9;  // x_{n-1}, m
  double leader_speed = 0.0;     // v_{n-1}, m/s
  double leader_length = 0.0;    // s_{n-1}, effective length, m
  double timestep = 1.0;         // tau, s
};

struct GippsParams {
  double max_accel = 1.7;                 // a_n > 0
  double desired_braking = -3.4;          // b_n < 0
  double expected_leader_braking = -3.0;  // b-hat < 0
  double reaction_time = 1.0;             // tau, s
};

enum class CarFollowModel { newtonian, gipps, hybrid };

CarFollowModel car_follow_model_from(std::string_view name);
std::string_view to_string(CarFollowModel m);

/// Counters for numeric edge events raised inside the speed laws.
struct CarFollowEvents {
  std::int64_t negative_discriminant = 0;
};

/// Clear distance between the leader's rear and the subject's front.
/// Negative values signal overlap (possible in the collision-permitting
/// Gipps-only mode).
double safe_gap(const FollowState& s);

/// Accelerate by a_n*tau capped at the desired speed; when that motion would
/// not fit in the gap, brake hard to gap/tau. Result lies in [0, v_d].
double newtonian_speed(const FollowState& s);

/// Gipps' speed law: the minimum of the acceleration-bounded and
/// safety-braking terms, clamped to >= 0. No collision prevention is applied
/// here; a negative discriminant in the braking term yields an emergency 0
/// and bumps events->negative_discriminant.
double gipps_speed(const FollowState& s, const GippsParams& p,
                   CarFollowEvents* events = nullptr);

/// Gipps' speed with a one-step collision override: when the Gipps speed
/// would carry the subject past the leader's rear within this step, the
/// hard-braking value gap/tau is used instead. Result lies in [0, v_d] and
/// never produces overlap from a non-overlapping state.
double hybrid_speed(const FollowState& s, const GippsParams& p,
                    CarFollowEvents* events = nullptr);

struct Advance {
  double position;
  double accel;
};

/// Kinematic step: the new position covers new_speed * tau. Acceleration is
/// recorded as the model constant while speeding up and as the realized
/// speed difference otherwise.
Advance advance(const FollowState& s, double new_speed);

}  // namespace roadbird
