#include "roadbird/carfollow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace roadbird {

CarFollowModel car_follow_model_from(std::string_view name) {
  if (name == "newtonian") return CarFollowModel::newtonian;
  if (name == "gipps") return CarFollowModel::gipps;
  if (name == "hybrid") return CarFollowModel::hybrid;
  throw std::invalid_argument(
      fmt::format("unknown car-following model '{}'", name));
}

std::string_view to_string(CarFollowModel m) {
  switch (m) {
    case CarFollowModel::newtonian: return "newtonian";
    case CarFollowModel::gipps: return "gipps";
    case CarFollowModel::hybrid: return "hybrid";
  }
  return "?";
}

double safe_gap(const FollowState& s) {
  return s.leader_position - s.leader_length - s.position;
}

double newtonian_speed(const FollowState& s) {
  const double gap = safe_gap(s);
  const double accelerated =
      std::min(s.speed + s.accel * s.timestep, s.desired_speed);
  if (accelerated * s.timestep <= gap) return std::max(0.0, accelerated);
  return std::clamp(gap / s.timestep, 0.0, s.desired_speed);
}

double gipps_speed(const FollowState& s, const GippsParams& p,
                   CarFollowEvents* events) {
  const double tau = p.reaction_time;
  const double v = s.speed;
  const double ratio = v / s.desired_speed;
  const double accel_term =
      v + 2.5 * p.max_accel * tau * (1.0 - ratio) * std::sqrt(0.025 + ratio);

  const double b = p.desired_braking;
  const double gap = safe_gap(s);
  const double discriminant =
      b * b * tau * tau -
      b * (2.0 * gap - v * tau -
           s.leader_speed * s.leader_speed / p.expected_leader_braking);
  if (discriminant < 0.0) {
    // Possible after an overlap; read as a panic stop.
    if (events) ++events->negative_discriminant;
    return 0.0;
  }
  const double brake_term = b * tau + std::sqrt(discriminant);
  return std::max(0.0, std::min(accel_term, brake_term));
}

double hybrid_speed(const FollowState& s, const GippsParams& p,
                    CarFollowEvents* events) {
  double v = gipps_speed(s, p, events);
  const double gap = safe_gap(s);
  if (v * s.timestep > gap) v = gap / s.timestep;  // about to collide
  return std::clamp(v, 0.0, s.desired_speed);
}

Advance advance(const FollowState& s, double new_speed) {
  Advance a;
  a.position = s.position + new_speed * s.timestep;
  a.accel = new_speed > s.speed ? s.accel : (new_speed - s.speed) / s.timestep;
  return a;
}

}  // namespace roadbird
