#include "roadbird/lanechange.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace roadbird {

LaneChangeModel lane_change_model_from(std::string_view name) {
  if (name == "straightforward") return LaneChangeModel::straightforward;
  if (name == "gipps") return LaneChangeModel::gipps;
  if (name == "ghr") return LaneChangeModel::ghr;
  throw std::invalid_argument(
      fmt::format("unknown lane-changing model '{}'", name));
}

std::string_view to_string(LaneChangeModel m) {
  switch (m) {
    case LaneChangeModel::straightforward: return "straightforward";
    case LaneChangeModel::gipps: return "gipps";
    case LaneChangeModel::ghr: return "ghr";
  }
  return "?";
}

bool desire_to_change(const LaneContext& ctx) {
  if (ctx.achievable_speed <= 1e-12) return true;
  return ctx.leader.present && ctx.leader.speed < ctx.speed &&
         ctx.leader.gap < ctx.proximity_threshold;
}

LaneDecision straightforward_change(const LaneContext& ctx) {
  return ctx.target_free ? LaneDecision::shift : LaneDecision::stay;
}

double implied_braking(double v_prev, double v_now) { return v_prev - v_now; }

double time_gap(double gap, double speed, LaneChangeEvents* events) {
  if (gap <= 0.0) return 0.0;
  if (speed <= 0.0) {
    if (events) ++events->zero_speed_time_gap;
    return std::numeric_limits<double>::infinity();
  }
  return gap / speed;
}

double gap_probability(double t_actual, const GapAcceptanceParams& p) {
  if (!(t_actual > p.critical_gap)) return 0.0;
  return 1.0 - std::exp(-p.lambda * (t_actual - p.critical_gap));
}

double joint_gap_probability(double p_lead, double p_lag) {
  return p_lead * p_lag;
}

namespace {

// Feasibility gate plus Bernoulli gap acceptance, shared by the Gipps and
// GHR models.
LaneDecision feasibility_and_gap(const LaneContext& ctx,
                                 const GippsParams& subject,
                                 const GapAcceptanceParams& gap,
                                 RandomStream& rng, LaneChangeEvents* events) {
  if (!ctx.target_free) return LaneDecision::stay;

  const double subject_after = gipps_speed(ctx.subject_after, subject);
  const double subject_drop = implied_braking(ctx.speed, subject_after);
  if (subject_drop >= -subject.desired_braking * subject.reaction_time)
    return LaneDecision::stay;

  if (ctx.has_follower) {
    const double follower_after =
        gipps_speed(ctx.follower_after, ctx.follower_params);
    const double follower_drop =
        implied_braking(ctx.follower_after.speed, follower_after);
    if (follower_drop >= -ctx.follower_params.desired_braking *
                             ctx.follower_params.reaction_time)
      return LaneDecision::stay;
  }

  const double p_lead = gap_probability(time_gap(ctx.lead_gap, ctx.speed, events), gap);
  const double p_lag = gap_probability(time_gap(ctx.lag_gap, ctx.speed, events), gap);
  const double p = joint_gap_probability(p_lead, p_lag);
  return rng.bernoulli(p) ? LaneDecision::shift : LaneDecision::stay;
}

}  // namespace

LaneDecision gipps_change(const LaneContext& ctx, const GippsParams& subject,
                          const GapAcceptanceParams& gap, RandomStream& rng,
                          LaneChangeEvents* events) {
  return feasibility_and_gap(ctx, subject, gap, rng, events);
}

double ghr_acceleration(double speed, double dv_lagged, double dx_lagged,
                        const GhrParams& p) {
  return p.sensitivity * std::pow(speed, p.speed_exponent) * dv_lagged /
         std::pow(dx_lagged, p.headway_exponent);
}

LaneDecision ghr_change(const LaneContext& ctx, const GhrParams& ghr,
                        const GippsParams& subject,
                        const GapAcceptanceParams& gap, RandomStream& rng,
                        LaneChangeEvents* events) {
  if (!ctx.history_warm) return LaneDecision::stay;
  if (!(ctx.lagged_dx > 0.0)) {
    if (events) ++events->singular_ghr;
    return LaneDecision::stay;
  }
  const double a =
      ghr_acceleration(ctx.speed, ctx.lagged_dv, ctx.lagged_dx, ghr);
  if (!(a < 0.0)) return LaneDecision::stay;
  return feasibility_and_gap(ctx, subject, gap, rng, events);
}

}  // namespace roadbird
