#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roadbird/engine.hpp"

namespace roadbird {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Typed view of parameter.txt. Every key has a documented default; unknown
/// keys warn, malformed values fail.
struct SimParameters {
  int demand_type = 1;  // 0 low, 1 medium, 2 high
  double slow_pct = 55.0;
  double medium_pct = 40.0;
  double fast_pct = 5.0;
  double strip_width = 0.5;  // m
  bool pedestrian_mode = false;
  CarFollowModel cf_model = CarFollowModel::hybrid;
  LaneChangeModel lc_model = LaneChangeModel::gipps;
  double lambda = 0.5;
  double critical_gap = 1.0;
  double ghr_c = 15.0;
  double ghr_m = 1.0;
  double ghr_l = 2.0;
  int ghr_lag_steps = 1;
  double timestep = 1.0;
  double entry_speed_factor = 0.5;
  double proximity_factor = 2.0;
  double length_margin = 0.0;
  double lane_change_margin = 0.0;
  double pedestrian_rate = 50.0;   // crossings/hour/link
  double pedestrian_speed = 1.4;   // m/s
  double wait_threshold = 0.1;     // m/s
  RateScope rate_scope = RateScope::per_node;
  std::optional<double> generation_rate;  // veh/h override of the profile table
  bool collision_audit = true;
  bool include_unfinished = true;

  EngineConfig engine_config() const;
  FleetMix fleet_mix() const;
};

/// Parse key=value lines with '#' comments. Unknown keys are reported into
/// warnings and skipped; invalid values and share sums other than 100 throw
/// ConfigError naming the key.
SimParameters parse_parameters(const std::string& text,
                               std::vector<std::string>* warnings = nullptr);

/// Canonical text form; parse(serialize(p)) == p.
std::string serialize_parameters(const SimParameters& p);

/// City experiment profile: demand rates per DemandType level and the
/// heterogeneous category mix.
struct ExperimentProfile {
  std::string name;
  double rates_vph[3];    // low, medium, high
  double het_mix[3];      // slow, medium, fast percentages
};

const ExperimentProfile& profile_by_name(const std::string& name);

/// Everything one simulation run needs.
struct RunConfig {
  std::filesystem::path topology_dir;
  SimParameters params;
  std::string profile = "dhaka";
  double duration = 1800.0;  // s
  std::uint64_t seed = 1;

  /// Demand at each generating node, from the explicit override or the
  /// profile rate table indexed by DemandType.
  DemandProfile demand() const;
};

}  // namespace roadbird
