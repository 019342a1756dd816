#include "roadbird/params.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

namespace roadbird {

EngineConfig SimParameters::engine_config() const {
  EngineConfig cfg;
  cfg.timestep = timestep;
  cfg.cf_model = cf_model;
  cfg.lc_model = lc_model;
  cfg.gap = {lambda, critical_gap};
  cfg.ghr = {ghr_c, ghr_m, ghr_l, ghr_lag_steps};
  cfg.entry_speed_factor = entry_speed_factor;
  cfg.proximity_factor = proximity_factor;
  cfg.length_margin = length_margin;
  cfg.lane_change_margin = lane_change_margin;
  cfg.pedestrian_mode = pedestrian_mode;
  cfg.pedestrian_rate_hpl = pedestrian_rate;
  cfg.pedestrian_speed = pedestrian_speed;
  cfg.wait_speed_threshold = wait_threshold;
  cfg.audit_each_step = collision_audit;
  cfg.include_unfinished_vehicles = include_unfinished;
  return cfg;
}

FleetMix SimParameters::fleet_mix() const {
  return FleetMix(slow_pct, medium_pct, fast_pct);
}

namespace {

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError(fmt::format("{}: expected on/off, got '{}'", key, value));
}

double parse_num(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: expected number, got '{}'", key, value));
  }
}

int parse_int_value(const std::string& key, const std::string& value) {
  const double v = parse_num(key, value);
  if (v != std::floor(v))
    throw ConfigError(fmt::format("{}: expected integer, got '{}'", key, value));
  return static_cast<int>(v);
}

}  // namespace

SimParameters parse_parameters(const std::string& text,
                               std::vector<std::string>* warnings) {
  SimParameters p;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    const std::size_t eq = line.find('=', start);
    if (eq == std::string::npos)
      throw ConfigError(
          fmt::format("line {}: expected key=value, got '{}'", line_no, line));
    std::string key = line.substr(start, eq - start);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);

    if (key == "DemandType") {
      p.demand_type = parse_int_value(key, value);
      if (p.demand_type < 0 || p.demand_type > 2)
        throw ConfigError("DemandType: expected 0, 1 or 2");
    } else if (key == "SlowVehicle") {
      p.slow_pct = parse_num(key, value);
    } else if (key == "MediumVehicle") {
      p.medium_pct = parse_num(key, value);
    } else if (key == "FastVehicle") {
      p.fast_pct = parse_num(key, value);
    } else if (key == "StripWidth") {
      p.strip_width = parse_num(key, value);
      if (!(p.strip_width > 0.0))
        throw ConfigError("StripWidth: must be positive");
    } else if (key == "PedestrianMode") {
      p.pedestrian_mode = parse_bool(key, value);
    } else if (key == "CarFollowingModel") {
      try {
        p.cf_model = car_follow_model_from(value);
      } catch (const std::exception& e) {
        throw ConfigError(fmt::format("CarFollowingModel: {}", e.what()));
      }
    } else if (key == "LaneChangingModel") {
      try {
        p.lc_model = lane_change_model_from(value);
      } catch (const std::exception& e) {
        throw ConfigError(fmt::format("LaneChangingModel: {}", e.what()));
      }
    } else if (key == "Lambda") {
      p.lambda = parse_num(key, value);
      if (!(p.lambda > 0.0)) throw ConfigError("Lambda: must be positive");
    } else if (key == "CriticalGapT") {
      p.critical_gap = parse_num(key, value);
      if (p.critical_gap < 0.0)
        throw ConfigError("CriticalGapT: must be non-negative");
    } else if (key == "GhrC") {
      p.ghr_c = parse_num(key, value);
    } else if (key == "GhrM") {
      p.ghr_m = parse_num(key, value);
      if (p.ghr_m < -2.0 || p.ghr_m > 2.0)
        throw ConfigError("GhrM: expected a value in [-2, 2]");
    } else if (key == "GhrL") {
      p.ghr_l = parse_num(key, value);
      if (p.ghr_l < -1.0 || p.ghr_l > 4.0)
        throw ConfigError("GhrL: expected a value in [-1, 4]");
    } else if (key == "GhrLagSteps") {
      p.ghr_lag_steps = parse_int_value(key, value);
      if (p.ghr_lag_steps < 1)
        throw ConfigError("GhrLagSteps: must be at least 1");
    } else if (key == "Timestep") {
      p.timestep = parse_num(key, value);
      if (!(p.timestep > 0.0)) throw ConfigError("Timestep: must be positive");
    } else if (key == "EntrySpeedFactor") {
      p.entry_speed_factor = parse_num(key, value);
      if (p.entry_speed_factor < 0.0 || p.entry_speed_factor > 1.0)
        throw ConfigError("EntrySpeedFactor: expected a value in [0, 1]");
    } else if (key == "ProximityFactor") {
      p.proximity_factor = parse_num(key, value);
    } else if (key == "LengthMargin") {
      p.length_margin = parse_num(key, value);
      if (p.length_margin < 0.0)
        throw ConfigError("LengthMargin: must be non-negative");
    } else if (key == "LaneChangeMargin") {
      p.lane_change_margin = parse_num(key, value);
      if (p.lane_change_margin < 0.0)
        throw ConfigError("LaneChangeMargin: must be non-negative");
    } else if (key == "PedestrianRate") {
      p.pedestrian_rate = parse_num(key, value);
      if (p.pedestrian_rate < 0.0)
        throw ConfigError("PedestrianRate: must be non-negative");
    } else if (key == "PedestrianSpeed") {
      p.pedestrian_speed = parse_num(key, value);
      if (!(p.pedestrian_speed > 0.0))
        throw ConfigError("PedestrianSpeed: must be positive");
    } else if (key == "WaitThreshold") {
      p.wait_threshold = parse_num(key, value);
      if (p.wait_threshold < 0.0)
        throw ConfigError("WaitThreshold: must be non-negative");
    } else if (key == "RateScope") {
      if (value == "per_node") p.rate_scope = RateScope::per_node;
      else if (value == "total") p.rate_scope = RateScope::total;
      else throw ConfigError("RateScope: expected per_node or total");
    } else if (key == "GenerationRate") {
      if (value.empty()) {
        p.generation_rate.reset();
      } else {
        p.generation_rate = parse_num(key, value);
        if (!(*p.generation_rate > 0.0))
          throw ConfigError("GenerationRate: must be positive");
      }
    } else if (key == "CollisionAudit") {
      p.collision_audit = parse_bool(key, value);
    } else if (key == "IncludeUnfinished") {
      p.include_unfinished = parse_bool(key, value);
    } else {
      if (warnings)
        warnings->push_back(
            fmt::format("line {}: unknown key '{}' ignored", line_no, key));
    }
  }

  const double sum = p.slow_pct + p.medium_pct + p.fast_pct;
  if (std::abs(sum - 100.0) > 1e-6)
    throw ConfigError(fmt::format(
        "SlowVehicle + MediumVehicle + FastVehicle must sum to 100, got {:g}",
        sum));
  return p;
}

std::string serialize_parameters(const SimParameters& p) {
  std::string out;
  out += fmt::format("DemandType={}\n", p.demand_type);
  out += fmt::format("SlowVehicle={:g}\n", p.slow_pct);
  out += fmt::format("MediumVehicle={:g}\n", p.medium_pct);
  out += fmt::format("FastVehicle={:g}\n", p.fast_pct);
  out += fmt::format("StripWidth={:g}\n", p.strip_width);
  out += fmt::format("PedestrianMode={}\n", p.pedestrian_mode ? "on" : "off");
  out += fmt::format("CarFollowingModel={}\n", to_string(p.cf_model));
  out += fmt::format("LaneChangingModel={}\n", to_string(p.lc_model));
  out += fmt::format("Lambda={:g}\n", p.lambda);
  out += fmt::format("CriticalGapT={:g}\n", p.critical_gap);
  out += fmt::format("GhrC={:g}\n", p.ghr_c);
  out += fmt::format("GhrM={:g}\n", p.ghr_m);
  out += fmt::format("GhrL={:g}\n", p.ghr_l);
  out += fmt::format("GhrLagSteps={}\n", p.ghr_lag_steps);
  out += fmt::format("Timestep={:g}\n", p.timestep);
  out += fmt::format("EntrySpeedFactor={:g}\n", p.entry_speed_factor);
  out += fmt::format("ProximityFactor={:g}\n", p.proximity_factor);
  out += fmt::format("LengthMargin={:g}\n", p.length_margin);
  out += fmt::format("LaneChangeMargin={:g}\n", p.lane_change_margin);
  out += fmt::format("PedestrianRate={:g}\n", p.pedestrian_rate);
  out += fmt::format("PedestrianSpeed={:g}\n", p.pedestrian_speed);
  out += fmt::format("WaitThreshold={:g}\n", p.wait_threshold);
  out += fmt::format("RateScope={}\n", p.rate_scope == RateScope::per_node
                                           ? "per_node"
                                           : "total");
  if (p.generation_rate)
    out += fmt::format("GenerationRate={:g}\n", *p.generation_rate);
  out += fmt::format("CollisionAudit={}\n", p.collision_audit ? "on" : "off");
  out += fmt::format("IncludeUnfinished={}\n",
                     p.include_unfinished ? "on" : "off");
  return out;
}

const ExperimentProfile& profile_by_name(const std::string& name) {
  static const std::vector<ExperimentProfile> profiles = {
      {"dhaka", {100.0, 400.0, 800.0}, {55.0, 40.0, 5.0}},
      {"miami", {500.0, 1000.0, 2000.0}, {9.0, 75.0, 16.0}},
      {"riyadh", {500.0, 1000.0, 2000.0}, {9.0, 75.0, 16.0}},
  };
  for (const ExperimentProfile& p : profiles)
    if (p.name == name) return p;
  throw ConfigError(fmt::format(
      "unknown profile '{}' (expected dhaka, miami or riyadh)", name));
}

DemandProfile RunConfig::demand() const {
  DemandProfile d;
  d.level = static_cast<DemandLevel>(params.demand_type);
  d.rate_vph = params.generation_rate
                   ? *params.generation_rate
                   : profile_by_name(profile).rates_vph[params.demand_type];
  return d;
}

}  // namespace roadbird
