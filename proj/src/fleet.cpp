#include "roadbird/fleet.hpp"

#include <cmath>

#include <fmt/format.h>

namespace roadbird {

std::string_view to_string(SpeedCategory c) {
  switch (c) {
    case SpeedCategory::slow: return "slow";
    case SpeedCategory::medium: return "medium";
    case SpeedCategory::fast: return "fast";
  }
  return "?";
}

void VehicleClass::validate() const {
  if (!(length > 0.0) || !(width > 0.0))
    throw FleetError(fmt::format("class {}: non-positive dimensions", name));
  if (!(max_accel > 0.0))
    throw FleetError(fmt::format("class {}: max_accel must be > 0", name));
  if (!(desired_braking < 0.0) || !(expected_leader_braking < 0.0))
    throw FleetError(fmt::format("class {}: braking rates must be < 0", name));
  switch (category) {
    case SpeedCategory::slow:
      if (max_speed_kmh > 15.0 || !(max_speed_kmh > 0.0))
        throw FleetError(
            fmt::format("class {}: slow vehicles are capped at 15 km/h", name));
      break;
    case SpeedCategory::medium:
      if (max_speed_kmh < 30.0 || max_speed_kmh > 50.0)
        throw FleetError(fmt::format(
            "class {}: medium vehicles must be within 30-50 km/h", name));
      break;
    case SpeedCategory::fast:
      if (max_speed_kmh < 80.0 || max_speed_kmh > 120.0)
        throw FleetError(fmt::format(
            "class {}: fast vehicles must be within 80-120 km/h", name));
      break;
  }
}

const std::vector<ClassShare>& default_class_shares() {
  static const std::vector<ClassShare> table = [] {
    using C = SpeedCategory;
    std::vector<ClassShare> t = {
        // slow human-powered
        {{"bicycle", C::slow, 1.9, 0.6, 15.0, 0.8, -1.5, -1.5}, 9.0},
        {{"rickshaw", C::slow, 2.5, 1.2, 15.0, 0.8, -1.5, -1.5}, 89.0},
        {{"van_cart", C::slow, 2.8, 1.4, 10.0, 0.6, -1.2, -1.2}, 2.0},
        // medium motorized
        {{"cng", C::medium, 2.6, 1.3, 50.0, 1.8, -3.0, -2.8}, 83.0},
        {{"bus_small", C::medium, 8.0, 2.4, 40.0, 1.2, -2.5, -2.5}, 7.5},
        {{"bus_large", C::medium, 10.0, 2.5, 40.0, 1.0, -2.5, -2.5}, 7.5},
        {{"truck_small", C::medium, 6.0, 2.2, 45.0, 1.2, -2.5, -2.5}, 1.0},
        {{"truck_large", C::medium, 8.5, 2.4, 40.0, 1.0, -2.5, -2.5}, 1.0},
        // fast motorized
        {{"motorbike", C::fast, 1.9, 0.7, 80.0, 2.5, -4.0, -3.5}, 88.0},
        {{"car_small", C::fast, 3.8, 1.6, 100.0, 2.0, -3.5, -3.2}, 4.0},
        {{"car_medium", C::fast, 4.5, 1.8, 100.0, 2.0, -3.5, -3.2}, 4.0},
        {{"car_large", C::fast, 5.0, 1.9, 120.0, 2.2, -3.5, -3.2}, 4.0},
    };
    for (const ClassShare& s : t) s.vehicle.validate();
    return t;
  }();
  return table;
}

FleetMix::FleetMix(double slow_pct, double medium_pct, double fast_pct)
    : FleetMix(slow_pct, medium_pct, fast_pct, default_class_shares()) {}

FleetMix::FleetMix(double slow_pct, double medium_pct, double fast_pct,
                   std::vector<ClassShare> shares)
    : category_pct_{slow_pct, medium_pct, fast_pct}, shares_(std::move(shares)) {
  for (double pct : category_pct_)
    if (pct < 0.0 || pct > 100.0)
      throw FleetError("category shares must lie in [0, 100]");
  if (std::abs(slow_pct + medium_pct + fast_pct - 100.0) > 1e-6)
    throw FleetError(
        fmt::format("category shares must sum to 100, got {}",
                    slow_pct + medium_pct + fast_pct));

  double modal_sum[3] = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < shares_.size(); ++i) {
    shares_[i].vehicle.validate();
    if (shares_[i].percent < 0.0)
      throw FleetError("modal shares must be non-negative");
    const auto cat = static_cast<std::size_t>(shares_[i].vehicle.category);
    modal_sum[cat] += shares_[i].percent;
    by_category_[cat].push_back(i);
  }
  for (std::size_t cat = 0; cat < 3; ++cat) {
    if (category_pct_[cat] > 0.0 && std::abs(modal_sum[cat] - 100.0) > 1e-6)
      throw FleetError(fmt::format(
          "modal shares for the {} category must sum to 100, got {}",
          to_string(static_cast<SpeedCategory>(cat)), modal_sum[cat]));
  }
}

const VehicleClass& FleetMix::sample(RandomStream& rng) const {
  const double r_cat = rng.uniform01() * 100.0;  // (0, 100]
  double cum = 0.0;
  std::size_t cat = 2;
  for (std::size_t c = 0; c < 3; ++c) {
    cum += category_pct_[c];
    if (r_cat <= cum) {
      cat = c;
      break;
    }
  }
  const auto& members = by_category_[cat];
  const double r_cls = rng.uniform01() * 100.0;
  cum = 0.0;
  for (std::size_t idx : members) {
    cum += shares_[idx].percent;
    if (r_cls <= cum) return shares_[idx].vehicle;
  }
  return shares_[members.back()].vehicle;
}

double FleetMix::class_probability(std::string_view name) const {
  for (const ClassShare& s : shares_) {
    if (s.vehicle.name == name) {
      const auto cat = static_cast<std::size_t>(s.vehicle.category);
      return (category_pct_[cat] / 100.0) * (s.percent / 100.0);
    }
  }
  throw FleetError(fmt::format("unknown vehicle class '{}'", name));
}

std::size_t FleetMix::index_of(const VehicleClass& cls) const {
  for (std::size_t i = 0; i < shares_.size(); ++i)
    if (&shares_[i].vehicle == &cls) return i;
  throw FleetError("class does not belong to this mix");
}

double sample_headway(double mean_headway, double r01) {
  if (!(mean_headway > 0.0))
    throw FleetError("mean headway must be positive");
  if (!(r01 > 0.0) || r01 > 1.0)
    throw FleetError("headway variate requires r in (0, 1]");
  return mean_headway * (-std::log(r01));
}

std::vector<double> generate_arrivals(const DemandProfile& profile,
                                      double horizon, RandomStream& rng) {
  std::vector<double> arrivals;
  if (!(horizon > 0.0)) return arrivals;
  const double mu = profile.mean_headway();
  double t = sample_headway(mu, rng.uniform01());
  while (t < horizon) {
    arrivals.push_back(t);
    t += sample_headway(mu, rng.uniform01());
  }
  return arrivals;
}

int occupied_strips(double vehicle_width, double strip_width) {
  if (!(vehicle_width > 0.0) || !(strip_width > 0.0))
    throw FleetError("occupied_strips requires positive widths");
  // Backward nudge keeps exact multiples (2.4/1.2) from ceiling one high.
  const int n = static_cast<int>(std::ceil(vehicle_width / strip_width - 1e-9));
  return n < 1 ? 1 : n;
}

}  // namespace roadbird
