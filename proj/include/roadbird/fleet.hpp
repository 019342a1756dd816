#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roadbird/rng.hpp"
#include "roadbird/units.hpp"

namespace roadbird {

enum class SpeedCategory { slow, medium, fast };

std::string_view to_string(SpeedCategory c);

/// Physical and behavioral envelope of one vehicle type.
///
/// The dimensional and braking values shipped in default_vehicle_classes()
/// are conventional defaults, overridable through the parameter file; only
/// the modal shares and speed-category bands are fixed by the fleet model.
struct VehicleClass {
  std::string name;
  SpeedCategory category = SpeedCategory::medium;
  double length = 4.5;                    // m
  double width = 1.8;                     // m
  double max_speed_kmh = 50.0;            // km/h
  double max_accel = 1.7;                 // a_n, m/s^2, > 0
  double desired_braking = -3.4;          // b_n, m/s^2, < 0
  double expected_leader_braking = -3.0;  // b-hat, m/s^2, < 0

  double desired_speed() const { return kmh_to_mps(max_speed_kmh); }
  void validate() const;  // throws FleetError on band/sign violations
};

class FleetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Built-in class table: three slow, five medium and four fast types with
/// their within-category modal shares.
struct ClassShare {
  VehicleClass vehicle;
  double percent = 0.0;  // share within its speed category
};
const std::vector<ClassShare>& default_class_shares();

/// Two-stage categorical fleet mix: a category is drawn by its percentage
/// share, then a class within the category by modal share.
class FleetMix {
 public:
  /// Uses the built-in class table.
  FleetMix(double slow_pct, double medium_pct, double fast_pct);
  FleetMix(double slow_pct, double medium_pct, double fast_pct,
           std::vector<ClassShare> shares);

  const VehicleClass& sample(RandomStream& rng) const;

  double slow_pct() const { return category_pct_[0]; }
  double medium_pct() const { return category_pct_[1]; }
  double fast_pct() const { return category_pct_[2]; }

  /// Unconditional draw probability of a class, for verification.
  double class_probability(std::string_view name) const;

  std::span<const ClassShare> shares() const { return shares_; }
  const VehicleClass& class_at(std::size_t index) const {
    return shares_[index].vehicle;
  }
  std::size_t index_of(const VehicleClass& cls) const;

 private:
  double category_pct_[3];
  std::vector<ClassShare> shares_;
  std::vector<std::size_t> by_category_[3];  // indices into shares_
};

enum class DemandLevel { low, medium, high };

/// Arrival intensity at one vehicle-generating node.
struct DemandProfile {
  DemandLevel level = DemandLevel::medium;
  double rate_vph = 400.0;  // vehicles/hour per generating node

  double mean_headway() const {
    if (!(rate_vph > 0.0)) throw FleetError("demand rate must be positive");
    return 3600.0 / rate_vph;
  }
};

/// Exponential variate headway: mean_headway * (-ln r), r in (0, 1].
double sample_headway(double mean_headway, double r01);

/// Arrival timestamps on [0, horizon) with i.i.d. exponential headways.
std::vector<double> generate_arrivals(const DemandProfile& profile,
                                      double horizon, RandomStream& rng);

/// Strips a vehicle occupies laterally: max(1, ceil(width / strip_width)).
/// A vehicle narrower than one strip still fills that strip.
int occupied_strips(double vehicle_width, double strip_width);

}  // namespace roadbird
