#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace roadbird {

/// Per-link accumulators feeding the four performance metrics.
struct LinkAccumulator {
  double crossing_speed_sum = 0.0;  // sum of length/time_to_cross, m/s
  std::int64_t crossings = 0;       // |S_l|
  double wait_sum = 0.0;            // s, summed over vehicles leaving the link
  std::int64_t leavers = 0;         // N
  std::int64_t midpoint_count = 0;  // flow detector hits
};

/// One retired (or horizon-truncated) vehicle's travel totals.
struct VehicleTravel {
  int vehicle_id = 0;
  double distance = 0.0;  // m
  double time = 0.0;      // s
};

/// Mean crossing speed on a link in km/h; empty when nothing crossed.
std::optional<double> avg_link_speed(const LinkAccumulator& acc);

/// Mean per-vehicle waiting time on a link in seconds; empty when no vehicle
/// has left the link.
std::optional<double> avg_link_waiting(const LinkAccumulator& acc);

/// Midpoint crossings extrapolated to vehicles/hour.
double link_flow_rate(const LinkAccumulator& acc, double horizon);

/// Mean of per-vehicle average speeds in km/h; empty for an empty fleet.
std::optional<double> avg_vehicle_speed(std::span<const VehicleTravel> fleet);

struct LinkMetricsRow {
  int link_id = 0;
  std::optional<double> avg_speed_kmh;
  std::optional<double> avg_wait_s;
  double flow_vph = 0.0;
  std::int64_t crossings = 0;
  std::int64_t leavers = 0;
};

struct MetricsReport {
  std::vector<LinkMetricsRow> links;
  std::optional<double> avg_vehicle_speed_kmh;
  std::int64_t vehicles_in_average = 0;

  /// Unweighted mean of the per-link averages that have data; the network
  /// scalar used for cross-scenario comparisons.
  std::optional<double> network_avg_link_speed_kmh() const;
  std::optional<double> network_avg_wait_s() const;
  double network_avg_flow_vph() const;
};

/// Run-owned metric accumulation; report() is a pure fold at the end.
class MetricsCollector {
 public:
  explicit MetricsCollector(std::size_t n_links) : links_(n_links) {}

  void record_crossing(std::size_t link_index, double link_length,
                       double time_to_cross);
  void record_leaver_wait(std::size_t link_index, double wait_s);
  void record_midpoint(std::size_t link_index);
  void record_completed(VehicleTravel t) { completed_.push_back(t); }
  void record_unfinished(VehicleTravel t) { unfinished_.push_back(t); }

  const LinkAccumulator& link(std::size_t i) const { return links_[i]; }
  std::span<const VehicleTravel> completed() const { return completed_; }
  std::span<const VehicleTravel> unfinished() const { return unfinished_; }

  MetricsReport report(std::span<const int> link_ids, double horizon,
                       bool include_unfinished) const;

 private:
  std::vector<LinkAccumulator> links_;
  std::vector<VehicleTravel> completed_;
  std::vector<VehicleTravel> unfinished_;
};

}  // namespace roadbird
