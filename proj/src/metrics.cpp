#include "roadbird/metrics.hpp"

#include <stdexcept>

#include "roadbird/units.hpp"

namespace roadbird {

std::optional<double> avg_link_speed(const LinkAccumulator& acc) {
  if (acc.crossings == 0) return std::nullopt;
  return mps_to_kmh(acc.crossing_speed_sum / static_cast<double>(acc.crossings));
}

std::optional<double> avg_link_waiting(const LinkAccumulator& acc) {
  if (acc.leavers == 0) return std::nullopt;
  return acc.wait_sum / static_cast<double>(acc.leavers);
}

double link_flow_rate(const LinkAccumulator& acc, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  return static_cast<double>(acc.midpoint_count) * 3600.0 / horizon;
}

std::optional<double> avg_vehicle_speed(std::span<const VehicleTravel> fleet) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (const VehicleTravel& t : fleet) {
    if (!(t.time > 0.0)) continue;
    sum += t.distance / t.time;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return mps_to_kmh(sum / static_cast<double>(n));
}

std::optional<double> MetricsReport::network_avg_link_speed_kmh() const {
  double sum = 0.0;
  int n = 0;
  for (const LinkMetricsRow& row : links)
    if (row.avg_speed_kmh) {
      sum += *row.avg_speed_kmh;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::optional<double> MetricsReport::network_avg_wait_s() const {
  double sum = 0.0;
  int n = 0;
  for (const LinkMetricsRow& row : links)
    if (row.avg_wait_s) {
      sum += *row.avg_wait_s;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / n;
}

double MetricsReport::network_avg_flow_vph() const {
  double sum = 0.0;
  for (const LinkMetricsRow& row : links) sum += row.flow_vph;
  return links.empty() ? 0.0 : sum / static_cast<double>(links.size());
}

void MetricsCollector::record_crossing(std::size_t link_index,
                                       double link_length,
                                       double time_to_cross) {
  if (!(time_to_cross > 0.0))
    throw std::invalid_argument("time_to_cross must be positive");
  LinkAccumulator& acc = links_.at(link_index);
  acc.crossing_speed_sum += link_length / time_to_cross;
  ++acc.crossings;
}

void MetricsCollector::record_leaver_wait(std::size_t link_index,
                                          double wait_s) {
  LinkAccumulator& acc = links_.at(link_index);
  acc.wait_sum += wait_s;
  ++acc.leavers;
}

void MetricsCollector::record_midpoint(std::size_t link_index) {
  ++links_.at(link_index).midpoint_count;
}

MetricsReport MetricsCollector::report(std::span<const int> link_ids,
                                       double horizon,
                                       bool include_unfinished) const {
  MetricsReport rep;
  rep.links.reserve(links_.size());
  for (std::size_t i = 0; i < links_.size(); ++i) {
    LinkMetricsRow row;
    row.link_id = link_ids[i];
    row.avg_speed_kmh = avg_link_speed(links_[i]);
    row.avg_wait_s = avg_link_waiting(links_[i]);
    row.flow_vph = link_flow_rate(links_[i], horizon);
    row.crossings = links_[i].crossings;
    row.leavers = links_[i].leavers;
    rep.links.push_back(row);
  }

  std::vector<VehicleTravel> fleet = completed_;
  if (include_unfinished)
    fleet.insert(fleet.end(), unfinished_.begin(), unfinished_.end());
  rep.avg_vehicle_speed_kmh = avg_vehicle_speed(fleet);
  for (const VehicleTravel& t : fleet)
    if (t.time > 0.0) ++rep.vehicles_in_average;
  return rep;
}

}  // namespace roadbird
