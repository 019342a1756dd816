#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roadbird/carfollow.hpp"
#include "roadbird/fleet.hpp"
#include "roadbird/lanechange.hpp"
#include "roadbird/metrics.hpp"
#include "roadbird/network.hpp"
#include "roadbird/rng.hpp"

namespace roadbird {

/// Whether the demand rate applies to each generating node or is split
/// evenly across them.
enum class RateScope { per_node, total };

struct EngineConfig {
  double timestep = 1.0;  // tau, s
  CarFollowModel cf_model = CarFollowModel::hybrid;
  LaneChangeModel lc_model = LaneChangeModel::gipps;
  GapAcceptanceParams gap;
  GhrParams ghr;
  double entry_speed_factor = 0.5;    // fraction of v_d at spawn
  double proximity_factor = 2.0;      // threshold = factor * v * tau
  double length_margin = 0.0;         // effective-length margin, m
  double lane_change_margin = 0.0;    // extra extent clearance for shifts, m
  bool pedestrian_mode = false;
  double pedestrian_rate_hpl = 50.0;  // crossings/hour/link
  double pedestrian_speed = 1.4;      // m/s
  double wait_speed_threshold = 0.1;  // "without movement" epsilon, m/s
  bool audit_each_step = true;
  bool include_unfinished_vehicles = true;
};

/// One pre-drawn vehicle arrival: when, where, what and which way.
struct ScheduledArrival {
  double time = 0.0;
  int node_id = 0;
  int path_id = 0;
  std::size_t class_index = 0;  // into FleetMix::shares()
};

struct Counters {
  std::int64_t generated = 0;
  std::int64_t exited = 0;
  std::int64_t blocked_generations = 0;
  std::int64_t rejected_arrivals = 0;  // no path can fit the vehicle
  std::int64_t shifts = 0;
  std::int64_t transfers = 0;
  std::int64_t holds = 0;  // blocked node transfers
  std::int64_t collisions = 0;
  std::int64_t pedestrians_spawned = 0;
  std::int64_t pedestrians_done = 0;
  CarFollowEvents cf;
  LaneChangeEvents lc;
};

struct VehicleState {
  int id = 0;
  std::size_t class_index = 0;
  std::string_view class_name;
  double length = 0.0;
  double desired_speed = 0.0;
  double max_accel = 0.0;
  GippsParams gipps;
  int span = 1;  // strips occupied

  int path_id = 0;
  std::size_t path_pos = 0;
  std::size_t link_idx = 0;
  double position = 0.0;  // front bumper, m
  int strip_lo = 0;
  double speed = 0.0;
  double accel = 0.0;

  double entry_time = 0.0;
  double link_entry_time = 0.0;
  double link_wait = 0.0;
  double total_wait = 0.0;
  double total_distance = 0.0;
  bool retired = false;

  // Lagged (dv, dx) ring for the GHR trigger.
  std::vector<std::pair<double, double>> history;
  int history_head = 0;
  int history_size = 0;

  // Rank in this step's per-link position ordering; engine scratch.
  std::size_t order_index = 0;

  double rear(double margin = 0.0) const { return position - length - margin; }
  int strip_hi() const { return strip_lo + span - 1; }
};

struct PedestrianState {
  int id = 0;
  std::size_t link_idx = 0;
  double position = 0.0;  // m along the link
  double lateral = 0.0;   // strip units, fractional
  int direction = 1;      // +1 away from strip 0, -1 toward it
  bool done = false;
};

struct OverlapEvent {
  int vehicle_a = 0;
  int vehicle_b = 0;
  int link_id = 0;
};

/// Receives formatted event-log lines (without trailing newline).
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void line(std::string_view text) = 0;
};

class StringEventSink final : public EventSink {
 public:
  void line(std::string_view text) override {
    text_.append(text);
    text_.push_back('\n');
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

class FileEventSink final : public EventSink {
 public:
  explicit FileEventSink(const std::string& path);
  ~FileEventSink() override;
  void line(std::string_view text) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One simulation run: owns all mutable state (vehicles, pedestrians, strip
/// occupancy, RNG stream, counters, metrics). The RoadNetwork is shared
/// read-only. Runs with identical (network, mix, config, seed, schedule)
/// reproduce identical event logs and metrics.
class Simulation {
 public:
  Simulation(const RoadNetwork& network, const FleetMix& mix,
             const EngineConfig& config, std::uint64_t seed,
             EventSink* sink = nullptr);

  /// Draw the whole arrival schedule (headways, classes, paths) for the run.
  /// Call once before stepping.
  void schedule_demand(const DemandProfile& demand, double horizon,
                       RateScope scope = RateScope::per_node);

  /// Inject an explicit schedule (tests, custom experiments).
  void schedule_arrivals(std::vector<ScheduledArrival> arrivals);

  /// Place a crossing pedestrian directly (scenario experiments, tests).
  void inject_pedestrian(std::size_t link_idx, double position,
                         double lateral, int direction);

  void step();
  void run(double horizon);  // steps until the clock reaches horizon, then finalizes

  double clock() const { return clock_; }
  const Counters& counters() const { return counters_; }
  std::int64_t active_count() const { return active_count_; }
  bool conservation_holds() const {
    return counters_.generated == active_count_ + counters_.exited;
  }

  /// All vehicle-pair strip overlaps in the current state.
  std::vector<OverlapEvent> collision_audit() const;

  /// Rebuilds the strip occupancy from vehicle states and compares it with
  /// the incrementally maintained structure.
  bool occupancy_coherent() const;

  MetricsReport report(double horizon) const;
  const MetricsCollector& metrics() const { return metrics_; }

  std::span<const VehicleState> vehicles() const { return vehicles_; }
  const VehicleState* find_vehicle(int id) const;
  std::span<const PedestrianState> pedestrians() const { return pedestrians_; }
  std::span<const int> strip_ids(std::size_t link_idx, int strip) const;
  const RoadNetwork& network() const { return net_; }

 private:
  struct LeaderInfo {
    double rear = 0.0;   // leader rear minus margin, m
    double speed = 0.0;  // m/s
    bool real = false;   // backed by a vehicle or pedestrian
  };
  struct SideScan {
    bool free = true;
    bool has_lead = false;
    double lead_rear = 0.0;
    double lead_speed = 0.0;
    bool has_lag = false;
    int lag_vehicle = -1;
    double lag_front = 0.0;
    double lag_speed = 0.0;
  };

  void rebuild_order();
  void spawn_phase(double t0);
  bool try_spawn(const ScheduledArrival& a, double t0);
  void pedestrian_phase(double t0);
  void lane_change_phase();
  void speed_phase();
  void advance_phase(double t1);
  void transfer_phase(double t1);
  void audit_phase(double t1);

  LeaderInfo effective_leader(const VehicleState& v) const;
  int pedestrian_strip(const PedestrianState& p) const;
  double entry_clearance(const VehicleState& v, std::size_t link_idx,
                         int target_lo) const;
  double cf_speed(const VehicleState& v, const LeaderInfo& leader);
  SideScan scan_side(const VehicleState& v, int target_lo) const;
  bool span_interval_free(std::size_t link_idx, int lo, int hi, double rear,
                          double front, int ignore_vehicle) const;
  void occupy(const VehicleState& v);
  void vacate(const VehicleState& v);
  void retire(VehicleState& v, double t1);
  void push_history(VehicleState& v, double dv, double dx);
  bool history_lagged(const VehicleState& v, double& dv, double& dx) const;
  void emit(std::string_view text) {
    if (sink_) sink_->line(text);
  }

  const RoadNetwork& net_;
  const FleetMix& mix_;
  EngineConfig cfg_;
  RandomStream rng_;
  EventSink* sink_;

  double clock_ = 0.0;
  Counters counters_;
  std::int64_t active_count_ = 0;
  int next_vehicle_id_ = 1;
  int next_pedestrian_id_ = 1;

  std::vector<ScheduledArrival> schedule_;
  std::size_t schedule_cursor_ = 0;
  std::map<int, std::deque<ScheduledArrival>> pending_;  // per node, FIFO

  std::vector<VehicleState> vehicles_;  // append-only; retired stay flagged
  std::vector<PedestrianState> pedestrians_;
  std::vector<std::vector<std::size_t>> ped_by_link_;
  std::vector<std::vector<int>> members_;        // per link: active vehicle ids
  std::vector<std::vector<std::size_t>> order_;  // per link: sorted indices
  std::vector<std::vector<std::vector<int>>> strips_;  // [link][strip] -> ids
  std::vector<double> pending_speed_;
  double max_vehicle_length_ = 0.0;
  bool finalized_ = false;

  MetricsCollector metrics_;
};

}  // namespace roadbird
