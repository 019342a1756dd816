#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roadbird/engine.hpp"
#include "roadbird/params.hpp"

namespace roadbird {

/// One point of the experiment grid.
struct SweepPoint {
  double strip_width = 0.5;
  int demand_type = 1;
  std::string mix = "heterogeneous";  // heterogeneous | homogeneous
  bool pedestrian_mode = false;

  std::string label() const;
};

/// Batch experiment: a base configuration, a seed list and optional sweep
/// axes whose cross-product defines the grid.
struct BatchSpec {
  RunConfig base;
  std::vector<std::uint64_t> seeds;
  std::vector<double> strip_widths;       // empty -> base value
  std::vector<int> demand_types;          // empty -> base value
  std::vector<std::string> mixes;         // empty -> heterogeneous (base shares)
  std::vector<bool> pedestrian_modes;     // empty -> base value

  static BatchSpec from_json_file(const std::filesystem::path& file);
  std::vector<SweepPoint> grid() const;

  /// The base configuration specialized to one sweep point and seed. The mix
  /// presets resolve against the profile: "heterogeneous" uses the profile
  /// category shares, "homogeneous" is medium-only.
  RunConfig config_for(const SweepPoint& point, std::uint64_t seed) const;
};

struct RunOutcome {
  SweepPoint point;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport report;
  Counters counters;
};

/// Execute one run. When out_dir is given, writes link_metrics.csv,
/// vehicle_metrics.csv, summary.csv and events.log there.
RunOutcome execute_run(const RoadNetwork& network, const RunConfig& config,
                       const std::optional<std::filesystem::path>& out_dir);

/// Execute the whole grid x seed matrix, jobs runs at a time. Results are
/// ordered by (grid index, seed index) regardless of scheduling. Failed runs
/// carry their error and do not abort the rest.
std::vector<RunOutcome> run_batch(const BatchSpec& spec,
                                  const std::filesystem::path& out_dir,
                                  unsigned jobs = 0);

/// Per-point summary.csv (per-seed and seed-averaged rows) plus the
/// sweep-level comparison.csv.
void emit_reports(const BatchSpec& spec, std::span<const RunOutcome> outcomes,
                  const std::filesystem::path& out_dir);

void write_link_metrics_csv(const MetricsReport& report,
                            const std::filesystem::path& file);
void write_vehicle_metrics_csv(std::span<const VehicleTravel> completed,
                               std::span<const VehicleTravel> unfinished,
                               bool include_unfinished,
                               const std::filesystem::path& file);
void write_run_summary_csv(const RunOutcome& outcome,
                           const std::filesystem::path& file);

}  // namespace roadbird
