#include "roadbird/batch.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <memory>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

namespace roadbird {

namespace {

std::string format_optional(const std::optional<double>& v) {
  return v ? fmt::format("{:.6f}", *v) : std::string();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out)
    throw std::runtime_error(fmt::format("cannot write {}", file.string()));
  out << text;
}

}  // namespace

std::string SweepPoint::label() const {
  return fmt::format("strip{:g}_demand{}_{}_ped{}", strip_width, demand_type,
                     mix, pedestrian_mode ? "on" : "off");
}

std::vector<SweepPoint> BatchSpec::grid() const {
  const std::vector<double> widths =
      strip_widths.empty() ? std::vector<double>{base.params.strip_width}
                           : strip_widths;
  const std::vector<int> demands =
      demand_types.empty() ? std::vector<int>{base.params.demand_type}
                           : demand_types;
  const std::vector<std::string> mix_values =
      mixes.empty() ? std::vector<std::string>{"base"} : mixes;
  const std::vector<bool> peds =
      pedestrian_modes.empty() ? std::vector<bool>{base.params.pedestrian_mode}
                               : pedestrian_modes;

  std::vector<SweepPoint> points;
  for (double w : widths)
    for (int d : demands)
      for (const std::string& m : mix_values)
        for (bool p : peds) points.push_back({w, d, m, p});
  return points;
}

RunConfig BatchSpec::config_for(const SweepPoint& point,
                                std::uint64_t seed) const {
  RunConfig cfg = base;
  cfg.seed = seed;
  cfg.params.strip_width = point.strip_width;
  cfg.params.demand_type = point.demand_type;
  cfg.params.pedestrian_mode = point.pedestrian_mode;
  if (point.mix == "heterogeneous") {
    const ExperimentProfile& prof = profile_by_name(cfg.profile);
    cfg.params.slow_pct = prof.het_mix[0];
    cfg.params.medium_pct = prof.het_mix[1];
    cfg.params.fast_pct = prof.het_mix[2];
  } else if (point.mix == "homogeneous") {
    cfg.params.slow_pct = 0.0;
    cfg.params.medium_pct = 100.0;
    cfg.params.fast_pct = 0.0;
  } else if (point.mix != "base") {
    throw ConfigError(fmt::format(
        "unknown mix preset '{}' (expected heterogeneous or homogeneous)",
        point.mix));
  }
  return cfg;
}

BatchSpec BatchSpec::from_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in)
    throw ConfigError(fmt::format("cannot open batch spec {}", file.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("{}: {}", file.string(), e.what()));
  }

  BatchSpec spec;
  if (!j.contains("topology"))
    throw ConfigError("batch spec: missing 'topology'");
  spec.base.topology_dir = j.at("topology").get<std::string>();
  if (j.contains("profile"))
    spec.base.profile = j.at("profile").get<std::string>();
  profile_by_name(spec.base.profile);  // validate early
  if (j.contains("duration")) {
    spec.base.duration = j.at("duration").get<double>();
    if (!(spec.base.duration > 0.0))
      throw ConfigError("batch spec: duration must be positive");
  }

  if (j.contains("parameters")) {
    std::string text;
    for (const auto& [key, value] : j.at("parameters").items()) {
      if (value.is_string())
        text += fmt::format("{}={}\n", key, value.get<std::string>());
      else if (value.is_boolean())
        text += fmt::format("{}={}\n", key, value.get<bool>() ? "on" : "off");
      else
        text += fmt::format("{}={:g}\n", key, value.get<double>());
    }
    spec.base.params = parse_parameters(text);
  }

  if (!j.contains("seeds") || j.at("seeds").empty())
    throw ConfigError("batch spec: 'seeds' must be a non-empty list");
  for (const auto& s : j.at("seeds"))
    spec.seeds.push_back(s.get<std::uint64_t>());

  if (j.contains("sweep")) {
    const auto& sweep = j.at("sweep");
    if (sweep.contains("strip_widths"))
      for (const auto& v : sweep.at("strip_widths"))
        spec.strip_widths.push_back(v.get<double>());
    if (sweep.contains("demand_types"))
      for (const auto& v : sweep.at("demand_types"))
        spec.demand_types.push_back(v.get<int>());
    if (sweep.contains("mixes"))
      for (const auto& v : sweep.at("mixes"))
        spec.mixes.push_back(v.get<std::string>());
    if (sweep.contains("pedestrian_modes"))
      for (const auto& v : sweep.at("pedestrian_modes")) {
        if (v.is_boolean())
          spec.pedestrian_modes.push_back(v.get<bool>());
        else
          spec.pedestrian_modes.push_back(v.get<std::string>() == "on");
      }
  }
  return spec;
}

void write_link_metrics_csv(const MetricsReport& report,
                            const std::filesystem::path& file) {
  std::string text = "link_id,avg_speed_kmh,avg_wait_s,flow_vph,n_crossings\n";
  for (const LinkMetricsRow& row : report.links)
    text += fmt::format("{},{},{},{:.6f},{}\n", row.link_id,
                        format_optional(row.avg_speed_kmh),
                        format_optional(row.avg_wait_s), row.flow_vph,
                        row.crossings);
  write_text(file, text);
}

void write_vehicle_metrics_csv(std::span<const VehicleTravel> completed,
                               std::span<const VehicleTravel> unfinished,
                               bool include_unfinished,
                               const std::filesystem::path& file) {
  std::string text =
      "vehicle_id,distance_m,time_s,avg_speed_kmh,completed\n";
  auto add = [&text](const VehicleTravel& t, bool done) {
    const std::string speed =
        t.time > 0.0 ? fmt::format("{:.6f}", t.distance / t.time * 3.6)
                     : std::string();
    text += fmt::format("{},{:.3f},{:.3f},{},{}\n", t.vehicle_id, t.distance,
                        t.time, speed, done ? 1 : 0);
  };
  for (const VehicleTravel& t : completed) add(t, true);
  if (include_unfinished)
    for (const VehicleTravel& t : unfinished) add(t, false);
  write_text(file, text);
}

namespace {

std::string summary_header() {
  return "strip_width,demand_type,mix,pedestrian_mode,seed,"
         "n_speed,avg_link_speed_kmh,n_wait,avg_wait_s,avg_flow_vph,"
         "n_vspeed,avg_vehicle_speed_kmh,generated,exited,blocked,"
         "rejected,collisions,shifts,transfers,holds,error\n";
}

std::string summary_row(const RunOutcome& o, const std::string& seed_label) {
  const auto speed = o.report.network_avg_link_speed_kmh();
  const auto wait = o.report.network_avg_wait_s();
  return fmt::format(
      "{:g},{},{},{},{},{},{},{},{},{:.6f},{},{},{},{},{},{},{},{},{},{},{}\n",
      o.point.strip_width, o.point.demand_type, o.point.mix,
      o.point.pedestrian_mode ? "on" : "off", seed_label, speed ? 1 : 0,
      format_optional(speed), wait ? 1 : 0, format_optional(wait),
      o.report.network_avg_flow_vph(),
      o.report.avg_vehicle_speed_kmh ? 1 : 0,
      format_optional(o.report.avg_vehicle_speed_kmh), o.counters.generated,
      o.counters.exited, o.counters.blocked_generations,
      o.counters.rejected_arrivals, o.counters.collisions, o.counters.shifts,
      o.counters.transfers, o.counters.holds, o.error);
}

struct Averaged {
  int n_speed = 0;
  double speed = 0.0;
  int n_wait = 0;
  double wait = 0.0;
  int n_flow = 0;
  double flow = 0.0;
  int n_vspeed = 0;
  double vspeed = 0.0;
};

Averaged average_outcomes(std::span<const RunOutcome* const> runs) {
  Averaged a;
  for (const RunOutcome* o : runs) {
    if (!o->ok) continue;
    if (const auto v = o->report.network_avg_link_speed_kmh()) {
      a.speed += *v;
      ++a.n_speed;
    }
    if (const auto v = o->report.network_avg_wait_s()) {
      a.wait += *v;
      ++a.n_wait;
    }
    a.flow += o->report.network_avg_flow_vph();
    ++a.n_flow;
    if (const auto v = o->report.avg_vehicle_speed_kmh) {
      a.vspeed += *v;
      ++a.n_vspeed;
    }
  }
  if (a.n_speed) a.speed /= a.n_speed;
  if (a.n_wait) a.wait /= a.n_wait;
  if (a.n_flow) a.flow /= a.n_flow;
  if (a.n_vspeed) a.vspeed /= a.n_vspeed;
  return a;
}

}  // namespace

void write_run_summary_csv(const RunOutcome& outcome,
                           const std::filesystem::path& file) {
  write_text(file, summary_header() +
                       summary_row(outcome, fmt::format("{}", outcome.seed)));
}

RunOutcome execute_run(const RoadNetwork& network, const RunConfig& config,
                       const std::optional<std::filesystem::path>& out_dir) {
  RunOutcome outcome;
  outcome.seed = config.seed;
  try {
    const FleetMix mix = config.params.fleet_mix();
    const EngineConfig engine_cfg = config.params.engine_config();
    std::unique_ptr<FileEventSink> sink;
    if (out_dir) {
      std::filesystem::create_directories(*out_dir);
      sink = std::make_unique<FileEventSink>((*out_dir / "events.log").string());
    }
    Simulation sim(network, mix, engine_cfg, config.seed, sink.get());
    sim.schedule_demand(config.demand(), config.duration,
                        config.params.rate_scope);
    sim.run(config.duration);
    outcome.report = sim.report(config.duration);
    outcome.counters = sim.counters();
    outcome.ok = true;
    if (out_dir) {
      write_link_metrics_csv(outcome.report, *out_dir / "link_metrics.csv");
      write_vehicle_metrics_csv(sim.metrics().completed(),
                                sim.metrics().unfinished(),
                                engine_cfg.include_unfinished_vehicles,
                                *out_dir / "vehicle_metrics.csv");
      write_run_summary_csv(outcome, *out_dir / "summary.csv");
    }
  } catch (const std::exception& e) {
    outcome.ok = false;
    outcome.error = e.what();
  }
  return outcome;
}

std::vector<RunOutcome> run_batch(const BatchSpec& spec,
                                  const std::filesystem::path& out_dir,
                                  unsigned jobs) {
  const std::vector<SweepPoint> points = spec.grid();
  const TopologyParts parts = load_topology_dir(spec.base.topology_dir);

  std::map<double, std::unique_ptr<RoadNetwork>> networks;
  for (const SweepPoint& p : points)
    if (!networks.count(p.strip_width))
      networks[p.strip_width] =
          std::make_unique<RoadNetwork>(parts, p.strip_width);

  struct Task {
    std::size_t point_index;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  for (std::size_t pi = 0; pi < points.size(); ++pi)
    for (std::size_t si = 0; si < spec.seeds.size(); ++si)
      tasks.push_back({pi, si});

  std::vector<RunOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size()));

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const SweepPoint& point = points[tasks[i].point_index];
      const std::uint64_t seed = spec.seeds[tasks[i].seed_index];
      const RunConfig cfg = spec.config_for(point, seed);
      const auto run_dir =
          out_dir / point.label() / fmt::format("seed{}", seed);
      outcomes[i] = execute_run(*networks.at(point.strip_width), cfg, run_dir);
      outcomes[i].point = point;
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }

  emit_reports(spec, outcomes, out_dir);
  return outcomes;
}

void emit_reports(const BatchSpec& spec, std::span<const RunOutcome> outcomes,
                  const std::filesystem::path& out_dir) {
  const std::vector<SweepPoint> points = spec.grid();
  const std::size_t n_seeds = spec.seeds.size();

  std::string comparison =
      "strip_width,demand_type,mix,pedestrian_mode,metric,value,n_seeds\n";

  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const SweepPoint& point = points[pi];
    std::vector<const RunOutcome*> runs;
    for (std::size_t si = 0; si < n_seeds; ++si)
      runs.push_back(&outcomes[pi * n_seeds + si]);

    std::string summary = summary_header();
    for (const RunOutcome* o : runs)
      summary += summary_row(*o, fmt::format("{}", o->seed));

    const Averaged avg = average_outcomes(runs);
    const auto opt = [](int n, double v) {
      return n > 0 ? std::optional<double>(v) : std::nullopt;
    };
    summary += fmt::format(
        "{:g},{},{},{},avg,{},{},{},{},{:.6f},{},{},,,,,,,,,\n",
        point.strip_width, point.demand_type, point.mix,
        point.pedestrian_mode ? "on" : "off", avg.n_speed,
        format_optional(opt(avg.n_speed, avg.speed)), avg.n_wait,
        format_optional(opt(avg.n_wait, avg.wait)), avg.flow, avg.n_vspeed,
        format_optional(opt(avg.n_vspeed, avg.vspeed)));
    std::filesystem::create_directories(out_dir / point.label());
    write_text(out_dir / point.label() / "summary.csv", summary);

    const std::string key =
        fmt::format("{:g},{},{},{}", point.strip_width, point.demand_type,
                    point.mix, point.pedestrian_mode ? "on" : "off");
    comparison += fmt::format("{},avg_link_speed_kmh,{},{}\n", key,
                              format_optional(opt(avg.n_speed, avg.speed)),
                              avg.n_speed);
    comparison += fmt::format("{},avg_wait_s,{},{}\n", key,
                              format_optional(opt(avg.n_wait, avg.wait)),
                              avg.n_wait);
    comparison += fmt::format("{},avg_flow_vph,{},{}\n", key,
                              format_optional(opt(avg.n_flow, avg.flow)),
                              avg.n_flow);
    comparison += fmt::format("{},avg_vehicle_speed_kmh,{},{}\n", key,
                              format_optional(opt(avg.n_vspeed, avg.vspeed)),
                              avg.n_vspeed);
  }
  write_text(out_dir / "comparison.csv", comparison);
}

}  // namespace roadbird
