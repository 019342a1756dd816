#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "roadbird/batch.hpp"
#include "roadbird/network.hpp"
#include "roadbird/params.hpp"
#include "roadbird/stats.hpp"

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw std::runtime_error(fmt::format("cannot open {}", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& topology, const std::string& params_file,
            std::uint64_t seed, double duration, const std::string& out,
            const std::string& profile) {
  roadbird::RunConfig cfg;
  cfg.topology_dir = topology;
  cfg.profile = profile;
  cfg.duration = duration;
  cfg.seed = seed;
  if (!params_file.empty()) {
    std::vector<std::string> warnings;
    cfg.params = roadbird::parse_parameters(read_file(params_file), &warnings);
    for (const std::string& w : warnings)
      std::cerr << "warning: " << params_file << ": " << w << "\n";
  }

  const roadbird::TopologyParts parts =
      roadbird::load_topology_dir(cfg.topology_dir);
  const roadbird::RoadNetwork network(parts, cfg.params.strip_width);
  for (const std::string& w : network.warnings())
    std::cerr << "warning: " << w << "\n";

  const roadbird::RunOutcome outcome =
      roadbird::execute_run(network, cfg, std::filesystem::path(out));
  if (!outcome.ok) {
    std::cerr << "error: " << outcome.error << "\n";
    return 1;
  }
  const auto speed = outcome.report.network_avg_link_speed_kmh();
  const auto wait = outcome.report.network_avg_wait_s();
  std::cout << fmt::format(
      "seed {}: generated {}, exited {}, blocked {}, collisions {}\n",
      outcome.seed, outcome.counters.generated, outcome.counters.exited,
      outcome.counters.blocked_generations, outcome.counters.collisions);
  std::cout << fmt::format(
      "avg link speed: {} km/h, avg wait: {} s, avg flow: {:.1f} veh/h\n",
      speed ? fmt::format("{:.2f}", *speed) : "n/a",
      wait ? fmt::format("{:.2f}", *wait) : "n/a",
      outcome.report.network_avg_flow_vph());
  std::cout << "reports written to " << out << "\n";
  return 0;
}

int cmd_batch(const std::string& spec_file, const std::string& out,
              unsigned jobs) {
  const roadbird::BatchSpec spec =
      roadbird::BatchSpec::from_json_file(spec_file);
  const auto outcomes = roadbird::run_batch(spec, out, jobs);
  int failures = 0;
  for (const roadbird::RunOutcome& o : outcomes) {
    if (!o.ok) {
      ++failures;
      std::cerr << fmt::format("error: {} seed {}: {}\n", o.point.label(),
                               o.seed, o.error);
    }
  }
  std::cout << fmt::format("{} runs, {} failed; reports in {}\n",
                           outcomes.size(), failures, out);
  return failures == 0 ? 0 : 1;
}

int cmd_validate(const std::string& observed, const std::string& simulated,
                 const std::string& out) {
  const auto obs = roadbird::read_travel_time_csv(observed);
  const auto sim = roadbird::read_travel_time_csv(simulated);
  const auto cells = roadbird::validate_travel_times(obs, sim);
  std::filesystem::create_directories(out);
  const auto report = std::filesystem::path(out) / "validation_report.csv";
  roadbird::write_validation_csv(cells, report);
  for (const roadbird::ValidationCell& c : cells)
    std::cout << fmt::format(
        "{} {} {} {}: p_t={:.3f} p_ks={:.3f} ME={:.3f} MAE={:.3f} "
        "RMSE={:.3f} MAPE={:.1f}% RMSPE={:.1f}%\n",
        c.route, c.direction, c.vehicle_type, c.regime, c.p_t, c.p_ks,
        c.gof.me, c.gof.mae, c.gof.rmse, c.gof.mape, c.gof.rmspe);
  std::cout << "report written to " << report.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roadbird: strip-based microscopic traffic simulator"};
  app.require_subcommand(1);

  std::string topology, params_file, out = "out", profile = "dhaka";
  std::uint64_t seed = 1;
  double duration = 1800.0;

  CLI::App* run = app.add_subcommand("run", "execute a single simulation run");
  run->add_option("--topology", topology, "directory with node/link/path.txt")
      ->required();
  run->add_option("--params", params_file, "parameter.txt file");
  run->add_option("--seed", seed, "random seed");
  run->add_option("--duration", duration, "simulated seconds");
  run->add_option("--out", out, "output directory");
  run->add_option("--profile", profile, "demand profile: dhaka|miami|riyadh");

  std::string spec_file;
  unsigned jobs = 0;
  CLI::App* batch =
      app.add_subcommand("batch", "execute a multi-seed parameter sweep");
  batch->add_option("--spec", spec_file, "batch spec JSON file")->required();
  batch->add_option("--out", out, "output directory");
  batch->add_option("--jobs", jobs, "concurrent runs (0 = auto)");

  std::string observed, simulated;
  CLI::App* validate = app.add_subcommand(
      "validate", "compare observed and simulated travel times");
  validate->add_option("--observed", observed, "observed travel-time CSV")
      ->required();
  validate->add_option("--simulated", simulated, "simulated travel-time CSV")
      ->required();
  validate->add_option("--out", out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(topology, params_file, seed, duration, out, profile);
    if (batch->parsed()) return cmd_batch(spec_file, out, jobs);
    if (validate->parsed()) return cmd_validate(observed, simulated, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
