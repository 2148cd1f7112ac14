// Command-line front end: pipeline runs, S / K^SE sweeps, a single FL
// trajectory, and rate-table dumps. Exit codes: 0 success, 2 configuration,
// 3 infeasible scenario, 4 numeric failure, 5 I/O failure.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cafl/cafl.hpp"

namespace {

int exit_code_for(cafl::errc code) {
  switch (code) {
    case cafl::errc::config_error:
    case cafl::errc::invalid_argument:
      return 2;
    case cafl::errc::all_infeasible:
    case cafl::errc::too_few_channels:
    case cafl::errc::infeasible_assignment:
    case cafl::errc::empty_participant_set:
    case cafl::errc::instance_too_large:
      return 3;
    case cafl::errc::discriminant_negative:
    case cafl::errc::degenerate_bound:
    case cafl::errc::no_root_in_range:
    case cafl::errc::zero_rate:
    case cafl::errc::iteration_cap_exceeded:
      return 4;
    case cafl::errc::io_error:
      return 5;
  }
  return 1;
}

int resolve_kse(const cafl::ExperimentConfig& cfg) {
  if (cfg.forced_kse > 0) return cfg.forced_kse;
  return cafl::optimal_kse(cfg.bound_params()).kse_opt;
}

void print_summary(const cafl::ExperimentSummary& s) {
  std::cout << "axis=" << cafl::axis_name(s.axis) << " value="
            << cafl::csv::format(s.sweep_value) << " method="
            << cafl::method_name(s.method) << " kse=" << s.kse << " rounds="
            << s.r_min << " trials=" << s.trials << " mean_total_s="
            << cafl::csv::format(s.mean_total_s) << " std_total_s="
            << cafl::csv::format(s.std_total_s) << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{
      "Compression-aided federated learning over an OFDMA uplink: "
      "convergence-bound driven device count, coalition-game sub-channel "
      "allocation, Monte Carlo sweeps, and a toy FL loop."};

  std::string config_path;
  std::string out_dir = "out";
  std::string sweep_str;
  std::string method_str;
  std::uint64_t seed = 0;
  long long trials = 0;
  bool fl_mode = false;
  bool dump_rates = false;

  app.add_option("--config", config_path, "Scenario file (INI-style sections)");
  app.add_option("--seed", seed, "Master seed (overrides system.seed)");
  app.add_option("--trials", trials, "Trial count (overrides system.trials)");
  app.add_option("--sweep", sweep_str, "Sweep axis: subchannels | kse")
      ->check(CLI::IsMember({"subchannels", "kse"}));
  app.add_option("--method", method_str,
                 "Allocation method: coalition | fairness | exhaustive")
      ->check(CLI::IsMember({"coalition", "fairness", "exhaustive"}));
  app.add_option("--out", out_dir, "Output directory (created if missing)")
      ->capture_default_str();
  auto* fl_flag = app.add_flag("--fl", fl_mode,
                               "Run one FL trajectory and write trajectory.csv");
  app.add_flag("--dump-rates", dump_rates,
               "Write one sampled rate table and its allocation, then exit")
      ->excludes(fl_flag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  cafl::ConfigMap map;
  if (!config_path.empty()) map = cafl::ConfigMap::from_file(config_path);
  if (app.count("--seed")) map.set("system.seed", std::to_string(seed));
  if (app.count("--trials")) map.set("system.trials", std::to_string(trials));
  if (app.count("--method")) map.set("experiment.method", method_str);
  if (app.count("--sweep")) {
    map.set("experiment.sweep", sweep_str);
    if (!map.has("experiment.sweep_values"))
      map.set("experiment.sweep_values",
              sweep_str == "subchannels" ? "10,15,20,25,30" : "3,6,9,12,15");
  }
  const cafl::ExperimentConfig cfg = cafl::ExperimentConfig::from_map(map);

  std::error_code fs_error;
  std::filesystem::create_directories(out_dir, fs_error);
  if (fs_error)
    cafl::fail(cafl::errc::io_error,
               "cannot create output directory '" + out_dir + "'");
  const auto out_path = [&](const char* name) {
    return (std::filesystem::path(out_dir) / name).string();
  };

  if (dump_rates) {
    const cafl::Topology topo = cafl::sample_topology(
        cafl::derive_seed(cfg.master_seed, cafl::stream::topology, 0, 0),
        cfg.devices_k, cfg.cell_radius_m);
    auto fading_rng = cafl::make_engine(cfg.master_seed, cafl::stream::fading, 0, 0);
    const cafl::RateTable table =
        cafl::rate_table(topo, cfg.link, cfg.subchannels, 0, fading_rng);
    cafl::csv::write_rates(out_path("rates.csv"), table);
    const int kse = resolve_kse(cfg);
    auto select_rng = cafl::make_engine(cfg.master_seed, cafl::stream::selection, 0, 0);
    const auto selected = cafl::select_devices(cfg.devices_k, kse, select_rng);
    const auto outcome =
        cafl::detail::allocate(table, selected, cfg, cfg.master_seed, 0, 0);
    cafl::csv::write_assignment(out_path("assignment.csv"), 0, outcome.assignment);
    std::cout << "rates: " << table.devices << " devices x " << table.subchannels
              << " subchannels -> " << out_path("rates.csv") << "\n"
              << "allocation: method=" << cafl::method_name(cfg.method)
              << " kse=" << kse << " t_comp_s="
              << cafl::csv::format(outcome.t_comp_seconds) << " -> "
              << out_path("assignment.csv") << "\n";
    return 0;
  }

  if (fl_mode) {
    const int kse = resolve_kse(cfg);
    const cafl::SyntheticTask task = cafl::make_synthetic_task(
        cfg.master_seed, cfg.devices_k, cfg.fl_dimension, cfg.fl_noise_scale);
    cafl::FlRunConfig fc = cfg.fl_config(kse);
    const cafl::Trajectory traj = cafl::run_fl(fc, task);
    cafl::csv::write_trajectory(out_path("trajectory.csv"), traj);
    const auto reached = cafl::rounds_to_accuracy(traj, fc.distance_threshold);
    const auto cal = cafl::calibrate_bound_inputs(cfg, task);
    std::cout << "fl: kse=" << kse << " rounds=" << fc.rounds << " threshold="
              << cafl::csv::format(fc.distance_threshold) << " reached="
              << (reached ? std::to_string(*reached) : std::string("never"))
              << " final_distance="
              << cafl::csv::format(traj.distance.back()) << "\n"
              << "calibration: chi=" << cafl::csv::format(cal.chi)
              << " delta_sq=" << cafl::csv::format(cal.delta_sq)
              << " g_sq=" << cafl::csv::format(cal.g_sq) << "\n";
    return 0;
  }

  if (cfg.sweep_axis != cafl::sweep_axis_kind::none) {
    const cafl::SweepResult sweep =
        cfg.sweep_axis == cafl::sweep_axis_kind::subchannels
            ? cafl::sweep_subchannels(cfg, cfg.sweep_values)
            : cafl::sweep_kse(cfg, cfg.sweep_values);
    cafl::csv::write_rounds(out_path("rounds.csv"), sweep.reports);
    cafl::csv::write_summary(out_path("summary.csv"), sweep.summaries);
    for (const auto& s : sweep.summaries) print_summary(s);
    return 0;
  }

  const cafl::PipelineResult result = cafl::run_pipeline(cfg);
  cafl::csv::write_rounds(out_path("rounds.csv"), result.reports);
  cafl::csv::write_summary(out_path("summary.csv"), {result.summary});
  print_summary(result.summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cafl::error& e) {
    std::cerr << "error [" << cafl::errc_name(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
