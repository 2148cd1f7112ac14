// Experiment harness: device-count optimization feeding per-round device
// selection and sub-channel allocation, Monte Carlo trials with derived
// seeds, and the S / K^SE sweeps. Every random stream is a pure function of
// (master seed, purpose, trial, round) and never of the allocation method,
// so method comparisons are paired and results do not depend on the worker
// count.
#ifndef CAFL_EXPERIMENT_HPP
#define CAFL_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cafl/allocation.hpp"
#include "cafl/bound.hpp"
#include "cafl/config.hpp"
#include "cafl/csv.hpp"
#include "cafl/errors.hpp"
#include "cafl/flsim.hpp"
#include "cafl/radio.hpp"
#include "cafl/rng.hpp"

namespace cafl {

struct RoundReport {
  int trial = 0;
  int round = 0;
  double sweep_value = 0.0;
  alloc_method method = alloc_method::coalition;
  std::vector<int> selected;
  double t_comp_seconds = 0.0;
  long long iterations = 0;
};

struct ExperimentSummary {
  sweep_axis_kind axis = sweep_axis_kind::none;
  double sweep_value = 0.0;
  alloc_method method = alloc_method::coalition;
  int kse = 0;
  long long r_min = 0;
  int trials = 0;
  double mean_total_s = 0.0;
  double std_total_s = 0.0;
};

struct PipelineResult {
  ExperimentSummary summary;
  std::vector<RoundReport> reports;  // ordered by (trial, round)
  std::vector<double> trial_totals;  // one total per trial, trial order
};

struct SweepResult {
  std::vector<ExperimentSummary> summaries;
  std::vector<RoundReport> reports;
};

// Uniform draw of exactly kse distinct devices, ascending.
inline std::vector<int> select_devices(int devices_k, int kse, std::mt19937_64& rng) {
  require(devices_k >= 1, errc::invalid_argument, "K must be >= 1");
  require(kse >= 1 && kse <= devices_k, errc::invalid_argument,
          "kse must satisfy 1 <= kse <= K");
  return sample_without_replacement(devices_k, kse, rng);
}

namespace detail {

inline double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

// Population standard deviation.
inline double std_of(const std::vector<double>& xs, double mean) {
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / static_cast<double>(xs.size()));
}

inline double median_of(std::vector<double> xs) {
  require(!xs.empty(), errc::invalid_argument, "median of empty set");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Runs fn(0..jobs-1) on up to `workers` threads. Each job writes only its
// own output slot, so scheduling order cannot affect results. The first
// exception wins and is rethrown on the caller thread.
template <typename Fn>
void run_jobs(int jobs, int workers, Fn&& fn) {
  const int threads = std::min(workers, jobs);
  if (threads <= 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= jobs) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline AllocationOutcome allocate(const RateTable& table, const std::vector<int>& selected,
                                  const ExperimentConfig& cfg, std::uint64_t master_seed,
                                  int trial, int round) {
  switch (cfg.method) {
    case alloc_method::fairness: {
      AllocationOutcome out;
      out.assignment = fairness_assignment(selected, table.subchannels);
      out.t_comp_seconds = t_comp(out.assignment, table, cfg.z_comp_bits);
      return out;
    }
    case alloc_method::exhaustive:
      return exhaustive_optimum(table, selected, cfg.z_comp_bits);
    case alloc_method::coalition:
    default: {
      auto game_rng = make_engine(master_seed, stream::game, trial, round);
      return coalition_game(table, selected, cfg.z_comp_bits, game_rng,
                            cfg.game_sweep_cap);
    }
  }
}

inline PipelineResult run_pipeline_tagged(const ExperimentConfig& cfg,
                                          sweep_axis_kind axis, double sweep_value) {
  cfg.validate();
  const FlBoundParams bound = cfg.bound_params();

  int kse = cfg.forced_kse;
  long long rounds = cfg.forced_rounds;
  if (kse == 0) kse = optimal_kse(bound).kse_opt;
  if (rounds == 0) rounds = r_min(bound, kse);
  require(kse <= cfg.subchannels, errc::too_few_channels,
          "resolved kse exceeds the sub-channel count");
  require(rounds <= 1'000'000, errc::instance_too_large,
          "r_min too large to simulate; set forced_rounds");
  const int rounds_i = static_cast<int>(rounds);

  std::vector<std::vector<RoundReport>> per_trial(cfg.trials);
  std::vector<double> totals(cfg.trials, 0.0);
  detail::run_jobs(cfg.trials, cfg.workers, [&](int trial) {
    const Topology topo =
        sample_topology(derive_seed(cfg.master_seed, stream::topology, trial, 0),
                        cfg.devices_k, cfg.cell_radius_m);
    auto& reports = per_trial[trial];
    reports.reserve(rounds_i);
    double total = 0.0;
    for (int t = 0; t < rounds_i; ++t) {
      auto fading_rng = make_engine(cfg.master_seed, stream::fading, trial, t);
      const RateTable table =
          rate_table(topo, cfg.link, cfg.subchannels, t, fading_rng);
      auto select_rng = make_engine(cfg.master_seed, stream::selection, trial, t);
      const std::vector<int> selected = select_devices(cfg.devices_k, kse, select_rng);
      const AllocationOutcome out =
          allocate(table, selected, cfg, cfg.master_seed, trial, t);
      RoundReport report;
      report.trial = trial;
      report.round = t;
      report.sweep_value = sweep_value;
      report.method = cfg.method;
      report.selected = selected;
      report.t_comp_seconds = out.t_comp_seconds;
      report.iterations = out.iterations;
      reports.push_back(std::move(report));
      total += out.t_comp_seconds;
    }
    totals[trial] = total;
  });

  PipelineResult result;
  result.trial_totals = std::move(totals);
  for (auto& reports : per_trial)
    for (auto& r : reports) result.reports.push_back(std::move(r));
  result.summary.axis = axis;
  result.summary.sweep_value = sweep_value;
  result.summary.method = cfg.method;
  result.summary.kse = kse;
  result.summary.r_min = rounds;
  result.summary.trials = cfg.trials;
  result.summary.mean_total_s = detail::mean_of(result.trial_totals);
  result.summary.std_total_s =
      detail::std_of(result.trial_totals, result.summary.mean_total_s);
  return result;
}

}  // namespace detail

inline PipelineResult run_pipeline(const ExperimentConfig& cfg) {
  return detail::run_pipeline_tagged(cfg, sweep_axis_kind::none, 0.0);
}

namespace detail {

inline int integral_value(double v, const char* what) {
  const int i = static_cast<int>(v);
  require(static_cast<double>(i) == v && i >= 1, errc::config_error,
          std::string(what) + " sweep values must be positive integers");
  return i;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg, sweep_axis_kind axis,
                             const std::vector<double>& values) {
  require(!values.empty(), errc::config_error, "sweep value list is empty");
  SweepResult sweep;
  for (double v : values) {
    ExperimentConfig point = cfg;
    point.sweep_axis = sweep_axis_kind::none;
    point.sweep_values.clear();
    // per-round semantics: a fixed round count (default one) keeps the
    // points comparable when the bound would choose different r_min values
    point.forced_rounds = cfg.forced_rounds > 0 ? cfg.forced_rounds : 1;
    if (axis == sweep_axis_kind::subchannels) {
      point.subchannels = integral_value(v, "subchannel");
    } else {
      point.forced_kse = integral_value(v, "kse");
      require(point.forced_kse <= cfg.devices_k, errc::config_error,
              "kse sweep value exceeds the device count");
      require(point.forced_kse <= cfg.subchannels, errc::config_error,
              "kse sweep value exceeds the sub-channel count");
    }
    for (alloc_method m : {alloc_method::coalition, alloc_method::fairness}) {
      point.method = m;
      PipelineResult res = run_pipeline_tagged(point, axis, v);
      sweep.summaries.push_back(res.summary);
      for (auto& r : res.reports) sweep.reports.push_back(std::move(r));
    }
  }
  return sweep;
}

}  // namespace detail

inline SweepResult sweep_subchannels(const ExperimentConfig& cfg,
                                     const std::vector<double>& values) {
  return detail::run_sweep(cfg, sweep_axis_kind::subchannels, values);
}

inline SweepResult sweep_kse(const ExperimentConfig& cfg,
                             const std::vector<double>& values) {
  return detail::run_sweep(cfg, sweep_axis_kind::kse, values);
}

namespace csv {

inline constexpr const char* rounds_header =
    "trial,round,sweep_value,method,selected_devices,t_comp_s,iterations";

inline std::vector<std::string> rounds_lines(const std::vector<RoundReport>& reports) {
  std::vector<std::string> lines{rounds_header};
  for (const auto& r : reports)
    lines.push_back(std::to_string(r.trial) + "," + std::to_string(r.round) + "," +
                    format(r.sweep_value) + "," + method_name(r.method) + "," +
                    join_devices(r.selected) + "," + format(r.t_comp_seconds) + "," +
                    std::to_string(r.iterations));
  return lines;
}

inline void write_rounds(const std::string& path, const std::vector<RoundReport>& reports) {
  write_lines(path, rounds_lines(reports));
}

inline std::vector<RoundReport> parse_rounds(const std::string& path) {
  const auto lines = read_lines(path);
  expect_header(lines, rounds_header, path);
  std::vector<RoundReport> reports;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    require(fields.size() == 7, errc::io_error, "bad round row in '" + path + "'");
    RoundReport r;
    r.trial = static_cast<int>(to_int(fields[0]));
    r.round = static_cast<int>(to_int(fields[1]));
    r.sweep_value = to_double(fields[2]);
    r.method = parse_method(fields[3]);
    r.selected = split_devices(fields[4]);
    r.t_comp_seconds = to_double(fields[5]);
    r.iterations = to_int(fields[6]);
    reports.push_back(std::move(r));
  }
  return reports;
}

inline constexpr const char* summary_header =
    "sweep_axis,sweep_value,method,kse,r_min,trials,mean_total_s,std_total_s";

inline std::vector<std::string> summary_lines(
    const std::vector<ExperimentSummary>& summaries) {
  std::vector<std::string> lines{summary_header};
  for (const auto& s : summaries)
    lines.push_back(std::string(axis_name(s.axis)) + "," + format(s.sweep_value) + "," +
                    method_name(s.method) + "," + std::to_string(s.kse) + "," +
                    std::to_string(s.r_min) + "," + std::to_string(s.trials) + "," +
                    format(s.mean_total_s) + "," + format(s.std_total_s));
  return lines;
}

inline void write_summary(const std::string& path,
                          const std::vector<ExperimentSummary>& summaries) {
  write_lines(path, summary_lines(summaries));
}

inline std::vector<ExperimentSummary> parse_summary(const std::string& path) {
  const auto lines = read_lines(path);
  expect_header(lines, summary_header, path);
  std::vector<ExperimentSummary> summaries;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    require(fields.size() == 8, errc::io_error, "bad summary row in '" + path + "'");
    ExperimentSummary s;
    s.axis = parse_axis(fields[0]);
    s.sweep_value = to_double(fields[1]);
    s.method = parse_method(fields[2]);
    s.kse = static_cast<int>(to_int(fields[3]));
    s.r_min = to_int(fields[4]);
    s.trials = static_cast<int>(to_int(fields[5]));
    s.mean_total_s = to_double(fields[6]);
    s.std_total_s = to_double(fields[7]);
    summaries.push_back(s);
  }
  return summaries;
}

}  // namespace csv

// Per-seed federated run used by the qualitative convergence studies: a
// fresh task per seed index, paired across kse values through a shared
// derived seed.
struct FlSeedOutcome {
  std::optional<int> rounds_to_threshold;
  double tail_mean_distance = 0.0;  // mean over the final 100 rounds
};

inline FlSeedOutcome run_fl_seed(const ExperimentConfig& cfg, int kse, int seed_index) {
  const std::uint64_t seed =
      derive_seed(cfg.master_seed, stream::generic, seed_index, 0);
  const SyntheticTask task =
      make_synthetic_task(seed, cfg.devices_k, cfg.fl_dimension, cfg.fl_noise_scale);
  FlRunConfig fc = cfg.fl_config(kse);
  fc.seed = seed;
  const Trajectory traj = run_fl(fc, task);
  FlSeedOutcome out;
  out.rounds_to_threshold = rounds_to_accuracy(traj, fc.distance_threshold);
  const int n = static_cast<int>(traj.distance.size());
  const int tail = std::min(100, n);
  double sum = 0.0;
  for (int t = n - tail; t < n; ++t) sum += traj.distance[t];
  out.tail_mean_distance = sum / tail;
  return out;
}

// Median of rounds_to_threshold across seeds; nullopt when the median seed
// never levels below the threshold. Unreached runs rank above all reached
// ones.
inline std::optional<double> median_rounds(const std::vector<FlSeedOutcome>& outcomes) {
  require(!outcomes.empty(), errc::invalid_argument, "median of empty set");
  std::vector<double> values;
  for (const auto& o : outcomes)
    values.push_back(o.rounds_to_threshold
                         ? static_cast<double>(*o.rounds_to_threshold)
                         : std::numeric_limits<double>::infinity());
  const double m = detail::median_of(values);
  if (std::isinf(m)) return std::nullopt;
  return m;
}

// Measured inputs for the convergence bound, making the two modules
// consistent: chi sums the initial suboptimality over all devices, delta^2
// is the exact per-device gradient noise variance, and G^2 is the largest
// squared stochastic gradient norm seen while replaying the training loop's
// local steps.
struct TaskCalibration {
  double chi = 0.0;
  double delta_sq = 0.0;
  double g_sq = 0.0;
};

inline TaskCalibration calibrate_bound_inputs(const ExperimentConfig& cfg,
                                              const SyntheticTask& task,
                                              int probe_rounds = 50) {
  require(probe_rounds >= 1, errc::invalid_argument, "probe_rounds must be >= 1");
  task.validate();
  TaskCalibration cal;
  const std::vector<double> w0(task.dimension, cfg.fl_init_value);
  for (int k = 0; k < task.device_count(); ++k) cal.chi += task.loss(k, w0);
  cal.delta_sq = task.noise_scale * task.noise_scale * task.dimension;

  FlRunConfig fc = cfg.fl_config(std::min(cfg.devices_k, std::max(1, cfg.forced_kse)));
  fc.rounds = probe_rounds;
  std::vector<double> w = w0;
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < probe_rounds; ++t) {
    auto select_rng = make_engine(fc.seed, stream::selection, 0, t);
    const auto participants =
        sample_without_replacement(fc.devices_k, fc.kse, select_rng);
    std::vector<std::vector<double>> models;
    std::vector<double> weights;
    for (int k : participants) {
      auto dev_rng = make_engine(fc.seed, stream::fl, k, t);
      std::vector<double> wk = w;
      for (int e = 0; e < fc.local_epochs_e; ++e) {
        const double eta =
            fc.lr.at(static_cast<long long>(t) * fc.local_epochs_e + e);
        double g_norm_sq = 0.0;
        for (int j = 0; j < task.dimension; ++j) {
          double g = wk[j] - task.anchors[k][j];
          if (task.noise_scale > 0.0) g += task.noise_scale * unit(dev_rng);
          g_norm_sq += g * g;
          wk[j] -= eta * g;
        }
        cal.g_sq = std::max(cal.g_sq, g_norm_sq);
      }
      wk = apply_distortion(wk, fc.kse, fc.compressor_loss, dev_rng);
      models.push_back(std::move(wk));
      weights.push_back(task.sample_counts[k]);
    }
    w = aggregate(models, weights);
  }
  return cal;
}

}  // namespace cafl

#endif  // CAFL_EXPERIMENT_HPP
