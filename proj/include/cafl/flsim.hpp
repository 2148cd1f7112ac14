// Toy federated training loop on synthetic quadratic tasks.
//
// Each device k owns f_k(w) = 0.5 * ||w - b_k||^2, so L = mu = 1 and the
// global optimum is the sample-count weighted mean of the anchors. Uploads
// are perturbed with zero-mean Gaussian noise of per-entry deviation
// sigma = sqrt(2 * loss) / K^SE, the statistical model of the compression
// residual. The recorded loss is the 1/K average over that round's
// participants.
#ifndef CAFL_FLSIM_HPP
#define CAFL_FLSIM_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cafl/bound.hpp"
#include "cafl/errors.hpp"
#include "cafl/rng.hpp"

namespace cafl {

struct SyntheticTask {
  int dimension = 0;
  std::vector<std::vector<double>> anchors;  // one d-vector per device
  double noise_scale = 0.0;                  // stochastic gradient deviation
  std::vector<double> sample_counts;         // D_k, positive
  std::vector<double> w_star;                // weighted mean of anchors

  int device_count() const { return static_cast<int>(anchors.size()); }

  void validate() const {
    require(dimension >= 1, errc::invalid_argument, "dimension must be >= 1");
    require(!anchors.empty(), errc::invalid_argument, "task has no devices");
    require(sample_counts.size() == anchors.size(), errc::invalid_argument,
            "one sample count per device required");
    for (const auto& b : anchors)
      require(static_cast<int>(b.size()) == dimension, errc::invalid_argument,
              "anchor dimension mismatch");
    for (double d : sample_counts)
      require(d > 0.0, errc::invalid_argument, "sample counts must be positive");
    require(noise_scale >= 0.0, errc::invalid_argument, "noise scale must be >= 0");
    require(static_cast<int>(w_star.size()) == dimension, errc::invalid_argument,
            "w_star dimension mismatch");
  }

  double loss(int device, const std::vector<double>& w) const {
    const auto& b = anchors[device];
    double sq = 0.0;
    for (int j = 0; j < dimension; ++j) {
      const double diff = w[j] - b[j];
      sq += diff * diff;
    }
    return 0.5 * sq;
  }
};

// Anchors are unit Gaussian draws; sample counts default to 1 per device.
inline SyntheticTask make_synthetic_task(std::uint64_t master_seed, int devices,
                                         int dimension, double noise_scale) {
  require(devices >= 1, errc::invalid_argument, "devices must be >= 1");
  require(dimension >= 1, errc::invalid_argument, "dimension must be >= 1");
  SyntheticTask task;
  task.dimension = dimension;
  task.noise_scale = noise_scale;
  task.sample_counts.assign(devices, 1.0);
  auto rng = make_engine(master_seed, stream::task);
  std::normal_distribution<double> unit(0.0, 1.0);
  task.anchors.resize(devices);
  for (auto& b : task.anchors) {
    b.resize(dimension);
    for (double& x : b) x = unit(rng);
  }
  task.w_star.assign(dimension, 0.0);
  double total = 0.0;
  for (int k = 0; k < devices; ++k) {
    for (int j = 0; j < dimension; ++j)
      task.w_star[j] += task.sample_counts[k] * task.anchors[k][j];
    total += task.sample_counts[k];
  }
  for (double& x : task.w_star) x /= total;
  task.validate();
  return task;
}

// Step-size source: either the bound's diminishing schedule
// (E+1) / (E * mu * (a + t)) indexed by the global SGD step t, or a constant.
struct LrSchedule {
  enum class kind_t { theorem, constant };
  kind_t kind = kind_t::constant;
  double epochs_e = 1.0;
  double mu = 1.0;
  double a = 8.0;
  double value = 0.1;

  static LrSchedule theorem(const FlBoundParams& p) {
    p.validate();
    LrSchedule s;
    s.kind = kind_t::theorem;
    s.epochs_e = static_cast<double>(p.local_epochs_e);
    s.mu = p.strong_convexity_mu;
    s.a = p.a();
    return s;
  }

  static LrSchedule constant(double v) {
    require(v > 0.0, errc::invalid_argument, "constant step size must be positive");
    LrSchedule s;
    s.kind = kind_t::constant;
    s.value = v;
    return s;
  }

  double at(long long step) const {
    if (kind == kind_t::constant) return value;
    require(step >= 0, errc::invalid_argument, "step must be >= 0");
    return (epochs_e + 1.0) / (epochs_e * mu * (a + static_cast<double>(step)));
  }
};

struct FlRunConfig {
  int devices_k = 100;
  int kse = 10;
  int local_epochs_e = 1;
  int rounds = 500;
  std::uint64_t seed = 1;
  double compressor_loss = 1.5;
  LrSchedule lr;
  double distance_threshold = 0.2;
  double init_value = 8.0;  // w_g^0 = init_value * ones

  void validate() const {
    require(devices_k >= 1, errc::invalid_argument, "K must be >= 1");
    require(kse >= 1 && kse <= devices_k, errc::invalid_argument,
            "K^SE must satisfy 1 <= K^SE <= K");
    require(local_epochs_e >= 1, errc::invalid_argument, "E must be >= 1");
    require(rounds >= 1, errc::invalid_argument, "rounds must be >= 1");
    require(compressor_loss >= 0.0, errc::invalid_argument,
            "compressor loss must be >= 0");
    require(distance_threshold > 0.0, errc::invalid_argument,
            "distance threshold must be positive");
  }
};

struct Trajectory {
  std::vector<double> distance;     // ||w_g^t - w*|| per round
  std::vector<double> global_loss;  // (1/K) * sum over participants of f_k
};

// E stochastic gradient steps on f_k from w_init; step i uses the schedule
// at global step step_base + i. Gradient noise is skipped entirely when the
// task is noiseless so zero-noise paths stay exact.
inline std::vector<double> local_update(const std::vector<double>& w_init,
                                        const SyntheticTask& task, int device,
                                        int epochs, const LrSchedule& sched,
                                        long long step_base, std::mt19937_64& rng) {
  require(epochs >= 1, errc::invalid_argument, "epochs must be >= 1");
  require(device >= 0 && device < task.device_count(), errc::invalid_argument,
          "device index out of range");
  require(static_cast<int>(w_init.size()) == task.dimension, errc::invalid_argument,
          "model dimension mismatch");
  std::vector<double> w = w_init;
  const auto& b = task.anchors[device];
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < epochs; ++i) {
    const double eta = sched.at(step_base + i);
    for (int j = 0; j < task.dimension; ++j) {
      double g = w[j] - b[j];
      if (task.noise_scale > 0.0) g += task.noise_scale * unit(rng);
      w[j] -= eta * g;
    }
  }
  return w;
}

// Upload perturbation: w + n with n_j ~ N(0, sigma^2), sigma = sqrt(2L)/kse.
inline std::vector<double> apply_distortion(const std::vector<double>& w, int kse,
                                            double compressor_loss,
                                            std::mt19937_64& rng) {
  require(kse >= 1, errc::invalid_argument, "kse must be >= 1");
  require(compressor_loss >= 0.0, errc::invalid_argument,
          "compressor loss must be >= 0");
  const double sigma = std::sqrt(2.0 * compressor_loss) / static_cast<double>(kse);
  if (sigma == 0.0) return w;
  std::vector<double> out = w;
  std::normal_distribution<double> unit(0.0, 1.0);
  for (double& x : out) x += sigma * unit(rng);
  return out;
}

// Convex combination of the participants' models, weights normalized over
// the participants only.
inline std::vector<double> aggregate(const std::vector<std::vector<double>>& models,
                                     const std::vector<double>& weights) {
  require(!models.empty(), errc::empty_participant_set, "no models to aggregate");
  require(models.size() == weights.size(), errc::invalid_argument,
          "one weight per model required");
  const std::size_t d = models.front().size();
  double total = 0.0;
  for (double w : weights) {
    require(w > 0.0, errc::invalid_argument, "weights must be positive");
    total += w;
  }
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < models.size(); ++i) {
    require(models[i].size() == d, errc::invalid_argument, "model dimension mismatch");
    for (std::size_t j = 0; j < d; ++j) out[j] += weights[i] * models[i][j];
  }
  for (double& x : out) x /= total;
  return out;
}

// One full training run. Per round: uniform participant draw, local updates
// from the shared global model, per-upload distortion, weighted aggregation.
// Every random stream is derived from (seed, purpose, device, round), so the
// trajectory is bit-identical for a fixed (seed, config, task).
inline Trajectory run_fl(const FlRunConfig& config, const SyntheticTask& task) {
  config.validate();
  task.validate();
  require(task.device_count() == config.devices_k, errc::invalid_argument,
          "task device count must match config");

  std::vector<double> w(task.dimension, config.init_value);
  Trajectory traj;
  traj.distance.reserve(config.rounds);
  traj.global_loss.reserve(config.rounds);

  std::vector<std::vector<double>> models(config.kse);
  std::vector<double> weights(config.kse);
  for (int t = 0; t < config.rounds; ++t) {
    auto select_rng = make_engine(config.seed, stream::selection, 0, t);
    const std::vector<int> participants =
        sample_without_replacement(config.devices_k, config.kse, select_rng);
    const long long step_base =
        static_cast<long long>(t) * config.local_epochs_e;
    for (int i = 0; i < config.kse; ++i) {
      const int k = participants[i];
      auto dev_rng = make_engine(config.seed, stream::fl, k, t);
      models[i] = local_update(w, task, k, config.local_epochs_e, config.lr,
                               step_base, dev_rng);
      models[i] = apply_distortion(models[i], config.kse, config.compressor_loss,
                                   dev_rng);
      weights[i] = task.sample_counts[k];
    }
    w = aggregate(models, weights);

    double sq = 0.0;
    for (int j = 0; j < task.dimension; ++j) {
      const double diff = w[j] - task.w_star[j];
      sq += diff * diff;
    }
    traj.distance.push_back(std::sqrt(sq));
    double masked = 0.0;
    for (int k : participants) masked += task.loss(k, w);
    traj.global_loss.push_back(masked / static_cast<double>(config.devices_k));
  }
  return traj;
}

// First round index from which the distance stays below the threshold for
// `debounce` consecutive rounds; nullopt when no such window exists.
inline std::optional<int> rounds_to_accuracy(const Trajectory& traj, double threshold,
                                             int debounce = 10) {
  require(threshold > 0.0, errc::invalid_argument, "threshold must be positive");
  require(debounce >= 1, errc::invalid_argument, "debounce must be >= 1");
  const int n = static_cast<int>(traj.distance.size());
  int start = -1;
  for (int t = 0; t < n; ++t) {
    if (traj.distance[t] < threshold) {
      if (start < 0) start = t;
      if (t - start + 1 >= debounce) return start;
    } else {
      start = -1;
    }
  }
  return std::nullopt;
}

}  // namespace cafl

#endif  // CAFL_FLSIM_HPP
