// Uplink radio model: disc topology, log-distance path loss with optional
// Rayleigh block fading, and the per-round achievable-rate table
// c[k][s] = B log2(1 + P |h|^2 / (B N0)).
#ifndef CAFL_RADIO_HPP
#define CAFL_RADIO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cafl/errors.hpp"
#include "cafl/rng.hpp"

namespace cafl {

struct Point2d {
  double x = 0.0;
  double y = 0.0;
  double norm() const { return std::hypot(x, y); }
};

struct Topology {
  double cell_radius_m = 200.0;
  std::vector<Point2d> device_positions;  // base station at the origin
  int device_count() const { return static_cast<int>(device_positions.size()); }
};

enum class fading_model { rayleigh, none };

struct PathlossModel {
  // PL(d) = ref_db + slope_db_per_decade * log10(d / ref_distance_m), d in m.
  double ref_db = 128.1;
  double slope_db_per_decade = 37.6;
  double ref_distance_m = 1000.0;
  double min_distance_m = 1.0;  // floor avoids the singularity at the origin
};

struct LinkBudget {
  double tx_power_dbm = 23.0;
  double subchannel_bandwidth_hz = 180e3;
  double noise_psd_dbm_hz = -174.0;
  PathlossModel pathloss;
  fading_model fading = fading_model::rayleigh;
};

// K x S matrix of achievable rates in bit/s for one communication round.
struct RateTable {
  int round = 0;
  int devices = 0;
  int subchannels = 0;
  std::vector<double> rates;  // row-major, device major

  double at(int device, int subchannel) const {
    return rates[static_cast<std::size_t>(device) * subchannels + subchannel];
  }
  double& at(int device, int subchannel) {
    return rates[static_cast<std::size_t>(device) * subchannels + subchannel];
  }
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

// K positions uniform on the disc of the given radius.
inline Topology sample_topology(std::uint64_t seed, int devices, double radius_m) {
  require(devices >= 1, errc::invalid_argument, "need at least one device");
  require(radius_m > 0.0, errc::invalid_argument, "cell radius must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Topology topo;
  topo.cell_radius_m = radius_m;
  topo.device_positions.reserve(devices);
  for (int k = 0; k < devices; ++k) {
    const double r = radius_m * std::sqrt(unit(rng));
    const double theta = 2.0 * M_PI * unit(rng);
    topo.device_positions.push_back({r * std::cos(theta), r * std::sin(theta)});
  }
  return topo;
}

inline double pathloss_db(const PathlossModel& m, double distance_m) {
  const double d = std::max(distance_m, m.min_distance_m);
  return m.ref_db + m.slope_db_per_decade * std::log10(d / m.ref_distance_m);
}

// Dimensionless power gain |h|^2 for one (device, sub-channel) link. The
// sub-channel index only labels the draw: fading is i.i.d. across it.
inline double channel_gain(const Topology& topo, const LinkBudget& lb, int device,
                           int subchannel, std::mt19937_64& rng) {
  require(device >= 0 && device < topo.device_count(), errc::invalid_argument,
          "device index out of range");
  require(subchannel >= 0, errc::invalid_argument, "sub-channel index out of range");
  const double d = topo.device_positions[device].norm();
  const double pl = std::pow(10.0, -pathloss_db(lb.pathloss, d) / 10.0);
  if (lb.fading == fading_model::none) return pl;
  std::exponential_distribution<double> rayleigh_power(1.0);  // unit mean
  return pl * rayleigh_power(rng);
}

// Shannon rate for a given power gain, in bit/s.
inline double rate(const LinkBudget& lb, double gain) {
  require(gain >= 0.0, errc::invalid_argument, "gain must be nonnegative");
  const double b = lb.subchannel_bandwidth_hz;
  const double noise_w = dbm_to_watts(lb.noise_psd_dbm_hz) * b;
  const double snr = dbm_to_watts(lb.tx_power_dbm) * gain / noise_w;
  return b * std::log2(1.0 + snr);
}

// Rate table for one round; fading is drawn independently per (device,
// sub-channel) in fixed device-major order, so a seed pins the table.
inline RateTable rate_table(const Topology& topo, const LinkBudget& lb, int subchannels,
                            int round, std::mt19937_64& rng) {
  require(subchannels >= 1, errc::invalid_argument, "need at least one sub-channel");
  RateTable table;
  table.round = round;
  table.devices = topo.device_count();
  table.subchannels = subchannels;
  table.rates.resize(static_cast<std::size_t>(table.devices) * subchannels);
  for (int k = 0; k < table.devices; ++k) {
    for (int s = 0; s < subchannels; ++s) {
      const double c = rate(lb, channel_gain(topo, lb, k, s, rng));
      require(c > 0.0, errc::zero_rate,
              "rate underflowed to zero for device " + std::to_string(k) +
                  " on sub-channel " + std::to_string(s));
      table.at(k, s) = c;
    }
  }
  return table;
}

}  // namespace cafl

#endif  // CAFL_RADIO_HPP
