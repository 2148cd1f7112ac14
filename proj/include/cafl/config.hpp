// Scenario configuration: a small INI dialect (key = value lines grouped
// under [section] headers, '#'/';' comments) flattened to "section.key"
// entries. CLI flags overwrite individual entries before the typed config is
// built. Unknown keys are rejected so typos fail loudly.
#ifndef CAFL_CONFIG_HPP
#define CAFL_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cafl/bound.hpp"
#include "cafl/csv.hpp"
#include "cafl/errors.hpp"
#include "cafl/flsim.hpp"
#include "cafl/radio.hpp"

namespace cafl {

enum class alloc_method { coalition, fairness, exhaustive };
enum class sweep_axis_kind { none, subchannels, kse };

inline const char* method_name(alloc_method m) {
  switch (m) {
    case alloc_method::coalition: return "coalition";
    case alloc_method::fairness: return "fairness";
    case alloc_method::exhaustive: return "exhaustive";
  }
  return "?";
}

inline alloc_method parse_method(const std::string& name) {
  if (name == "coalition") return alloc_method::coalition;
  if (name == "fairness") return alloc_method::fairness;
  if (name == "exhaustive") return alloc_method::exhaustive;
  fail(errc::config_error, "unknown allocation method '" + name + "'");
}

inline const char* axis_name(sweep_axis_kind a) {
  switch (a) {
    case sweep_axis_kind::none: return "none";
    case sweep_axis_kind::subchannels: return "subchannels";
    case sweep_axis_kind::kse: return "kse";
  }
  return "?";
}

inline sweep_axis_kind parse_axis(const std::string& name) {
  if (name == "none") return sweep_axis_kind::none;
  if (name == "subchannels") return sweep_axis_kind::subchannels;
  if (name == "kse") return sweep_axis_kind::kse;
  fail(errc::config_error, "unknown sweep axis '" + name + "'");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

struct ConfigMap {
  std::map<std::string, std::string> values;

  static ConfigMap from_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::config_error, "cannot open config file '" + path + "'");
    ConfigMap map;
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        require(line.back() == ']', errc::config_error,
                path + ":" + std::to_string(line_no) + ": malformed section header");
        section = detail::trim(line.substr(1, line.size() - 2));
        require(!section.empty(), errc::config_error,
                path + ":" + std::to_string(line_no) + ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      require(eq != std::string::npos, errc::config_error,
              path + ":" + std::to_string(line_no) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      require(!key.empty(), errc::config_error,
              path + ":" + std::to_string(line_no) + ": empty key");
      map.values[section.empty() ? key : section + "." + key] = value;
    }
    return map;
  }

  void set(const std::string& key, const std::string& value) { values[key] = value; }
  bool has(const std::string& key) const { return values.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      return csv::to_double(it->second);
    } catch (const error&) {
      fail(errc::config_error, "key '" + key + "': bad number '" + it->second + "'");
    }
  }

  long long get_int(const std::string& key, long long fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      return csv::to_int(it->second);
    } catch (const error&) {
      fail(errc::config_error, "key '" + key + "': bad integer '" + it->second + "'");
    }
  }

  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    std::vector<double> out;
    for (const auto& part : csv::split(it->second, ',')) {
      const std::string item = detail::trim(part);
      require(!item.empty(), errc::config_error, "key '" + key + "': empty list item");
      try {
        out.push_back(csv::to_double(item));
      } catch (const error&) {
        fail(errc::config_error, "key '" + key + "': bad number '" + item + "'");
      }
    }
    return out;
  }
};

struct ExperimentConfig {
  std::string scenario = "base";
  std::uint64_t master_seed = 1;
  int trials = 1000;
  int devices_k = 100;
  int subchannels = 20;
  double cell_radius_m = 200.0;
  double z_comp_bits = 1e6;
  int workers = 1;

  LinkBudget link;

  double smoothness_l = 1.0;
  double strong_convexity_mu = 1.0;
  double grad_bound_g = 0.5;
  std::vector<double> grad_variance_delta{0.5};  // broadcast when size 1
  int local_epochs = 1;
  double heterogeneity_chi = 2.0;
  double compressor_loss = 1.5;
  double epsilon = 0.25;
  delta_aggregation delta_mode = delta_aggregation::mean_over_all;

  int fl_dimension = 10;
  double fl_noise_scale = 0.05;
  int fl_rounds = 500;
  double fl_init_value = 8.0;
  double fl_distance_threshold = 0.2;
  bool fl_theorem_lr = true;
  double fl_constant_lr = 0.1;

  alloc_method method = alloc_method::coalition;
  sweep_axis_kind sweep_axis = sweep_axis_kind::none;
  std::vector<double> sweep_values;
  int forced_kse = 0;        // 0: use the bound's optimal kse
  long long forced_rounds = 0;  // 0: use r_min of the chosen kse
  long long game_sweep_cap = 10'000;

  FlBoundParams bound_params() const {
    FlBoundParams p;
    p.smoothness_l = smoothness_l;
    p.strong_convexity_mu = strong_convexity_mu;
    p.grad_bound_g = grad_bound_g;
    p.grad_variance_delta = grad_variance_delta;
    if (p.grad_variance_delta.size() == 1)
      p.grad_variance_delta.assign(devices_k, grad_variance_delta.front());
    p.local_epochs_e = local_epochs;
    p.heterogeneity_chi = heterogeneity_chi;
    p.compressor_loss = compressor_loss;
    p.epsilon = epsilon;
    p.total_devices_k = devices_k;
    p.delta_mode = delta_mode;
    return p;
  }

  FlRunConfig fl_config(int kse) const {
    FlRunConfig fc;
    fc.devices_k = devices_k;
    fc.kse = kse;
    fc.local_epochs_e = local_epochs;
    fc.rounds = fl_rounds;
    fc.seed = master_seed;
    fc.compressor_loss = compressor_loss;
    fc.lr = fl_theorem_lr ? LrSchedule::theorem(bound_params())
                          : LrSchedule::constant(fl_constant_lr);
    fc.distance_threshold = fl_distance_threshold;
    fc.init_value = fl_init_value;
    return fc;
  }

  void validate() const {
    require(trials >= 1, errc::config_error, "trials must be >= 1");
    require(devices_k >= 1, errc::config_error, "devices must be >= 1");
    require(subchannels >= 1, errc::config_error, "subchannels must be >= 1");
    require(cell_radius_m > 0.0, errc::config_error, "cell radius must be positive");
    require(z_comp_bits > 0.0, errc::config_error, "z_comp_bits must be positive");
    require(workers >= 1, errc::config_error, "workers must be >= 1");
    require(forced_kse >= 0 && forced_kse <= devices_k, errc::config_error,
            "forced_kse must lie in [0, devices]");
    require(forced_rounds >= 0, errc::config_error, "forced_rounds must be >= 0");
    require(game_sweep_cap >= 1, errc::config_error, "game_sweep_cap must be >= 1");
    require(sweep_axis == sweep_axis_kind::none || !sweep_values.empty(),
            errc::config_error, "sweep requested but sweep_values is empty");
    try {
      bound_params().validate();
    } catch (const error& e) {
      fail(errc::config_error, std::string("bound parameters: ") + e.what());
    }
    require(fl_dimension >= 1, errc::config_error, "fl dimension must be >= 1");
    require(fl_noise_scale >= 0.0, errc::config_error, "fl noise_scale must be >= 0");
    require(fl_rounds >= 1, errc::config_error, "fl rounds must be >= 1");
    require(fl_distance_threshold > 0.0, errc::config_error,
            "fl distance_threshold must be positive");
    if (!fl_theorem_lr)
      require(fl_constant_lr > 0.0, errc::config_error, "fl lr_value must be positive");
  }

  static ExperimentConfig from_map(const ConfigMap& map);
};

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "system.scenario", "system.seed", "system.trials", "system.devices",
      "system.subchannels", "system.cell_radius_m", "system.z_comp_bits",
      "system.workers",
      "radio.tx_power_dbm", "radio.bandwidth_hz", "radio.noise_psd_dbm_hz",
      "radio.pathloss_ref_db", "radio.pathloss_slope_db_per_decade",
      "radio.pathloss_ref_distance_m", "radio.pathloss_min_distance_m",
      "radio.fading",
      "bound.smoothness_l", "bound.strong_convexity_mu", "bound.grad_bound_g",
      "bound.grad_variance_delta", "bound.local_epochs", "bound.heterogeneity_chi",
      "bound.compressor_loss", "bound.epsilon", "bound.delta_mode",
      "fl.dimension", "fl.noise_scale", "fl.rounds", "fl.init_value",
      "fl.distance_threshold", "fl.lr", "fl.lr_value",
      "experiment.method", "experiment.sweep", "experiment.sweep_values",
      "experiment.forced_kse", "experiment.forced_rounds",
      "experiment.game_sweep_cap"};
  return keys;
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
  for (const auto& [key, value] : map.values)
    require(detail::known_config_keys().count(key) != 0, errc::config_error,
            "unknown config key '" + key + "'");

  ExperimentConfig c;
  c.scenario = map.get_string("system.scenario", c.scenario);
  c.master_seed = static_cast<std::uint64_t>(
      map.get_int("system.seed", static_cast<long long>(c.master_seed)));
  c.trials = static_cast<int>(map.get_int("system.trials", c.trials));
  c.devices_k = static_cast<int>(map.get_int("system.devices", c.devices_k));
  c.subchannels = static_cast<int>(map.get_int("system.subchannels", c.subchannels));
  c.cell_radius_m = map.get_double("system.cell_radius_m", c.cell_radius_m);
  c.z_comp_bits = map.get_double("system.z_comp_bits", c.z_comp_bits);
  c.workers = static_cast<int>(map.get_int("system.workers", c.workers));

  c.link.tx_power_dbm = map.get_double("radio.tx_power_dbm", c.link.tx_power_dbm);
  c.link.subchannel_bandwidth_hz =
      map.get_double("radio.bandwidth_hz", c.link.subchannel_bandwidth_hz);
  c.link.noise_psd_dbm_hz =
      map.get_double("radio.noise_psd_dbm_hz", c.link.noise_psd_dbm_hz);
  c.link.pathloss.ref_db = map.get_double("radio.pathloss_ref_db", c.link.pathloss.ref_db);
  c.link.pathloss.slope_db_per_decade = map.get_double(
      "radio.pathloss_slope_db_per_decade", c.link.pathloss.slope_db_per_decade);
  c.link.pathloss.ref_distance_m =
      map.get_double("radio.pathloss_ref_distance_m", c.link.pathloss.ref_distance_m);
  c.link.pathloss.min_distance_m =
      map.get_double("radio.pathloss_min_distance_m", c.link.pathloss.min_distance_m);
  const std::string fading = map.get_string("radio.fading", "rayleigh");
  if (fading == "rayleigh") {
    c.link.fading = fading_model::rayleigh;
  } else if (fading == "none") {
    c.link.fading = fading_model::none;
  } else {
    fail(errc::config_error, "unknown fading model '" + fading + "'");
  }

  c.smoothness_l = map.get_double("bound.smoothness_l", c.smoothness_l);
  c.strong_convexity_mu =
      map.get_double("bound.strong_convexity_mu", c.strong_convexity_mu);
  c.grad_bound_g = map.get_double("bound.grad_bound_g", c.grad_bound_g);
  c.grad_variance_delta =
      map.get_list("bound.grad_variance_delta", c.grad_variance_delta);
  c.local_epochs = static_cast<int>(map.get_int("bound.local_epochs", c.local_epochs));
  c.heterogeneity_chi =
      map.get_double("bound.heterogeneity_chi", c.heterogeneity_chi);
  c.compressor_loss = map.get_double("bound.compressor_loss", c.compressor_loss);
  c.epsilon = map.get_double("bound.epsilon", c.epsilon);
  const std::string mode = map.get_string("bound.delta_mode", "mean");
  if (mode == "mean") {
    c.delta_mode = delta_aggregation::mean_over_all;
  } else if (mode == "first_kse") {
    c.delta_mode = delta_aggregation::first_kse;
  } else {
    fail(errc::config_error, "unknown delta_mode '" + mode + "'");
  }

  c.fl_dimension = static_cast<int>(map.get_int("fl.dimension", c.fl_dimension));
  c.fl_noise_scale = map.get_double("fl.noise_scale", c.fl_noise_scale);
  c.fl_rounds = static_cast<int>(map.get_int("fl.rounds", c.fl_rounds));
  c.fl_init_value = map.get_double("fl.init_value", c.fl_init_value);
  c.fl_distance_threshold =
      map.get_double("fl.distance_threshold", c.fl_distance_threshold);
  const std::string lr = map.get_string("fl.lr", "theorem");
  if (lr == "theorem") {
    c.fl_theorem_lr = true;
  } else if (lr == "constant") {
    c.fl_theorem_lr = false;
  } else {
    fail(errc::config_error, "unknown fl lr source '" + lr + "'");
  }
  c.fl_constant_lr = map.get_double("fl.lr_value", c.fl_constant_lr);

  c.method = parse_method(map.get_string("experiment.method", "coalition"));
  c.sweep_axis = parse_axis(map.get_string("experiment.sweep", "none"));
  c.sweep_values = map.get_list("experiment.sweep_values", {});
  c.forced_kse = static_cast<int>(map.get_int("experiment.forced_kse", c.forced_kse));
  c.forced_rounds = map.get_int("experiment.forced_rounds", c.forced_rounds);
  c.game_sweep_cap = map.get_int("experiment.game_sweep_cap", c.game_sweep_cap);

  c.validate();
  return c;
}

}  // namespace cafl

#endif  // CAFL_CONFIG_HPP
