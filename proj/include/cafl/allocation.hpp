// Sub-channel assignment and per-round transmission time.
//
// An Assignment partitions all S sub-channels among the selected devices
// (disjoint sets, full cover, at least one channel each). t_comp is the
// round's total upload time: Z * sum_k 1 / (sum of device k's assigned
// rates). The coalition game starts from the equal-count split and
// moves/swaps single channels between devices, accepting strict
// improvements, until a full sweep changes nothing.
#ifndef CAFL_ALLOCATION_HPP
#define CAFL_ALLOCATION_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cafl/errors.hpp"
#include "cafl/radio.hpp"
#include "cafl/rng.hpp"

namespace cafl {

struct Assignment {
  std::vector<int> selected_devices;          // ascending device indices
  std::map<int, std::set<int>> channel_sets;  // device -> sub-channel set

  // Throws unless the three feasibility invariants hold for S sub-channels.
  void validate(int subchannels) const {
    require(!selected_devices.empty(), errc::infeasible_assignment, "no devices selected");
    std::vector<char> seen(subchannels, 0);
    int covered = 0;
    for (int dev : selected_devices) {
      auto it = channel_sets.find(dev);
      require(it != channel_sets.end() && !it->second.empty(),
              errc::infeasible_assignment,
              "device " + std::to_string(dev) + " holds no sub-channel");
      for (int s : it->second) {
        require(s >= 0 && s < subchannels, errc::infeasible_assignment,
                "sub-channel index out of range");
        require(!seen[s], errc::infeasible_assignment,
                "sub-channel " + std::to_string(s) + " assigned twice");
        seen[s] = 1;
        ++covered;
      }
    }
    require(covered == subchannels, errc::infeasible_assignment,
            "not all sub-channels are used");
    require(channel_sets.size() == selected_devices.size(), errc::infeasible_assignment,
            "channel sets for unselected devices");
  }
};

struct AllocationOutcome {
  Assignment assignment;
  double t_comp_seconds = 0.0;
  long long iterations = 0;      // full sweeps (or candidates enumerated)
  long long moves_accepted = 0;
};

namespace detail {

// Sum of a device's assigned rates, accumulated in ascending channel order so
// repeated evaluations are bit-identical.
inline double device_rate_sum(const RateTable& table, int device,
                              const std::set<int>& channels) {
  double sum = 0.0;
  for (int s : channels) sum += table.at(device, s);
  return sum;
}

inline double total_time(const std::vector<int>& devices,
                         const std::vector<double>& rate_sums, double z_bits) {
  double total = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) total += z_bits / rate_sums[i];
  return total;
}

}  // namespace detail

// Round upload time Z * sum_k 1 / (sum of assigned rates of k), seconds.
inline double t_comp(const Assignment& assignment, const RateTable& table,
                     double z_comp_bits) {
  require(z_comp_bits > 0.0, errc::invalid_argument, "Z must be positive");
  assignment.validate(table.subchannels);
  double total = 0.0;
  for (int dev : assignment.selected_devices) {
    require(dev >= 0 && dev < table.devices, errc::infeasible_assignment,
            "device index outside rate table");
    const double sum =
        detail::device_rate_sum(table, dev, assignment.channel_sets.at(dev));
    require(sum > 0.0, errc::zero_rate,
            "device " + std::to_string(dev) + " has zero summed rate");
    total += z_comp_bits / sum;
  }
  return total;
}

// Equal-count split ignoring channel conditions: channel i goes to the
// (i mod n)-th selected device, so set sizes differ by at most one.
inline Assignment fairness_assignment(const std::vector<int>& selected, int subchannels) {
  const int n = static_cast<int>(selected.size());
  require(n >= 1, errc::invalid_argument, "no devices selected");
  require(subchannels >= n, errc::too_few_channels,
          "fewer sub-channels than selected devices");
  Assignment a;
  a.selected_devices = selected;
  std::sort(a.selected_devices.begin(), a.selected_devices.end());
  for (int s = 0; s < subchannels; ++s)
    a.channel_sets[a.selected_devices[s % n]].insert(s);
  return a;
}

// Random feasible assignment: one distinct random channel per device, then
// the remaining channels spread uniformly.
inline Assignment initial_assignment(const std::vector<int>& selected, int subchannels,
                                     std::mt19937_64& rng) {
  const int n = static_cast<int>(selected.size());
  require(n >= 1, errc::invalid_argument, "no devices selected");
  require(subchannels >= n, errc::too_few_channels,
          "fewer sub-channels than selected devices");
  Assignment a;
  a.selected_devices = selected;
  std::sort(a.selected_devices.begin(), a.selected_devices.end());
  std::vector<int> channels(subchannels);
  for (int s = 0; s < subchannels; ++s) channels[s] = s;
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<int> pick(i, subchannels - 1);
    std::swap(channels[i], channels[pick(rng)]);
    a.channel_sets[a.selected_devices[i]].insert(channels[i]);
  }
  std::uniform_int_distribution<int> any_device(0, n - 1);
  for (int i = n; i < subchannels; ++i)
    a.channel_sets[a.selected_devices[any_device(rng)]].insert(channels[i]);
  return a;
}

// Coalition game over sub-channels, started from the equal-count split so
// the result can only improve on the fairness baseline. Sweeps channels in
// ascending order and, for each, every other selected device as a candidate
// taker: the channel moves to the taker, or is exchanged against a random
// channel of the taker when either side holds a single channel (keeping
// both nonempty); the rng drives only those random picks. A candidate is
// adopted only on a strict t_comp decrease; the game stops when a full
// sweep adopts nothing.
inline AllocationOutcome coalition_game(const RateTable& table,
                                        const std::vector<int>& selected,
                                        double z_comp_bits, std::mt19937_64& rng,
                                        long long sweep_cap = 10'000,
                                        std::vector<double>* accepted_trace = nullptr) {
  Assignment a = fairness_assignment(selected, table.subchannels);
  const std::vector<int>& devices = a.selected_devices;
  const int n = static_cast<int>(devices.size());
  const int s_count = table.subchannels;

  std::vector<int> device_slot(table.devices, -1);
  for (int i = 0; i < n; ++i) device_slot[devices[i]] = i;
  std::vector<int> owner_slot(s_count, -1);  // channel -> slot index
  std::vector<std::set<int>> sets(n);
  for (int i = 0; i < n; ++i) {
    sets[i] = a.channel_sets[devices[i]];
    for (int s : sets[i]) owner_slot[s] = i;
  }
  std::vector<double> rate_sums(n);
  for (int i = 0; i < n; ++i)
    rate_sums[i] = detail::device_rate_sum(table, devices[i], sets[i]);
  for (int i = 0; i < n; ++i)
    require(rate_sums[i] > 0.0, errc::zero_rate, "zero summed rate in initial assignment");

  double current = detail::total_time(devices, rate_sums, z_comp_bits);
  long long sweeps = 0;
  long long accepted = 0;

  bool changed = true;
  while (changed) {
    require(sweeps < sweep_cap, errc::iteration_cap_exceeded,
            "coalition game exceeded sweep cap");
    ++sweeps;
    changed = false;
    for (int s = 0; s < s_count; ++s) {
      for (int ki = 0; ki < n; ++ki) {
        const int ji = owner_slot[s];
        if (ki == ji) continue;
        const bool swap_rule = sets[ji].size() == 1 || sets[ki].size() == 1;
        int s_back = -1;
        std::set<int> cand_j = sets[ji];
        std::set<int> cand_k = sets[ki];
        if (swap_rule) {
          std::uniform_int_distribution<int> pick(0, static_cast<int>(sets[ki].size()) - 1);
          auto it = sets[ki].begin();
          std::advance(it, pick(rng));
          s_back = *it;
          cand_j.erase(s);
          cand_j.insert(s_back);
          cand_k.erase(s_back);
          cand_k.insert(s);
        } else {
          cand_j.erase(s);
          cand_k.insert(s);
        }
        const double new_sum_j = detail::device_rate_sum(table, devices[ji], cand_j);
        const double new_sum_k = detail::device_rate_sum(table, devices[ki], cand_k);
        if (new_sum_j <= 0.0 || new_sum_k <= 0.0) continue;
        const double saved_j = rate_sums[ji];
        const double saved_k = rate_sums[ki];
        rate_sums[ji] = new_sum_j;
        rate_sums[ki] = new_sum_k;
        const double candidate = detail::total_time(devices, rate_sums, z_comp_bits);
        if (candidate < current) {
          sets[ji].swap(cand_j);
          sets[ki].swap(cand_k);
          owner_slot[s] = ki;
          if (s_back >= 0) owner_slot[s_back] = ji;
          current = candidate;
          ++accepted;
          changed = true;
          if (accepted_trace) accepted_trace->push_back(candidate);
        } else {
          rate_sums[ji] = saved_j;
          rate_sums[ki] = saved_k;
        }
      }
    }
  }

  for (int i = 0; i < n; ++i) a.channel_sets[devices[i]] = sets[i];
  AllocationOutcome out;
  out.assignment = a;
  out.t_comp_seconds = t_comp(a, table, z_comp_bits);
  out.iterations = sweeps;
  out.moves_accepted = accepted;
  return out;
}

namespace detail {

// Number of onto maps from S labeled channels to n labeled devices
// (inclusion-exclusion); saturates at cap+1.
inline long long surjection_count(int subchannels, int n, long long cap) {
  double total = 0.0;
  for (int i = 0; i <= n; ++i) {
    double term = 1.0;
    for (int j = 0; j < i; ++j) term *= static_cast<double>(n - j) / (j + 1);
    term *= std::pow(static_cast<double>(n - i), subchannels);
    total += (i % 2 == 0) ? term : -term;
  }
  if (total > static_cast<double>(cap)) return cap + 1;
  return static_cast<long long>(total + 0.5);
}

}  // namespace detail

// Reference optimum by enumerating every onto assignment of the S channels
// to the selected devices. Guarded for small instances only.
inline AllocationOutcome exhaustive_optimum(const RateTable& table,
                                            const std::vector<int>& selected,
                                            double z_comp_bits,
                                            long long partition_cap = 1'000'000LL) {
  const int n = static_cast<int>(selected.size());
  require(n >= 1, errc::invalid_argument, "no devices selected");
  const int s_count = table.subchannels;
  require(s_count >= n, errc::too_few_channels,
          "fewer sub-channels than selected devices");
  require(detail::surjection_count(s_count, n, partition_cap) <= partition_cap,
          errc::instance_too_large, "too many feasible partitions to enumerate");

  std::vector<int> devices = selected;
  std::sort(devices.begin(), devices.end());
  std::vector<int> assign(s_count, -1);  // channel -> slot
  std::vector<int> best_assign;
  double best_time = 0.0;
  long long evaluated = 0;
  std::vector<double> sums(n, 0.0);
  std::vector<int> loads(n, 0);
  int empties = n;

  // Depth-first over channel -> device maps, pruned so only onto maps reach
  // the leaves. Sums are saved and restored (not subtracted) to keep the
  // accumulation order canonical: ascending channels within each device.
  auto descend = [&](auto&& self, int s) -> void {
    if (s == s_count) {
      ++evaluated;
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        if (sums[i] <= 0.0) return;
        total += z_comp_bits / sums[i];
      }
      if (best_assign.empty() || total < best_time) {
        best_time = total;
        best_assign = assign;
      }
      return;
    }
    for (int i = 0; i < n; ++i) {
      const bool was_empty = loads[i] == 0;
      if (s_count - s - 1 < empties - (was_empty ? 1 : 0)) continue;
      const double saved = sums[i];
      sums[i] += table.at(devices[i], s);
      ++loads[i];
      if (was_empty) --empties;
      assign[s] = i;
      self(self, s + 1);
      assign[s] = -1;
      if (was_empty) ++empties;
      --loads[i];
      sums[i] = saved;
    }
  };
  descend(descend, 0);
  require(!best_assign.empty(), errc::zero_rate, "no feasible partition with positive rates");

  AllocationOutcome out;
  out.assignment.selected_devices = devices;
  for (int s = 0; s < s_count; ++s)
    out.assignment.channel_sets[devices[best_assign[s]]].insert(s);
  out.t_comp_seconds = t_comp(out.assignment, table, z_comp_bits);
  out.iterations = evaluated;
  out.moves_accepted = 0;
  return out;
}

}  // namespace cafl

#endif  // CAFL_ALLOCATION_HPP
