// CSV plumbing. Floating values are printed with 9 significant digits
// (%.9g); writing a file, parsing it back, and writing again is
// byte-identical. No quoting: fields never contain commas, and device lists
// inside one field are pipe-separated.
#ifndef CAFL_CSV_HPP
#define CAFL_CSV_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cafl/allocation.hpp"
#include "cafl/errors.hpp"
#include "cafl/flsim.hpp"
#include "cafl/radio.hpp"

namespace cafl::csv {

inline std::string format(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double to_double(const std::string& field) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &used);
  } catch (const std::exception&) {
    fail(errc::io_error, "bad numeric field '" + field + "'");
  }
  require(used == field.size(), errc::io_error, "bad numeric field '" + field + "'");
  return value;
}

inline long long to_int(const std::string& field) {
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(field, &used);
  } catch (const std::exception&) {
    fail(errc::io_error, "bad integer field '" + field + "'");
  }
  require(used == field.size(), errc::io_error, "bad integer field '" + field + "'");
  return value;
}

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::io_error, "cannot open '" + path + "' for writing");
  for (const auto& line : lines) out << line << '\n';
  out.flush();
  require(out.good(), errc::io_error, "write failed on '" + path + "'");
}

// Returns all nonempty lines; first line is the header.
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io_error, "cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline void expect_header(const std::vector<std::string>& lines, const std::string& header,
                          const std::string& path) {
  require(!lines.empty() && lines.front() == header, errc::io_error,
          "'" + path + "' does not start with header '" + header + "'");
}

inline constexpr const char* trajectory_header = "round,distance,global_loss";

inline std::vector<std::string> trajectory_lines(const Trajectory& traj) {
  std::vector<std::string> lines{trajectory_header};
  for (std::size_t t = 0; t < traj.distance.size(); ++t)
    lines.push_back(std::to_string(t) + "," + format(traj.distance[t]) + "," +
                    format(traj.global_loss[t]));
  return lines;
}

inline void write_trajectory(const std::string& path, const Trajectory& traj) {
  write_lines(path, trajectory_lines(traj));
}

inline Trajectory parse_trajectory(const std::string& path) {
  const auto lines = read_lines(path);
  expect_header(lines, trajectory_header, path);
  Trajectory traj;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    require(fields.size() == 3, errc::io_error, "bad trajectory row in '" + path + "'");
    require(to_int(fields[0]) == static_cast<long long>(i - 1), errc::io_error,
            "non-contiguous round index in '" + path + "'");
    traj.distance.push_back(to_double(fields[1]));
    traj.global_loss.push_back(to_double(fields[2]));
  }
  return traj;
}

inline constexpr const char* rates_header = "device,subchannel,rate_bps";

inline std::vector<std::string> rates_lines(const RateTable& table) {
  std::vector<std::string> lines{rates_header};
  for (int k = 0; k < table.devices; ++k)
    for (int s = 0; s < table.subchannels; ++s)
      lines.push_back(std::to_string(k) + "," + std::to_string(s) + "," +
                      format(table.at(k, s)));
  return lines;
}

inline void write_rates(const std::string& path, const RateTable& table) {
  write_lines(path, rates_lines(table));
}

inline RateTable parse_rates(const std::string& path) {
  const auto lines = read_lines(path);
  expect_header(lines, rates_header, path);
  int devices = 0;
  int subchannels = 0;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    require(fields.size() == 3, errc::io_error, "bad rate row in '" + path + "'");
    const int k = static_cast<int>(to_int(fields[0]));
    const int s = static_cast<int>(to_int(fields[1]));
    require(k >= 0 && s >= 0, errc::io_error, "negative index in '" + path + "'");
    devices = std::max(devices, k + 1);
    subchannels = std::max(subchannels, s + 1);
    if (static_cast<int>(rows.size()) < devices) rows.resize(devices);
    if (static_cast<int>(rows[k].size()) < s + 1) rows[k].resize(s + 1, -1.0);
    rows[k][s] = to_double(fields[2]);
  }
  RateTable table;
  table.devices = devices;
  table.subchannels = subchannels;
  table.rates.assign(static_cast<std::size_t>(devices) * subchannels, -1.0);
  for (int k = 0; k < devices; ++k) {
    require(static_cast<int>(rows[k].size()) == subchannels, errc::io_error,
            "missing rate entries in '" + path + "'");
    for (int s = 0; s < subchannels; ++s) {
      require(rows[k][s] >= 0.0, errc::io_error, "missing rate entries in '" + path + "'");
      table.rates[static_cast<std::size_t>(k) * subchannels + s] = rows[k][s];
    }
  }
  return table;
}

inline constexpr const char* assignment_header = "round,device,subchannel";

inline std::vector<std::string> assignment_lines(int round, const Assignment& a) {
  std::vector<std::string> lines{assignment_header};
  for (int dev : a.selected_devices)
    for (int s : a.channel_sets.at(dev))
      lines.push_back(std::to_string(round) + "," + std::to_string(dev) + "," +
                      std::to_string(s));
  return lines;
}

inline void write_assignment(const std::string& path, int round, const Assignment& a) {
  write_lines(path, assignment_lines(round, a));
}

// Pipe-separated ascending device list, e.g. "3|7|12".
inline std::string join_devices(const std::vector<int>& devices) {
  std::string out;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    if (i) out += '|';
    out += std::to_string(devices[i]);
  }
  return out;
}

inline std::vector<int> split_devices(const std::string& field) {
  std::vector<int> out;
  for (const auto& part : split(field, '|')) out.push_back(static_cast<int>(to_int(part)));
  return out;
}

}  // namespace cafl::csv

#endif  // CAFL_CSV_HPP
