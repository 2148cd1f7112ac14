// Error taxonomy shared by all cafl components.
#ifndef CAFL_ERRORS_HPP
#define CAFL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cafl {

enum class errc {
  invalid_argument,
  discriminant_negative,   // Eq.-style round bound has no real root
  degenerate_bound,        // quadratic coefficient is zero, bound undefined
  no_root_in_range,        // oracle scan cap exceeded
  all_infeasible,          // no participating-device count admits a bound
  zero_rate,               // a link rate underflowed to zero
  too_few_channels,        // fewer sub-channels than devices to serve
  infeasible_assignment,   // assignment violates disjoint/cover/nonempty
  instance_too_large,      // exhaustive search guard tripped
  empty_participant_set,
  iteration_cap_exceeded,
  config_error,
  io_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::invalid_argument: return "invalid_argument";
    case errc::discriminant_negative: return "discriminant_negative";
    case errc::degenerate_bound: return "degenerate_bound";
    case errc::no_root_in_range: return "no_root_in_range";
    case errc::all_infeasible: return "all_infeasible";
    case errc::zero_rate: return "zero_rate";
    case errc::too_few_channels: return "too_few_channels";
    case errc::infeasible_assignment: return "infeasible_assignment";
    case errc::instance_too_large: return "instance_too_large";
    case errc::empty_participant_set: return "empty_participant_set";
    case errc::iteration_cap_exceeded: return "iteration_cap_exceeded";
    case errc::config_error: return "config_error";
    case errc::io_error: return "io_error";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace cafl

#endif  // CAFL_ERRORS_HPP
