// Convergence-round lower bound for compression-aided federated learning.
//
// Computes the U1/U2/U3 terms of the round bound, the bound itself
// R_min(K_se) (larger root of U1 x^2 + (U2 - 2eps/L) x - U3 with x = E R,
// rounded up), the matching learning-rate schedule, and the linear search
// for the participating-device count that minimizes the bound.
//
// Note: the bound as printed grows with eps (a looser accuracy target yields
// more rounds). It is implemented exactly as printed; see README.
#ifndef CAFL_BOUND_HPP
#define CAFL_BOUND_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cafl/errors.hpp"

namespace cafl {

// How the per-device gradient-variance terms delta_k^2 enter the bound when
// no concrete device selection exists yet (data are IID, so the mean over
// all devices is the default stand-in for the selected-set average).
enum class delta_aggregation { mean_over_all, first_kse };

struct FlBoundParams {
  double smoothness_l = 1.0;        // L
  double strong_convexity_mu = 1.0; // mu, 0 < mu <= L
  double grad_bound_g = 0.0;        // G, stochastic-gradient norm bound
  std::vector<double> grad_variance_delta;  // delta_k, one per device
  int local_epochs_e = 1;           // E
  double heterogeneity_chi = 0.0;   // chi, scenario constant
  double compressor_loss = 0.0;     // reconstruction loss of the codec
  double epsilon = 0.1;             // target accuracy
  int total_devices_k = 1;          // K
  delta_aggregation delta_mode = delta_aggregation::mean_over_all;

  void validate() const {
    require(strong_convexity_mu > 0.0, errc::invalid_argument, "mu must be positive");
    require(smoothness_l >= strong_convexity_mu, errc::invalid_argument,
            "L must be >= mu");
    require(grad_bound_g >= 0.0, errc::invalid_argument, "G must be nonnegative");
    require(local_epochs_e >= 1, errc::invalid_argument, "E must be >= 1");
    require(heterogeneity_chi >= 0.0, errc::invalid_argument, "chi must be nonnegative");
    require(compressor_loss >= 0.0, errc::invalid_argument,
            "compressor loss must be nonnegative");
    require(epsilon > 0.0, errc::invalid_argument, "epsilon must be positive");
    require(total_devices_k >= 1, errc::invalid_argument, "K must be >= 1");
    require(static_cast<int>(grad_variance_delta.size()) == total_devices_k,
            errc::invalid_argument, "delta must have one entry per device");
    for (double d : grad_variance_delta)
      require(d >= 0.0, errc::invalid_argument, "delta_k must be nonnegative");
  }

  // a = max{8L/mu, E}; derived, never stored.
  double a() const {
    return std::max(8.0 * smoothness_l / strong_convexity_mu,
                    static_cast<double>(local_epochs_e));
  }
};

struct BoundTerms {
  double u1 = 0.0;
  double u2 = 0.0;
  double u3 = 0.0;  // may be negative (the -4a/mu^2 G^2 term)
  double a = 0.0;
  int kse = 1;
};

namespace detail {

// Average of delta_k^2 over the selected set, per the configured mode.
inline double mean_delta_sq(const FlBoundParams& p, int kse) {
  double sum = 0.0;
  if (p.delta_mode == delta_aggregation::first_kse) {
    for (int k = 0; k < kse; ++k)
      sum += p.grad_variance_delta[k] * p.grad_variance_delta[k];
    return sum / kse;
  }
  for (double d : p.grad_variance_delta) sum += d * d;
  return sum / p.total_devices_k;
}

// Ceiling with a 1e-9 relative slack so a value equal to an integer up to
// floating error does not round one past it.
inline long long ceil_with_slack(double x) {
  const double nearest = std::round(x);
  const double tol = 1e-9 * std::max(1.0, std::abs(x));
  if (std::abs(x - nearest) <= tol) return static_cast<long long>(nearest);
  return static_cast<long long>(std::ceil(x));
}

}  // namespace detail

// The U1/U2/U3 notation evaluated for a candidate participating count.
inline BoundTerms bound_terms(const FlBoundParams& p, int kse) {
  p.validate();
  require(kse >= 1 && kse <= p.total_devices_k, errc::invalid_argument,
          "kse must be in [1, K]");
  const double e = p.local_epochs_e;
  const double mu = p.strong_convexity_mu;
  const double l = p.smoothness_l;
  const double a = p.a();
  const double kse_sq = static_cast<double>(kse) * kse;
  const double loss_term = p.compressor_loss / (kse_sq * (e + 1.0));
  const double q = 6.0 * e * l * p.heterogeneity_chi +
                   8.0 * e * (e - 1.0) * (e - 1.0) * p.grad_bound_g * p.grad_bound_g +
                   detail::mean_delta_sq(p, kse);
  BoundTerms t;
  t.kse = kse;
  t.a = a;
  t.u1 = loss_term;
  t.u2 = q / (mu * e * a) + loss_term;
  t.u3 = a * loss_term - (4.0 * a / (mu * mu)) * p.grad_bound_g * p.grad_bound_g +
         (2.0 / (mu * e)) * q;
  return t;
}

namespace detail {

// Quadratic in x = E*R whose nonnegativity marks the accuracy target met.
inline double round_poly(const BoundTerms& t, double two_eps_over_l, double x) {
  return t.u1 * x * x + (t.u2 - two_eps_over_l) * x - t.u3;
}

// Relative slack matching ceil_with_slack, so the closed form and the scan
// resolve boundary cases the same way.
inline double round_poly_tol(const BoundTerms& t, double two_eps_over_l, double x) {
  const double scale = std::max({std::abs(t.u1) * x * x,
                                 std::abs(t.u2 - two_eps_over_l) * x,
                                 std::abs(t.u3), 1.0});
  return 1e-9 * scale;
}

}  // namespace detail

// Round lower bound: ceil of the larger root of the round polynomial,
// divided by E and clamped below at 1.
inline long long r_min(const FlBoundParams& p, int kse) {
  const BoundTerms t = bound_terms(p, kse);
  require(t.u1 != 0.0, errc::degenerate_bound,
          "compressor loss is zero, round bound undefined");
  const double two_eps_over_l = 2.0 * p.epsilon / p.smoothness_l;
  const double b = t.u2 - two_eps_over_l;
  const double disc = b * b + 4.0 * t.u1 * t.u3;
  require(disc >= 0.0, errc::discriminant_negative,
          "round bound has no real root at kse=" + std::to_string(kse));
  const double root = (-b + std::sqrt(disc)) / (2.0 * t.u1 * p.local_epochs_e);
  return std::max(1LL, detail::ceil_with_slack(root));
}

// Independent check of r_min: scan R = 1, 2, ... for the first round count
// with the round polynomial nonnegative at x = E*R.
inline long long r_min_oracle(const FlBoundParams& p, int kse,
                              long long scan_cap = 10'000'000LL) {
  const BoundTerms t = bound_terms(p, kse);
  require(t.u1 != 0.0, errc::degenerate_bound,
          "compressor loss is zero, round bound undefined");
  const double two_eps_over_l = 2.0 * p.epsilon / p.smoothness_l;
  for (long long r = 1; r <= scan_cap; ++r) {
    const double x = static_cast<double>(p.local_epochs_e) * r;
    if (detail::round_poly(t, two_eps_over_l, x) >=
        -detail::round_poly_tol(t, two_eps_over_l, x))
      return r;
  }
  fail(errc::no_root_in_range, "no round count within scan cap");
}

// Step-size schedule of the bound: eta_t = (E+1) / (E mu (a + t)).
inline double learning_rate(const FlBoundParams& p, long long t) {
  p.validate();
  require(t >= 0, errc::invalid_argument, "step index must be nonnegative");
  const double e = p.local_epochs_e;
  return (e + 1.0) / (e * p.strong_convexity_mu * (p.a() + static_cast<double>(t)));
}

struct KseSearchResult {
  int kse_opt = 1;
  long long r_min_opt = 0;
};

// Scan k = 1..K for the participating count minimizing the round bound.
// Strict improvement keeps the smallest k on ties; k where the bound has no
// real value (negative discriminant) are skipped.
inline KseSearchResult optimal_kse(const FlBoundParams& p) {
  p.validate();
  KseSearchResult best;
  bool found = false;
  for (int k = 1; k <= p.total_devices_k; ++k) {
    long long r;
    try {
      r = r_min(p, k);
    } catch (const error& e) {
      if (e.code() == errc::discriminant_negative) continue;
      throw;
    }
    if (!found || r < best.r_min_opt) {
      best.kse_opt = k;
      best.r_min_opt = r;
      found = true;
    }
  }
  require(found, errc::all_infeasible, "round bound undefined for every kse in [1, K]");
  return best;
}

}  // namespace cafl

#endif  // CAFL_BOUND_HPP
