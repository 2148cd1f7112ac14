#pragma once

#include <optional>
#include <random>
#include <utility>

#include "cafl/bound.hpp"
#include "cafl/errors.hpp"

namespace testutil {

// Baseline convergence-bound parameters used by several worked examples:
// L = mu = 1, G = 0, delta = 0, E = 1, chi = 0, loss = 2, eps = 0.5, K = 4.
inline cafl::FlBoundParams example_params() {
  cafl::FlBoundParams p;
  p.smoothness_l = 1.0;
  p.strong_convexity_mu = 1.0;
  p.grad_bound_g = 0.0;
  p.grad_variance_delta.assign(4, 0.0);
  p.local_epochs_e = 1;
  p.heterogeneity_chi = 0.0;
  p.compressor_loss = 2.0;
  p.epsilon = 0.5;
  p.total_devices_k = 4;
  return p;
}

// Draws random but well-posed bound parameters.  Combinations whose u3 term
// is negative are rejected: there the closed form picks the larger root of
// the round polynomial while a forward scan stops on the left branch, so the
// two are only comparable on the u3 >= 0 domain.
inline std::pair<cafl::FlBoundParams, int> random_equivalence_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    cafl::FlBoundParams p;
    p.smoothness_l = 0.5 + 3.5 * unit(rng);
    p.strong_convexity_mu = p.smoothness_l * (0.1 + 0.9 * unit(rng));
    p.grad_bound_g = 2.0 * unit(rng);
    p.local_epochs_e = 1 + static_cast<int>(rng() % 4);
    p.heterogeneity_chi = 3.0 * unit(rng);
    p.compressor_loss = 0.05 + 4.95 * unit(rng);
    p.epsilon = 0.05 + 3.95 * unit(rng);
    p.total_devices_k = 1 + static_cast<int>(rng() % 6);
    p.grad_variance_delta.resize(p.total_devices_k);
    for (double& d : p.grad_variance_delta) d = 1.5 * unit(rng);
    const int kse = 1 + static_cast<int>(rng() % p.total_devices_k);
    const cafl::BoundTerms t = cafl::bound_terms(p, kse);
    if (t.u1 <= 0.0 || t.u3 < 0.0) continue;
    return {p, kse};
  }
}

// Runs fn and reports the error code it threw, or nullopt if it returned.
template <typename Fn>
inline std::optional<cafl::errc> thrown_code(Fn&& fn) {
  try {
    fn();
  } catch (const cafl::error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testutil
