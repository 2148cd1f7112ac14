#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "cafl/allocation.hpp"
#include "cafl/radio.hpp"
#include "cafl/rng.hpp"
#include "helpers.hpp"

using Catch::Approx;
using cafl::errc;
using testutil::thrown_code;

namespace {

cafl::RateTable make_table(const std::vector<std::vector<double>>& rows) {
  cafl::RateTable t;
  t.devices = static_cast<int>(rows.size());
  t.subchannels = static_cast<int>(rows[0].size());
  for (const auto& r : rows) t.rates.insert(t.rates.end(), r.begin(), r.end());
  return t;
}

cafl::Assignment make_assignment(const std::vector<std::pair<int, std::set<int>>>& sets) {
  cafl::Assignment a;
  for (const auto& [dev, chans] : sets) {
    a.selected_devices.push_back(dev);
    a.channel_sets[dev] = chans;
  }
  return a;
}

// Random Rayleigh-faded table over a fresh topology, the shape used by the
// experiment pipeline.
cafl::RateTable random_table(std::uint64_t seed, int devices, int subchannels) {
  cafl::LinkBudget lb;
  const auto topo = cafl::sample_topology(seed, devices, 200.0);
  auto rng = std::mt19937_64(seed ^ 0x9e3779b97f4a7c15ull);
  return cafl::rate_table(topo, lb, subchannels, 0, rng);
}

}  // namespace

TEST_CASE("t_comp sums per-device upload times", "[allocation]") {
  // Two devices, one strong channel each: 1e5/1e5 + 1e5/2e5 = 1.5 s.
  const auto table = make_table({{1e5, 1.0}, {1.0, 2e5}});
  const auto a = make_assignment({{0, {0}}, {1, {1}}});
  CHECK(cafl::t_comp(a, table, 1e5) == 1.5);
}

TEST_CASE("t_comp pools a single device's channels", "[allocation]") {
  const auto table = make_table({{5e4, 5e4, 5e4, 5e4}});
  const auto a = make_assignment({{0, {0, 1, 2, 3}}});
  CHECK(cafl::t_comp(a, table, 1e5) == 0.5);
}

TEST_CASE("t_comp is exactly linear in Z", "[allocation]") {
  const auto table = random_table(12, 4, 9);
  auto rng = std::mt19937_64(5);
  const auto a = cafl::initial_assignment({0, 1, 2, 3}, 9, rng);
  const double t1 = cafl::t_comp(a, table, 1e6);
  const double t2 = cafl::t_comp(a, table, 2e6);
  CHECK(t2 == 2.0 * t1);  // scaling by 2 commutes with every rounding step
}

TEST_CASE("t_comp rejects infeasible assignments", "[allocation]") {
  const auto table = make_table({{1e5, 1e5}, {1e5, 1e5}});

  auto overlap = make_assignment({{0, {0, 1}}, {1, {1}}});
  CHECK(thrown_code([&] { cafl::t_comp(overlap, table, 1e5); }) ==
        errc::infeasible_assignment);

  auto uncovered = make_assignment({{0, {0}}, {1, {}}});
  CHECK(thrown_code([&] { cafl::t_comp(uncovered, table, 1e5); }) ==
        errc::infeasible_assignment);

  auto out_of_range = make_assignment({{0, {0}}, {1, {2}}});
  CHECK(thrown_code([&] { cafl::t_comp(out_of_range, table, 1e5); }) ==
        errc::infeasible_assignment);

  auto nobody = make_assignment({});
  CHECK(thrown_code([&] { cafl::t_comp(nobody, table, 1e5); }) ==
        errc::infeasible_assignment);

  auto ok = make_assignment({{0, {0}}, {1, {1}}});
  CHECK(thrown_code([&] { cafl::t_comp(ok, table, 0.0); }) == errc::invalid_argument);
}

TEST_CASE("t_comp rejects a dead rate sum", "[allocation]") {
  const auto table = make_table({{0.0, 1e5}, {1e5, 0.0}});
  const auto a = make_assignment({{0, {0}}, {1, {1}}});
  CHECK(thrown_code([&] { cafl::t_comp(a, table, 1e5); }) == errc::zero_rate);
}

TEST_CASE("fairness splits channels round-robin", "[allocation]") {
  auto a = cafl::fairness_assignment({7, 3}, 4);
  CHECK(a.selected_devices == std::vector<int>{3, 7});
  CHECK(a.channel_sets[3] == std::set<int>{0, 2});
  CHECK(a.channel_sets[7] == std::set<int>{1, 3});

  a = cafl::fairness_assignment({0, 1, 2}, 4);
  CHECK(a.channel_sets[0] == std::set<int>{0, 3});
  CHECK(a.channel_sets[1] == std::set<int>{1});
  CHECK(a.channel_sets[2] == std::set<int>{2});

  a = cafl::fairness_assignment({5}, 6);
  CHECK(a.channel_sets[5] == std::set<int>{0, 1, 2, 3, 4, 5});

  CHECK(thrown_code([&] { cafl::fairness_assignment({0, 1, 2}, 2); }) ==
        errc::too_few_channels);
}

TEST_CASE("initial assignment is feasible and deterministic", "[allocation]") {
  std::mt19937_64 meta(4242);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(meta() % 8);
    const int s = n + static_cast<int>(meta() % 10);
    std::vector<int> selected(n);
    for (int i = 0; i < n; ++i) selected[i] = 3 * i + 1;
    const std::uint64_t seed = meta();
    auto r1 = std::mt19937_64(seed);
    auto r2 = std::mt19937_64(seed);
    const auto a = cafl::initial_assignment(selected, s, r1);
    const auto b = cafl::initial_assignment(selected, s, r2);
    a.validate(s);
    REQUIRE(a.channel_sets == b.channel_sets);
  }
}

TEST_CASE("initial assignment with S == n is a perfect matching", "[allocation]") {
  auto rng = std::mt19937_64(99);
  const auto a = cafl::initial_assignment({0, 1, 2, 3, 4}, 5, rng);
  a.validate(5);
  for (const auto& [dev, chans] : a.channel_sets) CHECK(chans.size() == 1);
}

TEST_CASE("coalition game with one device keeps everything and stops", "[allocation]") {
  const auto table = make_table({{1e5, 2e5, 3e5}});
  auto rng = std::mt19937_64(8);
  const auto out = cafl::coalition_game(table, {0}, 1e5, rng);
  CHECK(out.assignment.channel_sets.at(0) == std::set<int>{0, 1, 2});
  CHECK(out.moves_accepted == 0);
  CHECK(out.iterations == 1);
  CHECK(out.t_comp_seconds == 1e5 / 6e5);
}

TEST_CASE("coalition game finds the optimum on the crafted pair", "[allocation]") {
  // Device 0 is strong on channels 0 and 1, device 1 on channel 2.  The
  // global optimum gives 0 both strong channels: 1/3 + 1/2 s.  From the
  // equal-count start (0 holds {0, 2}, 1 holds {1}) the game must shed the
  // mismatched channels and land on the optimum whatever the swap picks do.
  const auto table = make_table({{1e5, 2e5, 1e3}, {1e3, 1e3, 2e5}});
  const auto exh = cafl::exhaustive_optimum(table, {0, 1}, 1e5);
  REQUIRE(exh.t_comp_seconds == Approx(1.0 / 3.0 + 0.5).epsilon(1e-12));

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto rng = std::mt19937_64(seed);
    const auto out = cafl::coalition_game(table, {0, 1}, 1e5, rng);
    out.assignment.validate(3);
    CHECK(out.t_comp_seconds == exh.t_comp_seconds);
    CHECK(out.assignment.channel_sets == exh.assignment.channel_sets);
    CHECK(out.moves_accepted >= 1);
  }
}

TEST_CASE("coalition game can stall on a swap-stable matching", "[allocation]") {
  // With S == n every proposal is a pairwise swap.  Per-channel times (Z over
  // rate) form the matrix {{2,1,4},{4,2,1},{1,4,2}}: the diagonal start costs
  // 6, every single swap costs 7, yet the 3-cycle reaches 3.  The game is
  // blind to the cycle, a documented local stall at ratio 2 over the optimum.
  const auto table = make_table({{5e4, 1e5, 2.5e4},
                                 {2.5e4, 5e4, 1e5},
                                 {1e5, 2.5e4, 5e4}});
  auto rng = std::mt19937_64(1);
  const auto out = cafl::coalition_game(table, {0, 1, 2}, 1e5, rng);
  CHECK(out.t_comp_seconds == 6.0);
  CHECK(out.moves_accepted == 0);
  CHECK(out.iterations == 1);

  const auto exh = cafl::exhaustive_optimum(table, {0, 1, 2}, 1e5);
  CHECK(exh.t_comp_seconds == 3.0);
  CHECK(out.t_comp_seconds / exh.t_comp_seconds == 2.0);

  // The stall never drops below the fairness split it started from.
  const auto fair = cafl::fairness_assignment({0, 1, 2}, 3);
  CHECK(out.t_comp_seconds == cafl::t_comp(fair, table, 1e5));
}

TEST_CASE("coalition game explores the only alternative in the 2x2 case", "[allocation]") {
  // Two devices, two channels: the start and its swap are the whole space,
  // so the game always returns the exhaustive optimum here.
  const auto keep = make_table({{10.0, 1.0}, {1.0, 10.0}});
  auto rng = std::mt19937_64(3);
  const auto kept = cafl::coalition_game(keep, {0, 1}, 10.0, rng);
  CHECK(kept.t_comp_seconds == 2.0);
  CHECK(kept.moves_accepted == 0);

  const auto cross = make_table({{1.0, 10.0}, {10.0, 1.0}});
  const auto crossed = cafl::coalition_game(cross, {0, 1}, 10.0, rng);
  CHECK(crossed.t_comp_seconds == 2.0);
  CHECK(crossed.moves_accepted == 1);
  CHECK(crossed.t_comp_seconds == cafl::exhaustive_optimum(cross, {0, 1}, 10.0).t_comp_seconds);
}

TEST_CASE("coalition game output is feasible, monotone and exactly recomputable", "[allocation]") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto table = random_table(seed, 5, 15);
    auto rng = std::mt19937_64(1000 + seed);
    std::vector<double> trace;
    const auto out = cafl::coalition_game(table, {0, 1, 2, 3, 4}, 1e6, rng, 10'000, &trace);

    out.assignment.validate(15);
    CHECK(out.iterations >= 1);
    CHECK(out.moves_accepted == static_cast<long long>(trace.size()));
    for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] < trace[i - 1]);
    if (!trace.empty()) CHECK(out.t_comp_seconds == trace.back());

    // The reported time must equal a from-scratch recomputation bit for bit.
    CHECK(out.t_comp_seconds == cafl::t_comp(out.assignment, table, 1e6));
  }
}

TEST_CASE("coalition game never loses to the fairness split", "[allocation]") {
  int wins = 0;
  int strict = 0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    const auto table = random_table(5000 + trial, 5, 15);
    auto rng = std::mt19937_64(9000 + trial);
    const auto game = cafl::coalition_game(table, {0, 1, 2, 3, 4}, 1e6, rng);
    const auto fair = cafl::fairness_assignment({0, 1, 2, 3, 4}, 15);
    const double fair_t = cafl::t_comp(fair, table, 1e6);
    if (game.t_comp_seconds <= fair_t) ++wins;
    if (game.t_comp_seconds < fair_t) ++strict;
  }
  CHECK(wins >= static_cast<int>(trials * 0.95));
  // The equal-count start makes "never worse" exact. Strict gains need a
  // transfer that beats the balance penalty (no singleton sets at 5x15, so
  // no swaps are ever proposed); fading outliers provide one in roughly a
  // third of instances.
  CHECK(wins == trials);
  CHECK(strict >= trials / 4);
}

TEST_CASE("coalition game respects the sweep cap", "[allocation]") {
  // The crafted pair accepts moves in its first sweep, so a second sweep is
  // needed to confirm quiescence and a cap of one must trip.
  const auto table = make_table({{1e5, 2e5, 1e3}, {1e3, 1e3, 2e5}});
  auto rng = std::mt19937_64(0);
  CHECK(thrown_code([&] { cafl::coalition_game(table, {0, 1}, 1e5, rng, 1); }) ==
        errc::iteration_cap_exceeded);
}

TEST_CASE("exhaustive optimum enumerates every onto assignment", "[allocation]") {
  const auto diag = make_table({{10.0, 1.0}, {1.0, 10.0}});
  const auto out2 = cafl::exhaustive_optimum(diag, {0, 1}, 10.0);
  CHECK(out2.t_comp_seconds == 2.0);
  CHECK(out2.iterations == 2);
  CHECK(out2.assignment.channel_sets.at(0) == std::set<int>{0});
  CHECK(out2.assignment.channel_sets.at(1) == std::set<int>{1});

  const auto table = make_table({{1e5, 2e5, 1e3}, {1e3, 1e3, 2e5}});
  const auto out3 = cafl::exhaustive_optimum(table, {0, 1}, 1e5);
  CHECK(out3.iterations == 6);  // 2^3 - 2 onto maps
  CHECK(out3.assignment.channel_sets.at(0) == std::set<int>{0, 1});
  CHECK(out3.assignment.channel_sets.at(1) == std::set<int>{2});
  CHECK(out3.t_comp_seconds == cafl::t_comp(out3.assignment, table, 1e5));

  const auto single = cafl::exhaustive_optimum(make_table({{1.0, 2.0}}), {0}, 1.0);
  CHECK(single.iterations == 1);
  CHECK(single.assignment.channel_sets.at(0) == std::set<int>{0, 1});
}

TEST_CASE("exhaustive optimum refuses oversized instances", "[allocation]") {
  cafl::RateTable t;
  t.devices = 2;
  t.subchannels = 21;  // 2^21 - 2 onto maps > 1e6
  t.rates.assign(42, 1.0);
  CHECK(thrown_code([&] { cafl::exhaustive_optimum(t, {0, 1}, 1.0); }) ==
        errc::instance_too_large);
}

TEST_CASE("surjection counts", "[allocation]") {
  CHECK(cafl::detail::surjection_count(2, 2, 1'000'000) == 2);
  CHECK(cafl::detail::surjection_count(3, 2, 1'000'000) == 6);
  CHECK(cafl::detail::surjection_count(4, 3, 1'000'000) == 36);
  CHECK(cafl::detail::surjection_count(5, 1, 1'000'000) == 1);
  CHECK(cafl::detail::surjection_count(21, 2, 1'000'000) == 1'000'001);  // saturated
}

TEST_CASE("coalition game never beats the exhaustive optimum", "[allocation]") {
  std::mt19937_64 meta(31337);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(meta() % 2);        // 2..3 devices
    const int s = n + static_cast<int>(meta() % (7 - n));  // up to 6 channels
    std::vector<int> selected(n);
    for (int i = 0; i < n; ++i) selected[i] = i;
    const auto table = random_table(777000 + trial, n, s);
    auto rng = std::mt19937_64(888000 + trial);
    const auto game = cafl::coalition_game(table, selected, 1e6, rng);
    const auto exh = cafl::exhaustive_optimum(table, selected, 1e6);
    CHECK(game.t_comp_seconds >= exh.t_comp_seconds * (1.0 - 1e-12));
  }
}
