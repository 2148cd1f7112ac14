// Seed derivation and sampling helpers.
//
// Every random quantity in a run is drawn from an engine seeded through
// derive_seed, so a (master seed, stream, trial, round) tuple pins the whole
// experiment. The tuple is packed injectively into 64 bits and pushed through
// splitmix64 (a bijection), so distinct tuples never collide.
#ifndef CAFL_RNG_HPP
#define CAFL_RNG_HPP

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "cafl/errors.hpp"

namespace cafl {

// Stream tags keep independent uses of the same (trial, round) apart.
enum class stream : std::uint64_t {
  topology = 1,
  fading = 2,
  selection = 3,
  game = 4,
  fl = 5,
  task = 6,
  generic = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Injective for trial, round < 2^30 and tag < 16; splitmix64 is bijective, so
// distinct (master, tag, trial, round) tuples give distinct seeds.
inline std::uint64_t derive_seed(std::uint64_t master, stream tag,
                                 std::uint64_t trial = 0, std::uint64_t round = 0) {
  require(trial < (1ULL << 30) && round < (1ULL << 30), errc::invalid_argument,
          "trial/round index exceeds 2^30");
  const std::uint64_t packed =
      (static_cast<std::uint64_t>(tag) << 60) | (trial << 30) | round;
  return splitmix64(splitmix64(master) ^ packed);
}

inline std::mt19937_64 make_engine(std::uint64_t master, stream tag,
                                   std::uint64_t trial = 0, std::uint64_t round = 0) {
  return std::mt19937_64(derive_seed(master, tag, trial, round));
}

// Uniform sample of `count` distinct indices from [0, population), ascending.
inline std::vector<int> sample_without_replacement(int population, int count,
                                                   std::mt19937_64& rng) {
  require(count >= 1 && count <= population, errc::invalid_argument,
          "sample size must be in [1, population]");
  std::vector<int> pool(population);
  for (int i = 0; i < population; ++i) pool[i] = i;
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, population - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cafl

#endif  // CAFL_RNG_HPP
