#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace manyshot {

// Uniform draw in [0, bound] by rejection on raw mt19937_64 output, so the
// sequence does not depend on the standard library's distribution code.
inline std::uint64_t uniform_at_most(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t range = bound + 1;
  if (range == 0) return rng();
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % range;
}

// Fisher-Yates from the back: for i = n-1 .. 1 swap p[i] with p[uniform_at_most(i)].
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_at_most(rng, i - 1);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace manyshot
