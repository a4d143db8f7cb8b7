#include "pme/rng.hpp"

namespace pme {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t s = mix(seed + 0x9e3779b97f4a7c15ULL);
  s = mix(s ^ (a + 0x9e3779b97f4a7c15ULL));
  s = mix(s ^ (b + 0x2545f4914f6cdd1dULL));
  s = mix(s ^ (c + 0x6a09e667f3bcc909ULL));
  return s;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) {
  return std::mt19937_64(derive_seed(seed, a, b, c));
}

}  // namespace pme
