#pragma once

#include <cstdint>
#include <random>

namespace pme {

// Derives an independent seed from a base seed and up to three stream ids
// (splitmix64 finalizer chain). Used everywhere parallel work needs a
// schedule-independent random stream, e.g. (seed, cylinder, repeat).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a,
                         std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace pme
