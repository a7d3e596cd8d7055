#pragma once
// Portable seeded randomness. mt19937_64 plus hand-written distributions.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace keystep {

using Rng = std::mt19937_64;

std::uint64_t fnv1a64(std::string_view data);
std::uint64_t splitmix64(std::uint64_t x);
std::string hex64(std::uint64_t v);

// Per-item seed so generation order does not affect results.
std::uint64_t derive_seed(std::uint64_t master, std::string_view key);

// Uniform in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);
// Uniform in [lo, hi].
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);
// Uniform in [0, 1).
double uniform_unit(Rng& rng);
bool bernoulli(Rng& rng, double p);

} // namespace keystep
