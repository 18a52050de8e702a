#pragma once

#include <cstdint>
#include <random>

// Deterministic draws on top of std::mt19937_64. The engine's output sequence
// is fixed by the standard; the std:: distributions are not, so the mappings
// to doubles and small ranges live here to keep runs identical everywhere.
namespace tcpnc::rnd {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent seed for a named sub-stream of one session seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0xD1B54A32D192ED03ull + 1));
}

// Uniform in [0, 1) with 53 bits.
inline double uniform01(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

inline bool bernoulli(Engine& eng, double p) { return p > 0.0 && uniform01(eng) < p; }

// Uniform in [0, n). Modulo bias is below 2^-50 for the ranges used here.
inline std::uint64_t below(Engine& eng, std::uint64_t n) { return eng() % n; }

}  // namespace tcpnc::rnd
