#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace psum {

using Rng = std::mt19937_64;

// splitmix64 finaliser; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);

// Deterministic (seed, index) -> sub-seed for per-trial / per-entity streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(derive_seed(seed, stream)); }

void fill_bytes(Rng& rng, std::span<std::uint8_t> out);

}  // namespace psum
