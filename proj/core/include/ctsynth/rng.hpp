#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace ctsynth {

/// The single PRNG engine used everywhere: noise, dropout masks, init, shuffling.
using Rng = std::mt19937_64;

/// Engine state as portable text (the standard stream representation).
std::string save_rng_state(const Rng& rng);
Rng load_rng_state(const std::string& state);

/// Engine derived from a base seed and a stream tag; distinct tags give independent streams.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace ctsynth
