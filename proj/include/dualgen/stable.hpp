#pragma once

#include <cstdint>
#include <random>

#include "dualgen/state_space.hpp"

namespace dualgen {

using Rng = std::mt19937_64;

// Per-path generator seeded from (seed, stream) through splitmix64.
Rng path_rng(std::uint64_t seed, std::uint64_t stream);
std::uint64_t splitmix64(std::uint64_t x);

double uniform01(Rng& rng);  // in (0, 1)
double std_normal(Rng& rng);
double std_exponential(Rng& rng);

// Symmetric alpha-stable with characteristic function exp(-|xi|^alpha),
// Chambers-Mallows-Stuck.
double symmetric_stable(double alpha, Rng& rng);

// Positive stable with Laplace transform exp(-s^beta), beta in (0, 1), by
// Kanter's representation.
double positive_stable(double beta, Rng& rng);

// Rotation-invariant stable vector with characteristic function
// exp(-|xi|^alpha): sqrt(A) G with A positive (alpha/2)-stable and
// G ~ N(0, 2 I). One dimension falls back to symmetric_stable.
Vec isotropic_stable(double alpha, std::size_t d, Rng& rng);

}  // namespace dualgen
