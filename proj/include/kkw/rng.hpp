#pragma once

// Seeded randomness with a stable, documented algorithm: std::mt19937_64
// (fully specified by the standard) plus portable transforms for bounded
// integers, unit reals and normals. The std distributions are avoided
// because their output differs between standard library implementations.

#include <cstdint>
#include <random>

#include "kkw/linalg.hpp"

namespace kkw {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on {0, ..., bound-1} by rejection (no modulo bias).
    std::uint64_t uniform_index(std::uint64_t bound);

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01();

    /// Standard normal via the Box-Muller transform; caches the second draw.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derives an independent stream seed from (seed, stream) with splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// m x n matrix of independent standard normals.
Matrix gaussian_matrix(Rng& rng, std::size_t m, std::size_t n);

/// Row-normalized Gaussian matrix; redraws while sigma_min < min_sigma
/// (numerically rank-deficient draws).
Matrix random_row_normalized(Rng& rng, std::size_t m, std::size_t n, double min_sigma = 1e-10);

}  // namespace kkw
