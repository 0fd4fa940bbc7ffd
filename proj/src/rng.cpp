#include "kkw/rng.hpp"

#include <cmath>
#include <numbers>

namespace kkw {

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
    if (bound == 0) throw LinalgError("uniform_index: bound must be positive");
    // Largest multiple of bound representable; values above it are rejected.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
    std::uint64_t r;
    do {
        r = engine_();
    } while (r > limit);
    return r % bound;
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = uniform01();
    } while (u1 == 0.0);
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Matrix gaussian_matrix(Rng& rng, std::size_t m, std::size_t n) {
    Matrix a(m, n);
    for (double& v : a.data()) v = rng.normal();
    return a;
}

Matrix random_row_normalized(Rng& rng, std::size_t m, std::size_t n, double min_sigma) {
    for (;;) {
        Matrix a = normalize_rows(gaussian_matrix(rng, m, n));
        if (m < n || singular_values(a).min() >= min_sigma) return a;
    }
}

}  // namespace kkw
