#pragma once

// Exact checks of the expected-norm growth inequality, plus the two
// singular-value growth predictions and the logistic ODE behind the second.

#include <string>

#include "kkw/linalg.hpp"

namespace kkw {

class TheoryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Result of enumerating one walk step over all m(m-1) ordered row pairs.
///
/// sigma_sum is the lower-bound form of the pair sum (with the factor
/// 1/(1-c^2) replaced by 1), sigma2_sum the refinement term that the bound
/// 1/(1-c^2) >= 1 + c^2 adds back. sigma_exact is the pair sum itself, so
/// expected_norm_sq == base_norm_sq + sigma_exact / (m(m-1)) up to rounding.
struct GainReport {
    double expected_norm_sq = 0.0;
    double base_norm_sq = 0.0;
    double bound_rhs = 0.0;
    double sigma_sum = 0.0;
    double sigma2_sum = 0.0;
    double sigma_exact = 0.0;

    double gap() const noexcept { return expected_norm_sq - bound_rhs; }
    /// base + (sigma_sum + sigma2_sum) / (m(m-1)).
    double refined_rhs(std::size_t m) const noexcept;

    std::string to_json() const;
    static GainReport from_json(const std::string& text);
};

/// Enumerates every ordered pair (i, j), applies the row-j update to a fresh
/// copy and averages ||A' x||^2. Requires unit rows and 1 - c^2 >= 1e-12 for
/// every pair; throws TheoryError otherwise.
GainReport expected_gain_exact(const Matrix& a, std::span<const double> x);

double predict_linear(std::size_t n, double sigma0, double k);
double predict_logistic(std::size_t n, double sigma0, double k);

/// Integrates y' = 2/(n(n-1)) (y - y^2), y(0) = sigma0^2, with classical RK4
/// and returns the largest deviation from the closed form on [0, t_max].
double logistic_ode_check(std::size_t n, double sigma0, double t_max);

}  // namespace kkw
