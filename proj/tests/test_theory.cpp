#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kkw/theory.hpp"
#include "kkw/rng.hpp"

using namespace kkw;

namespace {

Vector random_vector(Rng& rng, std::size_t n) {
    Vector x(n);
    for (auto& v : x) v = rng.normal();
    return x;
}

// Second route to the expectation: only row i changes, so
// ||A'x||^2 = ||Ax||^2 - y_i^2 + ((y_i - c y_j) / sqrt(1 - c^2))^2.
double expectation_by_row_formula(const Matrix& a, const Vector& x) {
    const Vector y = matvec(a, x);
    const std::size_t m = a.rows();
    double base = 0.0;
    for (double v : y) base += v * v;
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            const double c = gram_entry(a, i, j);
            const double moved = (y[j] - c * y[i]) / std::sqrt(1.0 - c * c);
            sum += base - y[j] * y[j] + moved * moved;
        }
    }
    return sum / static_cast<double>(m * (m - 1));
}

}  // namespace

TEST_CASE("expected gain: orthogonal matrices are an equality case") {
    Rng rng(4);
    Matrix q(3, 3);
    q(0, 1) = 1;
    q(1, 2) = -1;
    q(2, 0) = 1;
    const Vector x = random_vector(rng, 3);
    const auto r = expected_gain_exact(q, x);
    double xx = 0.0;
    for (double v : x) xx += v * v;
    CHECK(r.expected_norm_sq == doctest::Approx(xx).epsilon(1e-14));
    CHECK(r.base_norm_sq == doctest::Approx(xx).epsilon(1e-14));
    CHECK(std::abs(r.gap()) <= 1e-13);
    CHECK(r.sigma2_sum == 0.0);
}

TEST_CASE("expected gain: zero vector") {
    Rng rng(1);
    const Matrix a = random_row_normalized(rng, 5, 4);
    const auto r = expected_gain_exact(a, Vector(4, 0.0));
    CHECK(r.expected_norm_sq == 0.0);
    CHECK(r.bound_rhs == 0.0);
    CHECK(r.gap() == 0.0);
}

TEST_CASE("expected gain: square 4x4, 100 random vectors") {
    Rng rng(2718);
    const Matrix a = random_row_normalized(rng, 4, 4);
    for (int t = 0; t < 100; ++t) {
        const Vector x = random_vector(rng, 4);
        const auto r = expected_gain_exact(a, x);
        CHECK(r.expected_norm_sq >= r.bound_rhs - 1e-10);
        CHECK(r.expected_norm_sq ==
              doctest::Approx(expectation_by_row_formula(a, x)).epsilon(1e-12));
    }
}

TEST_CASE("expected gain: overdetermined 6x3 has a positive refinement term") {
    Rng rng(6);
    const Matrix a = random_row_normalized(rng, 6, 3);
    const Vector x = random_vector(rng, 3);
    const auto r = expected_gain_exact(a, x);
    CHECK(r.expected_norm_sq >= r.bound_rhs - 1e-10);
    CHECK(r.sigma2_sum > 0.0);
}

TEST_CASE("expected gain: inequalities and identities over many instances") {
    const std::pair<std::size_t, std::size_t> shapes[] = {{4, 4}, {6, 6}, {5, 4}, {8, 3}};
    Rng rng(12345);
    for (int t = 0; t < 200; ++t) {
        const auto [m, n] = shapes[t % 4];
        const Matrix a = random_row_normalized(rng, m, n);
        const Vector x = random_vector(rng, n);
        const auto r = expected_gain_exact(a, x);
        const double pairs = static_cast<double>(m * (m - 1));

        CHECK(r.expected_norm_sq >= r.bound_rhs - 1e-10);
        CHECK(r.expected_norm_sq >= r.refined_rhs(m) - 1e-10);
        CHECK(r.sigma2_sum >= 0.0);
        CHECK(r.sigma_exact >= r.sigma_sum + r.sigma2_sum - 1e-10);
        // The enumerated mean and the explicit pair sum agree.
        CHECK(r.expected_norm_sq == doctest::Approx(r.base_norm_sq + r.sigma_exact / pairs).epsilon(1e-11));

        // ||A^T A x||^2 as a norm and as the quadratic form <Ax, A A^T A x>.
        const Vector y = matvec(a, x);
        const Vector aty = matvec_transposed(a, y);
        const Vector aaty = matvec(a, aty);
        const double as_norm = dot(aty, aty);
        const double as_form = dot(y, aaty);
        CHECK(std::abs(as_norm - as_form) <= 1e-12 * std::max(1.0, as_norm));
    }
}

TEST_CASE("expected gain: argument errors") {
    const Matrix parallel(3, 2, {1, 0, 0, 1, -1, 0});
    CHECK_THROWS_AS(expected_gain_exact(parallel, Vector{1, 1}), TheoryError);
    const Matrix unnormalized(2, 2, {2, 0, 0, 1});
    CHECK_THROWS_AS(expected_gain_exact(unnormalized, Vector{1, 1}), TheoryError);
    CHECK_THROWS_AS(expected_gain_exact(Matrix::identity(2), Vector{1}), TheoryError);
}

TEST_CASE("gain report JSON round trip") {
    GainReport r{1.5, 1.25, 1.3, -0.5, 0.125, 0.75};
    const std::string text = r.to_json();
    for (const char* key : {"expected_norm_sq", "base_norm_sq", "bound_rhs", "sigma_sum", "sigma2_sum"}) {
        CHECK(text.find(key) != std::string::npos);
    }
    const GainReport back = GainReport::from_json(text);
    CHECK(back.expected_norm_sq == r.expected_norm_sq);
    CHECK(back.base_norm_sq == r.base_norm_sq);
    CHECK(back.bound_rhs == r.bound_rhs);
    CHECK(back.sigma_sum == r.sigma_sum);
    CHECK(back.sigma2_sum == r.sigma2_sum);
    CHECK(back.sigma_exact == r.sigma_exact);
}

TEST_CASE("predict_linear") {
    CHECK(predict_linear(50, 0.3, 0) == 0.3);
    CHECK(predict_linear(2, 0.1, 6) == doctest::Approx(0.1 * 8.0).epsilon(1e-14));

    const double direct = 0.01 * std::pow(1.0 + 2.0 / 9900.0, 10000.0);
    CHECK(predict_linear(100, 0.01, 20000) == doctest::Approx(direct).epsilon(1e-12));
    // exp(k/n^2) asymptotic.
    CHECK(std::abs(direct / (0.01 * std::exp(20000.0 / 10000.0)) - 1.0) <= 0.03);

    CHECK_THROWS_AS(predict_linear(1, 0.1, 5), TheoryError);
    CHECK_THROWS_AS(predict_linear(5, 0.0, 5), TheoryError);
}

TEST_CASE("predict_logistic") {
    CHECK(predict_logistic(100, 0.05, 0) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(predict_logistic(100, 0.05, 1e9) == doctest::Approx(1.0).epsilon(1e-15));
    for (double k : {0.0, 10.0, 1e4, 1e7}) CHECK(predict_logistic(30, 1.0, k) == 1.0);

    double prev = 0.0;
    for (double k = 0; k <= 200000; k += 5000) {
        const double v = predict_logistic(100, 0.02, k);
        CHECK(v > prev);
        CHECK(v < 1.0);
        prev = v;
    }
    CHECK_THROWS_AS(predict_logistic(100, 0.0, 1), TheoryError);
    CHECK_THROWS_AS(predict_logistic(100, 1.5, 1), TheoryError);
    CHECK_THROWS_AS(predict_logistic(1, 0.5, 1), TheoryError);
}

TEST_CASE("linear and logistic predictions agree to first order") {
    for (std::size_t n : {10u, 100u, 400u}) {
        const double rate = 2.0 / (static_cast<double>(n) * (n - 1.0));
        const double k_max = 0.01 / rate;
        for (double sigma0 : {1e-4, 0.01, 0.1}) {
            for (double k = 0; k <= k_max; k += k_max / 10) {
                const double lin = predict_linear(n, sigma0, k);
                const double log = predict_logistic(n, sigma0, k);
                CHECK(std::abs(lin - log) <= 0.01 * log);
            }
        }
    }
}

TEST_CASE("logistic ODE matches its closed form") {
    CHECK(logistic_ode_check(100, 1.0, 1e5) == 0.0);
    CHECK(logistic_ode_check(100, 0.05, 5.0 * 100 * 100) <= 1e-8);
    CHECK(logistic_ode_check(100, 1e-6, 5.0 * 100 * 100) <= 1e-8);
    CHECK(logistic_ode_check(10, 0.5, 1000) <= 1e-8);
    CHECK_THROWS_AS(logistic_ode_check(10, 2.0, 1), TheoryError);
}
