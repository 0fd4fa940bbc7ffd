#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kkw/solver.hpp"

using namespace kkw;

namespace {

LinearSystem random_consistent(std::uint64_t seed, std::size_t m, std::size_t n) {
    Rng rng(derive_seed(seed, 0));
    Matrix a = random_row_normalized(rng, m, n);
    Vector x(n);
    for (auto& v : x) v = rng.normal();
    return LinearSystem::consistent(a, std::move(x));
}

}  // namespace

TEST_CASE("project_onto_row") {
    CHECK(project_onto_row(Vector{0, 0}, Vector{1, 0}, 3.0) == Vector{3, 0});
    CHECK(project_onto_row(Vector{5, 7}, Vector{0, 2}, 4.0) == Vector{5, 2});
    CHECK_THROWS_AS(project_onto_row(Vector{1, 1}, Vector{0, 0}, 1.0), LinalgError);
    CHECK_THROWS_AS(project_onto_row(Vector{1}, Vector{0, 1}, 1.0), LinalgError);
}

TEST_CASE("project_onto_row: lands on the hyperplane, Pythagoras to any solution") {
    Rng rng(21);
    for (int t = 0; t < 200; ++t) {
        Vector row(6), y(6), x(6);
        for (auto& v : row) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        for (auto& v : x) v = rng.normal();
        const double rhs = dot(row, x);
        const Vector p = project_onto_row(y, row, rhs);
        CHECK(std::abs(dot(row, p) - rhs) <= 1e-12 * (1.0 + std::abs(rhs)) * norm2(row));

        double yx = 0, px = 0, yp = 0;
        for (int k = 0; k < 6; ++k) {
            yx += (y[k] - x[k]) * (y[k] - x[k]);
            px += (p[k] - x[k]) * (p[k] - x[k]);
            yp += (y[k] - p[k]) * (y[k] - p[k]);
        }
        CHECK(std::abs(yx - (px + yp)) <= 1e-11 * yx);
    }
}

TEST_CASE("kaczmarz_solve: starting at the solution stops immediately") {
    const LinearSystem sys = random_consistent(3, 8, 5);
    const auto r = kaczmarz_solve(sys, *sys.x_ref, SolveConfig{});
    CHECK(r.trace.converged);
    CHECK(r.trace.iterations == 0);
    REQUIRE(r.trace.points.size() == 1);
    CHECK(r.trace.points[0].error_sq == 0.0);
}

TEST_CASE("kaczmarz_solve: orthogonal rows solve each coordinate exactly") {
    const LinearSystem sys{Matrix::identity(4), {1, -2, 3, 0.5}, Vector{1, -2, 3, 0.5}};
    SolveConfig cfg;
    cfg.seed = 9;
    cfg.target_residual = 1e-14;
    const auto r = kaczmarz_solve(sys, Vector(4, 0.0), cfg);
    CHECK(r.trace.converged);
    CHECK(r.x == *sys.x_ref);
}

TEST_CASE("kaczmarz_solve: error never increases on consistent systems") {
    const LinearSystem sys = random_consistent(4, 12, 6);
    SolveConfig cfg;
    cfg.seed = 1;
    cfg.max_iters = 2000;
    cfg.record_every = 1;
    cfg.target_residual = 1e-300;
    const auto r = kaczmarz_solve(sys, Vector(6, 0.0), cfg);
    REQUIRE(r.trace.points.size() == 2001);
    for (std::size_t k = 1; k < r.trace.points.size(); ++k) {
        const double prev = r.trace.points[k - 1].error_sq;
        CHECK(r.trace.points[k].error_sq <= prev + 1e-14 * std::sqrt(prev) + 1e-28);
    }
}

TEST_CASE("kaczmarz_solve: without a reference the residual is tracked") {
    LinearSystem sys = random_consistent(6, 10, 4);
    sys.x_ref.reset();
    SolveConfig cfg;
    cfg.seed = 2;
    cfg.record_every = 10;
    const auto r = kaczmarz_solve(sys, Vector(4, 0.0), cfg);
    CHECK(r.trace.converged);
    const Vector ax = matvec(sys.a, r.x);
    double res = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) res += (ax[i] - sys.b[i]) * (ax[i] - sys.b[i]);
    CHECK(res <= 1e-12);
    CHECK(r.trace.points.back().error_sq == doctest::Approx(res).epsilon(1e-9));
}

TEST_CASE("kaczmarz_solve: weighted sampling handles unnormalized rows") {
    Rng rng(17);
    Matrix a = gaussian_matrix(rng, 15, 5);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) *= 1.0 + 9.0 * static_cast<double>(i % 3);
    const Vector x{1, 2, 3, 4, 5};
    const LinearSystem sys{a, matvec(a, x), x};
    SolveConfig cfg;
    cfg.seed = 3;
    cfg.target_residual = 1e-9;
    const auto r = kaczmarz_solve(sys, Vector(5, 0.0), cfg);
    CHECK(r.trace.converged);
    for (int k = 0; k < 5; ++k) CHECK(r.x[k] == doctest::Approx(x[k]).epsilon(1e-8));
}

TEST_CASE("kaczmarz_solve: expected error follows the row-weighted rate bound") {
    const LinearSystem sys = random_consistent(100, 40, 40);
    const double smin = singular_values(sys.a).min();
    const double frob = frobenius_sq(sys.a);
    const Vector x0(40, 0.0);
    const double e0 = dot(*sys.x_ref, *sys.x_ref);

    constexpr int trials = 200;
    const std::uint64_t checkpoints[] = {50, 200, 800};
    std::vector<double> sum(3, 0.0), sum_sq(3, 0.0);
    for (int t = 0; t < trials; ++t) {
        SolveConfig cfg;
        cfg.seed = derive_seed(7, t);
        cfg.max_iters = 800;
        cfg.record_every = 50;
        cfg.target_residual = 1e-300;
        const auto r = kaczmarz_solve(sys, x0, cfg);
        for (const auto& p : r.trace.points) {
            for (int c = 0; c < 3; ++c) {
                if (p.iter != checkpoints[c]) continue;
                const double ratio = p.error_sq / e0;
                sum[c] += ratio;
                sum_sq[c] += ratio * ratio;
            }
        }
    }
    for (int c = 0; c < 3; ++c) {
        const double mean = sum[c] / trials;
        const double var = std::max(0.0, sum_sq[c] / trials - mean * mean);
        const double se = std::sqrt(var / (trials - 1));
        const double bound = std::pow(1.0 - smin * smin / frob, static_cast<double>(checkpoints[c]));
        CHECK(mean <= bound + 3.0 * se);
    }
}

TEST_CASE("precondition_then_solve: zero walk steps gives identical traces") {
    const LinearSystem sys = random_consistent(5, 10, 10);
    SolveConfig cfg;
    cfg.seed = 4;
    const auto r = precondition_then_solve(sys, 0, cfg);
    CHECK(r.raw == r.preconditioned);
    CHECK(r.sigma_min_before == r.sigma_min_after);
}

TEST_CASE("precondition_then_solve: orthogonal input keeps sigma_min at 1") {
    const LinearSystem sys{Matrix::identity(5), {1, 2, 3, 4, 5}, Vector{1, 2, 3, 4, 5}};
    SolveConfig cfg;
    cfg.seed = 5;
    const auto r = precondition_then_solve(sys, 100, cfg);
    CHECK(r.sigma_min_before == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.sigma_min_after == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(precondition_then_solve(LinearSystem{Matrix::identity(2), {1, 1}, std::nullopt}, 5, cfg),
                    WalkError);
}

TEST_CASE("precondition_then_solve: walking first helps on ill-conditioned instances") {
    constexpr std::size_t n = 20;
    int wins = 0, total = 0;
    for (std::uint64_t seed = 1; total < 50; ++seed) {
        const LinearSystem sys = random_consistent(seed, n, n);
        if (singular_values(sys.a).min() > 0.05) continue;
        SolveConfig cfg;
        cfg.seed = derive_seed(seed, 2);
        cfg.max_iters = 5000000;
        cfg.record_every = 1000000;
        const auto r = precondition_then_solve(sys, 4 * n * n, cfg);
        ++total;
        CHECK(r.preconditioned.converged);
        if (r.preconditioned.iterations < r.raw.iterations) ++wins;
    }
    CHECK(wins >= 45);
}

TEST_CASE("write_trace_csv") {
    SolveTrace t;
    t.points = {{0, 4.0}, {100, 0.25}};
    std::ostringstream out;
    write_trace_csv(out, t);
    CHECK(out.str() == "iter,error_sq\n0,4\n100,0.25\n");
}

TEST_CASE("solve config validation") {
    SolveConfig cfg;
    cfg.target_residual = 0.0;
    CHECK_THROWS_AS(cfg.validate(), WalkError);
    cfg = {};
    cfg.record_every = 0;
    CHECK_THROWS_AS(cfg.validate(), WalkError);
}
