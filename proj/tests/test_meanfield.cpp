#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kkw/meanfield.hpp"
#include "kkw/walk.hpp"

using namespace kkw;

namespace {

constexpr double pi = std::numbers::pi;

double angle_distance(double a, double b) {
    const double d = std::abs(wrap_angle(a) - wrap_angle(b));
    return std::min(d, 2.0 * pi - d);
}

}  // namespace

TEST_CASE("wrap_angle") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(2.0 * pi) == 0.0);
    CHECK(wrap_angle(-0.5) == doctest::Approx(2.0 * pi - 0.5).epsilon(1e-15));
    CHECK(wrap_angle(7.0 * pi) == doctest::Approx(pi).epsilon(1e-14));
    for (double a : {-1e-18, -100.0, 1e5}) {
        const double w = wrap_angle(a);
        CHECK(w >= 0.0);
        CHECK(w < 2.0 * pi);
    }
}

TEST_CASE("circle_step examples") {
    CircleEnsemble ens{{0.0, 0.3}};
    CHECK(circle_step_in_place(ens, 0, 1, 1e-9));
    CHECK(ens.angles[1] == doctest::Approx(pi / 2).epsilon(1e-15));

    ens = CircleEnsemble{{1.0, 1.0 - 0.2}};
    circle_step_in_place(ens, 0, 1, 1e-9);
    CHECK(angle_distance(ens.angles[1], 1.0 - pi / 2) <= 1e-15);

    // Antipodal and coincident points are degenerate.
    ens = CircleEnsemble{{0.4, 0.4 + pi}};
    CHECK_FALSE(circle_step_in_place(ens, 0, 1, 1e-9));
    CHECK(ens.angles[1] == 0.4 + pi);

    const auto copy = circle_step(CircleEnsemble{{0.0, 1.0, 2.0}}, 2, 0, 1e-9);
    CHECK(angle_distance(copy.angles[0], 2.0 - pi / 2) <= 1e-15);

    CHECK_THROWS_AS(circle_step_in_place(ens, 1, 1, 1e-9), MeanFieldError);
    CHECK_THROWS_AS(circle_step_in_place(ens, 0, 2, 1e-9), MeanFieldError);
}

TEST_CASE("circle_step agrees with walk_step on n x 2 systems") {
    Rng rng(808);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(9);
        CircleEnsemble ens = CircleEnsemble::uniform_random(rng, n);
        const auto [i, j] = sample_pair(rng, n);

        LinearSystem sys{ens.to_matrix(), Vector(n, 0.0), std::nullopt};
        const auto rec = walk_step(sys, i, j, WalkConfig{});
        const bool moved = circle_step_in_place(ens, i, j, 1e-6);
        CHECK(moved == !rec.skipped);

        const Matrix expect = ens.to_matrix();
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(sys.a(r, c) - expect(r, c)) <= 1e-12);
    }
}

TEST_CASE("matrix round trip") {
    const CircleEnsemble ens{{0.0, 1.0, 3.0, 6.0}};
    const auto back = CircleEnsemble::from_matrix(ens.to_matrix());
    for (std::size_t k = 0; k < 4; ++k) CHECK(angle_distance(back.angles[k], ens.angles[k]) <= 1e-15);
    CHECK_THROWS_AS(CircleEnsemble::from_matrix(Matrix(3, 3)), MeanFieldError);
}

TEST_CASE("order_parameter_4") {
    CHECK(order_parameter_4(CircleEnsemble{{0.3}}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(order_parameter_4(CircleEnsemble{{0.3, 0.3 + pi / 2, 0.3 + pi, 0.3 + 1.5 * pi}}) ==
          doctest::Approx(1.0).epsilon(1e-14));
    // Angles pi/4 apart cancel in mode 4.
    CHECK(order_parameter_4(CircleEnsemble{{0.0, pi / 4}}) <= 1e-15);

    for (std::size_t k : {1u, 5u, 20u}) {
        const std::size_t n = 4 * k + 2;
        CircleEnsemble grid;
        for (std::size_t p = 0; p < n; ++p) grid.angles.push_back(2.0 * pi * p / n);
        CHECK(order_parameter_4(grid) <= 1e-13);
    }
    CHECK_THROWS_AS(order_parameter_4(CircleEnsemble{}), MeanFieldError);
}

TEST_CASE("run_circle: order parameter grows as particles cluster") {
    std::vector<double> start, end;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        CircleEnsemble ens = CircleEnsemble::uniform_random(rng, 100);
        const auto res = run_circle(ens, 20000, derive_seed(seed, 1), 1e-9, 5000);
        REQUIRE(res.order_trace.size() == 5);
        start.push_back(res.order_trace.front().second);
        end.push_back(res.order_trace.back().second);
    }
    std::sort(start.begin(), start.end());
    std::sort(end.begin(), end.end());
    CHECK(end[2] > start[2]);
}

TEST_CASE("density grid construction") {
    const auto u = DensityGrid::uniform(64);
    CHECK(u.mass() == doctest::Approx(1.0).epsilon(1e-14));
    u.validate();
    DensityGrid::perturbed(64, 3, 0.1).validate();
    CHECK_THROWS_AS(DensityGrid::uniform(30).validate(), MeanFieldError);

    const CircleEnsemble ens{{0.0, 0.01, pi}};
    const auto g = DensityGrid::from_ensemble(ens, 8);
    CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g.u[0] == doctest::Approx(2.0 / 3.0 / g.cell_width()).epsilon(1e-14));
    CHECK(g.u[4] == doctest::Approx(1.0 / 3.0 / g.cell_width()).epsilon(1e-14));
}

TEST_CASE("meanfield_rhs: steady states and conservation") {
    for (double v : meanfield_rhs(DensityGrid::uniform(64))) CHECK(std::abs(v) <= 1e-15);
    for (double v : meanfield_rhs(DensityGrid::perturbed(64, 4, 0.05))) CHECK(std::abs(v) <= 1e-14);

    Rng rng(3);
    DensityGrid g = DensityGrid::uniform(128);
    for (double& v : g.u) v *= 0.5 + rng.uniform01();
    const double mass = g.mass();
    for (double& v : g.u) v /= mass;
    const auto rate = meanfield_rhs(g);
    double total = 0.0, scale = 0.0;
    for (double v : rate) {
        total += v;
        scale += std::abs(v);
    }
    CHECK(std::abs(total) <= 1e-13 * scale);
    CHECK_THROWS_AS(meanfield_rhs(DensityGrid{std::vector<double>(6, 1.0), 0.0}), MeanFieldError);
}

TEST_CASE("meanfield_integrate") {
    const auto u = meanfield_integrate(DensityGrid::uniform(64), 1.0, 0.01);
    CHECK(u.t == 1.0);
    for (double v : u.u) CHECK(v == doctest::Approx(1.0 / (2.0 * pi)).epsilon(1e-13));

    // Mode 1 decays like exp(-2 sin^2(pi/4) t) = exp(-t).
    const auto m1 = meanfield_integrate(DensityGrid::perturbed(128, 1, 1e-3), 2.0, 0.005);
    CHECK(std::abs(fourier_mode(m1, 1)) == doctest::Approx(1e-3 * std::exp(-2.0)).epsilon(0.02));

    const auto m4 = meanfield_integrate(DensityGrid::perturbed(128, 4, 1e-3), 2.0, 0.005);
    CHECK(std::abs(std::abs(fourier_mode(m4, 4)) / 1e-3 - 1.0) < 0.05);

    // Landing exactly on t_end with a shortened last step.
    CHECK(meanfield_integrate(DensityGrid::uniform(16), 0.123, 0.01).t == 0.123);
}

TEST_CASE("meanfield_integrate: mass is conserved") {
    DensityGrid g = DensityGrid::perturbed(256, 1, 0.1);
    for (std::size_t p = 0; p < g.size(); ++p) g.u[p] += 0.05 * std::sin(3.0 * g.cell_width() * p);
    const auto out = meanfield_integrate(g, 10.0, 0.01);
    CHECK(std::abs(out.mass() - 1.0) <= 1e-9);
}

TEST_CASE("meanfield_integrate: translation equivariance is exact") {
    constexpr std::size_t n = 64;
    DensityGrid g = DensityGrid::perturbed(n, 1, 0.05);
    for (std::size_t p = 0; p < n; ++p) g.u[p] += 0.02 * std::cos(3.0 * g.cell_width() * p + 0.4);
    DensityGrid shifted = g;
    std::rotate(shifted.u.begin(), shifted.u.begin() + n / 8, shifted.u.end());

    const auto a = meanfield_integrate(g, 0.5, 0.01);
    const auto b = meanfield_integrate(shifted, 0.5, 0.01);
    for (std::size_t p = 0; p < n; ++p) CHECK(b.u[p] == a.u[(p + n / 8) % n]);
}

TEST_CASE("meanfield_integrate: errors") {
    CHECK_THROWS_AS(meanfield_integrate(DensityGrid::uniform(64), 1.0, 0.0), MeanFieldError);
    CHECK_THROWS_AS(meanfield_integrate(DensityGrid::uniform(64), 1.0, 0.02), MeanFieldError);
    CHECK_THROWS_AS(meanfield_integrate(DensityGrid{std::vector<double>(10, 1.0 / (2 * pi)), 0.0}, 1.0, 0.01),
                    MeanFieldError);
    DensityGrid neg = DensityGrid::uniform(8);
    neg.u[0] = -0.01;
    neg.u[1] += 0.01;
    CHECK_THROWS_AS(meanfield_integrate(neg, 1.0, 0.01), MeanFieldError);
}

TEST_CASE("fourier_decay_rate matches the linear rates") {
    for (int k = 1; k <= 3; ++k) {
        const double expect = 2.0 * std::pow(std::sin(k * pi / 4.0), 2);
        const double rate = fourier_decay_rate(DensityGrid::perturbed(128, k, 1e-4), k, 2.0, 0.005);
        CHECK(rate == doctest::Approx(expect).epsilon(0.02));
    }
    CHECK(std::abs(fourier_decay_rate(DensityGrid::perturbed(128, 4, 1e-4), 4, 2.0, 0.005)) <= 0.02);

    CHECK_THROWS_AS(fourier_decay_rate(DensityGrid::perturbed(128, 1, 0.01), 1, 2.0, 0.005), MeanFieldError);
    CHECK_THROWS_AS(fourier_decay_rate(DensityGrid::perturbed(128, 1, 1e-4), 1, 0.05, 0.005), MeanFieldError);
    CHECK_THROWS_AS(fourier_decay_rate(DensityGrid::perturbed(128, 1, 1e-4), 0, 2.0, 0.005), MeanFieldError);
}

TEST_CASE("CSV output") {
    std::ostringstream density;
    write_density_csv(density, DensityGrid::uniform(4));
    CHECK(density.str().rfind("t,u_0,u_1,u_2,u_3\n0,", 0) == 0);

    std::ostringstream hist;
    write_angle_histogram_csv(hist, CircleEnsemble{{0.1, 0.2, 4.0}}, 2);
    CHECK(hist.str().find("bin_center,count\n") == 0);
    CHECK(hist.str().find(",2\n") != std::string::npos);
    CHECK(hist.str().find(",1\n") != std::string::npos);
}
