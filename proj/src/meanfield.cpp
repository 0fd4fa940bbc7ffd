#include "kkw/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "kkw/csv.hpp"
#include "kkw/walk.hpp"

namespace kkw {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;

void rk4_step(std::vector<double>& u, double h, std::vector<double>& scratch) {
    DensityGrid stage{u, 0.0};
    const std::vector<double> k1 = meanfield_rhs(stage);
    for (std::size_t p = 0; p < u.size(); ++p) stage.u[p] = u[p] + 0.5 * h * k1[p];
    const std::vector<double> k2 = meanfield_rhs(stage);
    for (std::size_t p = 0; p < u.size(); ++p) stage.u[p] = u[p] + 0.5 * h * k2[p];
    const std::vector<double> k3 = meanfield_rhs(stage);
    for (std::size_t p = 0; p < u.size(); ++p) stage.u[p] = u[p] + h * k3[p];
    const std::vector<double> k4 = meanfield_rhs(stage);
    scratch.resize(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) {
        scratch[p] = u[p] + h / 6.0 * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]);
    }
    u.swap(scratch);
}

// Clamps round-off negativity; anything below -1e-12 or above 1e6 is a failure.
void check_state(std::vector<double>& u) {
    for (double& v : u) {
        if (!std::isfinite(v) || std::abs(v) > 1e6) {
            throw MeanFieldError("mean-field integration blew up");
        }
        if (v < 0.0) {
            if (v < -1e-12) throw MeanFieldError("mean-field density became negative");
            v = 0.0;
        }
    }
}

}  // namespace

double wrap_angle(double theta) {
    double r = std::fmod(theta, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

CircleEnsemble CircleEnsemble::uniform_random(Rng& rng, std::size_t n) {
    CircleEnsemble ens;
    ens.angles.resize(n);
    for (double& a : ens.angles) a = wrap_angle(kTwoPi * rng.uniform01());
    return ens;
}

Matrix CircleEnsemble::to_matrix() const {
    Matrix a(angles.size(), 2);
    for (std::size_t i = 0; i < angles.size(); ++i) {
        a(i, 0) = std::cos(angles[i]);
        a(i, 1) = std::sin(angles[i]);
    }
    return a;
}

CircleEnsemble CircleEnsemble::from_matrix(const Matrix& a) {
    if (a.cols() != 2) throw MeanFieldError("circle ensemble needs an n x 2 matrix");
    CircleEnsemble ens;
    ens.angles.resize(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) ens.angles[i] = wrap_angle(std::atan2(a(i, 1), a(i, 0)));
    return ens;
}

bool circle_step_in_place(CircleEnsemble& ens, std::size_t i, std::size_t j, double tol) {
    if (i == j) throw MeanFieldError("circle_step: particles must differ");
    if (i >= ens.size() || j >= ens.size()) throw MeanFieldError("circle_step: index out of range");
    const double s = std::sin(ens.angles[j] - ens.angles[i]);
    if (std::abs(s) < tol) return false;
    ens.angles[j] = wrap_angle(ens.angles[i] + (s > 0.0 ? kHalfPi : -kHalfPi));
    return true;
}

CircleEnsemble circle_step(CircleEnsemble ens, std::size_t i, std::size_t j, double tol) {
    circle_step_in_place(ens, i, j, tol);
    return ens;
}

double order_parameter_4(const CircleEnsemble& ens) {
    if (ens.angles.empty()) throw MeanFieldError("order_parameter_4: empty ensemble");
    double re = 0.0;
    double im = 0.0;
    for (double a : ens.angles) {
        re += std::cos(4.0 * a);
        im += std::sin(4.0 * a);
    }
    const auto n = static_cast<double>(ens.size());
    return std::min(1.0, std::hypot(re, im) / n);
}

CircleRunResult run_circle(CircleEnsemble& ens, std::uint64_t steps, std::uint64_t seed,
                           double tol, std::uint64_t record_every) {
    if (record_every == 0) throw MeanFieldError("run_circle: record_every must be positive");
    Rng rng(seed);
    CircleRunResult out;
    out.order_trace.emplace_back(0, order_parameter_4(ens));
    for (std::uint64_t k = 1; k <= steps; ++k) {
        const auto [i, j] = sample_pair(rng, ens.size());
        if (!circle_step_in_place(ens, i, j, tol)) ++out.skipped;
        if (k % record_every == 0 || k == steps) out.order_trace.emplace_back(k, order_parameter_4(ens));
    }
    return out;
}

void write_angle_histogram_csv(std::ostream& out, const CircleEnsemble& ens, std::size_t bins) {
    if (bins == 0) throw MeanFieldError("histogram needs at least one bin");
    std::vector<std::uint64_t> counts(bins, 0);
    const double width = kTwoPi / static_cast<double>(bins);
    for (double a : ens.angles) {
        auto b = static_cast<std::size_t>(a / width);
        counts[std::min(b, bins - 1)]++;
    }
    out << "bin_center,count\n";
    for (std::size_t b = 0; b < bins; ++b) {
        out << csv::format((static_cast<double>(b) + 0.5) * width) << ',' << counts[b] << '\n';
    }
}

double DensityGrid::cell_width() const { return kTwoPi / static_cast<double>(u.size()); }

double DensityGrid::mass() const {
    double s = 0.0;
    for (double v : u) s += v;
    return s * cell_width();
}

void DensityGrid::validate() const {
    if (u.size() < 4 || u.size() % 4 != 0) {
        throw MeanFieldError("density grid size must be a positive multiple of 4");
    }
    for (double v : u) {
        if (!std::isfinite(v) || v < 0.0) throw MeanFieldError("density must be finite and nonnegative");
    }
    if (std::abs(mass() - 1.0) > 1e-9) throw MeanFieldError("density must have unit mass");
}

DensityGrid DensityGrid::uniform(std::size_t n_cells) {
    return DensityGrid{std::vector<double>(n_cells, 1.0 / kTwoPi), 0.0};
}

DensityGrid DensityGrid::perturbed(std::size_t n_cells, int mode, double eps) {
    DensityGrid g = uniform(n_cells);
    const double h = g.cell_width();
    for (std::size_t p = 0; p < n_cells; ++p) {
        g.u[p] += eps * std::cos(mode * h * static_cast<double>(p));
    }
    return g;
}

DensityGrid DensityGrid::from_ensemble(const CircleEnsemble& ens, std::size_t n_cells) {
    if (ens.angles.empty()) throw MeanFieldError("from_ensemble: empty ensemble");
    DensityGrid g{std::vector<double>(n_cells, 0.0), 0.0};
    const double h = g.cell_width();
    for (double a : ens.angles) {
        auto p = static_cast<std::size_t>(std::floor((a + 0.5 * h) / h));
        g.u[p % n_cells] += 1.0;
    }
    const double scale = 1.0 / (static_cast<double>(ens.size()) * h);
    for (double& v : g.u) v *= scale;
    return g;
}

std::vector<double> meanfield_rhs(const DensityGrid& grid) {
    const std::size_t n = grid.size();
    if (n < 4 || n % 4 != 0) throw MeanFieldError("meanfield_rhs: grid size must be a multiple of 4");
    const std::size_t q = n / 4;
    const double h = grid.cell_width();
    const auto& u = grid.u;
    auto at = [&](std::size_t p, std::size_t offset) { return u[(p + offset) % n]; };

    // Half windows [x - pi/2, x + pi/2] and [x + pi/2, x + 3pi/2] by the
    // trapezoid rule; offsets below are taken mod n, so the sums for cell p
    // are formed in the same order for every p.
    std::vector<double> rate(n);
    for (std::size_t p = 0; p < n; ++p) {
        double near = 0.5 * at(p, n - q);
        for (std::size_t d = n - q + 1; d < n + q; ++d) near += at(p, d);
        near += 0.5 * at(p, q);

        double far = 0.5 * at(p, q);
        for (std::size_t d = q + 1; d < 3 * q; ++d) far += at(p, d);
        far += 0.5 * at(p, 3 * q);

        rate[p] = -u[p] + at(p, q) * (near * h) + at(p, n - q) * (far * h);
    }
    return rate;
}

DensityGrid meanfield_integrate(DensityGrid grid, double t_end, double dt) {
    grid.validate();
    if (!(dt > 0.0 && dt <= 0.01)) throw MeanFieldError("meanfield_integrate: need 0 < dt <= 0.01");
    if (!(t_end >= grid.t)) throw MeanFieldError("meanfield_integrate: t_end before current time");

    const double t0 = grid.t;
    const double mass0 = grid.mass();
    const auto steps = static_cast<std::uint64_t>(std::ceil((t_end - t0) / dt - 1e-9));
    std::vector<double> scratch;
    for (std::uint64_t s = 1; s <= steps; ++s) {
        const double t_prev = t0 + static_cast<double>(s - 1) * dt;
        const double h = (s == steps) ? t_end - t_prev : dt;
        rk4_step(grid.u, h, scratch);
        check_state(grid.u);
        if (std::abs(grid.mass() - mass0) > 1e-6) throw MeanFieldError("mean-field mass drifted");
    }
    grid.t = t_end;
    return grid;
}

std::complex<double> fourier_mode(const DensityGrid& grid, int mode) {
    const double h = grid.cell_width();
    std::complex<double> acc = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        acc += grid.u[p] * std::polar(1.0, -mode * h * static_cast<double>(p));
    }
    return acc * (2.0 / static_cast<double>(grid.size()));
}

double fourier_decay_rate(const DensityGrid& initial, int mode, double t_end, double dt) {
    initial.validate();
    if (mode < 1) throw MeanFieldError("fourier_decay_rate: mode must be >= 1");
    if (!(dt > 0.0 && dt <= 0.01)) throw MeanFieldError("fourier_decay_rate: need 0 < dt <= 0.01");
    const double base = 1.0 / kTwoPi;
    for (double v : initial.u) {
        if (std::abs(v - base) > 1e-3 + 1e-15) {
            throw MeanFieldError("fourier_decay_rate: perturbation exceeds the linear regime (1e-3)");
        }
    }
    const auto steps = static_cast<std::uint64_t>(std::llround((t_end - initial.t) / dt));
    if (steps < 20) throw MeanFieldError("fourier_decay_rate: too few steps to fit");

    const auto skip = static_cast<std::uint64_t>(std::ceil(0.05 * static_cast<double>(steps)));
    std::vector<double> u = initial.u;
    std::vector<double> scratch;
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t count = 0;
    for (std::uint64_t s = 0; s <= steps; ++s) {
        if (s > 0) {
            rk4_step(u, dt, scratch);
            check_state(u);
        }
        if (s < skip) continue;
        const double amp = std::abs(fourier_mode(DensityGrid{u, 0.0}, mode));
        if (!(amp > 0.0)) throw MeanFieldError("fourier_decay_rate: mode amplitude vanished");
        const double t = initial.t + static_cast<double>(s) * dt;
        const double y = std::log(amp);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++count;
    }
    const auto c = static_cast<double>(count);
    const double denom = c * stt - st * st;
    if (count < 2 || !(denom > 0.0)) throw MeanFieldError("fourier_decay_rate: degenerate fit");
    return -(c * sty - st * sy) / denom;
}

void write_density_csv(std::ostream& out, const DensityGrid& grid) {
    std::vector<std::string> cols{"t"};
    csv::append_indexed(cols, "u", grid.size(), true);
    csv::write_header(out, cols);
    std::vector<double> row{grid.t};
    row.insert(row.end(), grid.u.begin(), grid.u.end());
    csv::write_row(out, row);
}

}  // namespace kkw
