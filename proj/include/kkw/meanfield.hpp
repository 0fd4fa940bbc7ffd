#pragma once

// The n x 2 case. Unit rows are points on the circle, stored as angles; the
// walk step sends theta_j to theta_i +- pi/2. For many particles the angle
// density u(t, x) is modelled by
//
//   du/dt = -u(x) + u(x + pi/2) I(x - pi/2, x + pi/2) + u(x - pi/2) I(x + pi/2, x + 3pi/2)
//
// with I(a, b) the mass of u on [a, b]. Uniform density is a steady state and
// the linearization damps mode k at rate 2 sin^2(k pi / 4).

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kkw/linalg.hpp"
#include "kkw/rng.hpp"

namespace kkw {

class MeanFieldError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Angles in [0, 2 pi).
struct CircleEnsemble {
    std::vector<double> angles;

    std::size_t size() const noexcept { return angles.size(); }

    static CircleEnsemble uniform_random(Rng& rng, std::size_t n);
    /// Row i = (cos theta_i, sin theta_i).
    Matrix to_matrix() const;
    static CircleEnsemble from_matrix(const Matrix& a);
};

/// Maps any real angle into [0, 2 pi).
double wrap_angle(double theta);

/// Returns true when the step moved theta_j, false when |sin(theta_j - theta_i)| < tol.
bool circle_step_in_place(CircleEnsemble& ens, std::size_t i, std::size_t j, double tol);
CircleEnsemble circle_step(CircleEnsemble ens, std::size_t i, std::size_t j, double tol);

/// |mean of exp(4 i theta)|; 1 exactly when all points sit on one rotated
/// copy of the four axis directions.
double order_parameter_4(const CircleEnsemble& ens);

struct CircleRunResult {
    std::vector<std::pair<std::uint64_t, double>> order_trace;  // (step, order parameter)
    std::uint64_t skipped = 0;
};

/// Runs `steps` uniformly sampled particle steps, recording the order
/// parameter at step 0, every `record_every` steps and at the end.
CircleRunResult run_circle(CircleEnsemble& ens, std::uint64_t steps, std::uint64_t seed,
                           double tol = 1e-9, std::uint64_t record_every = 1000);

/// "bin_center,count" histogram of angles over [0, 2 pi).
void write_angle_histogram_csv(std::ostream& out, const CircleEnsemble& ens, std::size_t bins);

/// u at cell points x_p = 2 pi p / N, N divisible by 4.
struct DensityGrid {
    std::vector<double> u;
    double t = 0.0;

    std::size_t size() const noexcept { return u.size(); }
    double cell_width() const;
    /// sum(u) * 2 pi / N.
    double mass() const;
    /// Throws MeanFieldError unless N % 4 == 0, u >= 0 and mass is 1 within 1e-9.
    void validate() const;

    static DensityGrid uniform(std::size_t n_cells);
    /// 1/(2 pi) + eps cos(mode x).
    static DensityGrid perturbed(std::size_t n_cells, int mode, double eps);
    /// Normalized histogram of particle angles on the grid cells.
    static DensityGrid from_ensemble(const CircleEnsemble& ens, std::size_t n_cells);
};

std::vector<double> meanfield_rhs(const DensityGrid& grid);

/// Classical RK4 up to t_end (the last step is shortened to land on it).
DensityGrid meanfield_integrate(DensityGrid grid, double t_end, double dt);

/// Complex Fourier coefficient (2/N) sum_p u_p exp(-i mode x_p); its
/// modulus is the amplitude of cos/sin(mode x).
std::complex<double> fourier_mode(const DensityGrid& grid, int mode);

/// Integrates from `initial` (a <= 1e-3 perturbation of the uniform density)
/// and fits the slope of log|mode amplitude| against t, skipping the first 5%
/// of steps. Returns the decay rate (positive when the mode decays).
double fourier_decay_rate(const DensityGrid& initial, int mode, double t_end, double dt);

/// "t,u_0,...,u_{N-1}".
void write_density_csv(std::ostream& out, const DensityGrid& grid);

}  // namespace kkw
