#pragma once

// Randomized Kaczmarz with rows drawn proportionally to ||A_i||^2, and the
// walk-then-solve comparison.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kkw/walk.hpp"

namespace kkw {

struct SolveConfig {
    std::uint64_t seed = 0;
    std::uint64_t max_iters = 100000;
    /// Stop once the error metric (||x_k - x_ref|| with a reference
    /// solution, ||A x_k - b|| otherwise) is at or below this value.
    double target_residual = 1e-6;
    std::uint64_t record_every = 100;

    void validate() const;
};

struct TracePoint {
    std::uint64_t iter = 0;
    double error_sq = 0.0;

    friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

struct SolveTrace {
    std::vector<TracePoint> points;
    bool converged = false;
    /// Iteration at which the run stopped.
    std::uint64_t iterations = 0;

    friend bool operator==(const SolveTrace&, const SolveTrace&) = default;
};

struct SolveResult {
    Vector x;
    SolveTrace trace;
};

/// y + (b_i - <A_i, y>) / ||A_i||^2 * A_i.
Vector project_onto_row(std::span<const double> y, std::span<const double> row, double rhs);

SolveResult kaczmarz_solve(const LinearSystem& sys, std::span<const double> x0,
                           const SolveConfig& cfg);

struct PreconditionComparison {
    SolveTrace raw;
    SolveTrace preconditioned;
    double sigma_min_before = 0.0;
    double sigma_min_after = 0.0;
};

/// Solves sys as given and after `walk_steps` walk steps, both from x0 = 0
/// with the same solver seed. The walk uses a stream derived from cfg.seed.
PreconditionComparison precondition_then_solve(const LinearSystem& sys,
                                               std::uint64_t walk_steps,
                                               const SolveConfig& cfg);

/// "iter,error_sq".
void write_trace_csv(std::ostream& out, const SolveTrace& trace);

}  // namespace kkw
