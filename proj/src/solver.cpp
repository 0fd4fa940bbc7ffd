#include "kkw/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "kkw/csv.hpp"

namespace kkw {

namespace {

void project_in_place(std::span<double> y, std::span<const double> row, double rhs,
                      double row_norm_sq) {
    const double t = (rhs - dot(row, y)) / row_norm_sq;
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += t * row[k];
}

double distance_sq(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

double residual_sq(const LinearSystem& sys, std::span<const double> x) {
    const Vector ax = matvec(sys.a, x);
    return distance_sq(ax, sys.b);
}

}  // namespace

void SolveConfig::validate() const {
    if (max_iters < 1) throw WalkError("solve config: max_iters must be >= 1");
    if (!(target_residual > 0.0)) throw WalkError("solve config: target_residual must be > 0");
    if (record_every < 1) throw WalkError("solve config: record_every must be >= 1");
}

Vector project_onto_row(std::span<const double> y, std::span<const double> row, double rhs) {
    if (y.size() != row.size()) throw LinalgError("project_onto_row: length mismatch");
    const double nsq = dot(row, row);
    if (nsq == 0.0) throw LinalgError("project_onto_row: zero row");
    Vector out(y.begin(), y.end());
    project_in_place(out, row, rhs, nsq);
    return out;
}

SolveResult kaczmarz_solve(const LinearSystem& sys, std::span<const double> x0,
                           const SolveConfig& cfg) {
    cfg.validate();
    const std::size_t m = sys.rows();
    if (sys.b.size() != m) throw LinalgError("kaczmarz_solve: rhs length mismatch");
    if (x0.size() != sys.cols()) throw LinalgError("kaczmarz_solve: x0 length mismatch");
    if (sys.x_ref && sys.x_ref->size() != sys.cols()) {
        throw LinalgError("kaczmarz_solve: reference solution length mismatch");
    }

    // Cumulative row weights ||A_i||^2 for inverse-CDF sampling.
    std::vector<double> norms_sq(m);
    std::vector<double> cumulative(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        norms_sq[i] = dot(sys.a.row(i), sys.a.row(i));
        total += norms_sq[i];
        cumulative[i] = total;
    }
    if (!(total > 0.0)) throw LinalgError("kaczmarz_solve: matrix is zero");

    const bool has_ref = sys.x_ref.has_value();
    auto error_sq = [&](std::span<const double> x) {
        return has_ref ? distance_sq(x, *sys.x_ref) : residual_sq(sys, x);
    };
    const double target_sq = cfg.target_residual * cfg.target_residual;

    Rng rng(cfg.seed);
    SolveResult out{Vector(x0.begin(), x0.end()), {}};
    auto& trace = out.trace;

    double err = error_sq(out.x);
    trace.points.push_back({0, err});
    if (err <= target_sq) {
        trace.converged = true;
        return out;
    }

    for (std::uint64_t it = 1; it <= cfg.max_iters; ++it) {
        const double u = rng.uniform01() * total;
        auto pos = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (pos == cumulative.end()) --pos;
        const auto i = static_cast<std::size_t>(pos - cumulative.begin());
        project_in_place(out.x, sys.a.row(i), sys.b[i], norms_sq[i]);

        const bool record_point = it % cfg.record_every == 0 || it == cfg.max_iters;
        if (has_ref || record_point) {
            err = error_sq(out.x);
            trace.converged = err <= target_sq;
        }
        if (record_point || trace.converged) trace.points.push_back({it, err});
        trace.iterations = it;
        if (trace.converged) break;
    }
    return out;
}

PreconditionComparison precondition_then_solve(const LinearSystem& sys,
                                               std::uint64_t walk_steps,
                                               const SolveConfig& cfg) {
    if (!sys.x_ref) throw WalkError("precondition_then_solve: needs a reference solution");
    const Vector x0(sys.cols(), 0.0);

    PreconditionComparison out;
    out.sigma_min_before = singular_values(sys.a).min();
    out.raw = kaczmarz_solve(sys, x0, cfg).trace;

    WalkConfig wc;
    wc.seed = derive_seed(cfg.seed, 1);
    wc.steps = walk_steps;
    wc.snapshot_every = std::max<std::uint64_t>(walk_steps, 1);
    WalkResult walked = run_walk(sys, wc, false);
    out.sigma_min_after = walked.snapshots.back().sigmas.min();
    out.preconditioned = kaczmarz_solve(walked.final_system, x0, cfg).trace;
    return out;
}

void write_trace_csv(std::ostream& out, const SolveTrace& trace) {
    out << "iter,error_sq\n";
    for (const auto& p : trace.points) out << p.iter << ',' << csv::format(p.error_sq) << '\n';
}

}  // namespace kkw
