#include "kkw/walk.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "kkw/csv.hpp"

namespace kkw {

void LinearSystem::validate() const {
    if (b.size() != a.rows()) {
        throw WalkError("linear system: rhs length " + std::to_string(b.size()) +
                        " != rows " + std::to_string(a.rows()));
    }
    if (!a.all_finite() || !std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); })) {
        throw WalkError("linear system: non-finite entries");
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (std::abs(norm2(a.row(i)) - 1.0) > 1e-12) {
            throw WalkError("linear system: row " + std::to_string(i) + " is not unit length");
        }
    }
    if (x_ref) {
        if (x_ref->size() != a.cols()) {
            throw WalkError("linear system: reference solution has wrong length");
        }
        if (residual_at_reference(*this) > 1e-10) {
            throw WalkError("linear system: reference solution does not solve the system");
        }
    }
}

LinearSystem LinearSystem::consistent(const Matrix& a, Vector x_ref) {
    LinearSystem sys{normalize_rows(a), {}, std::move(x_ref)};
    sys.b = matvec(sys.a, *sys.x_ref);
    return sys;
}

void WalkConfig::validate() const {
    if (!(degenerate_tol > 0.0 && degenerate_tol < 1.0)) {
        throw WalkError("walk config: degenerate_tol must lie in (0, 1)");
    }
}

std::size_t WalkResult::skipped_count() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const StepRecord& r) { return r.skipped; }));
}

std::pair<std::size_t, std::size_t> sample_pair(Rng& rng, std::size_t m) {
    if (m < 2) throw WalkError("sample_pair: need at least two rows");
    const auto i = static_cast<std::size_t>(rng.uniform_index(m));
    std::size_t j;
    do {
        j = static_cast<std::size_t>(rng.uniform_index(m));
    } while (j == i);
    return {i, j};
}

StepRecord walk_step(LinearSystem& sys, std::size_t i, std::size_t j, const WalkConfig& cfg,
                     std::uint64_t k) {
    if (i == j) throw WalkError("walk_step: rows must differ");
    if (i >= sys.rows() || j >= sys.rows()) throw WalkError("walk_step: row index out of range");

    const auto src = sys.a.row(i);
    const auto dst = sys.a.row(j);
    const double c = std::clamp(dot(src, dst), -1.0, 1.0);
    const double gap = 1.0 - c * c;

    StepRecord rec{k, i, j, c, gap < cfg.degenerate_tol};
    if (rec.skipped) return rec;

    const double inv = 1.0 / std::sqrt(gap);
    for (std::size_t t = 0; t < dst.size(); ++t) dst[t] = (dst[t] - c * src[t]) * inv;
    double bj = (sys.b[j] - c * sys.b[i]) * inv;

    if (cfg.renormalize) {
        const double len = norm2(dst);
        for (double& v : dst) v /= len;
        bj /= len;
    }
    sys.b[j] = bj;
    return rec;
}

SpectrumSnapshot take_snapshot(const LinearSystem& sys, std::uint64_t k) {
    return {k, singular_values(sys.a), frobenius_sq(sys.a)};
}

WalkResult run_walk(LinearSystem sys, const WalkConfig& cfg, bool keep_records) {
    cfg.validate();
    if (sys.rows() < 2) throw WalkError("run_walk: need at least two rows");
    const std::uint64_t every = cfg.snapshot_every ? cfg.snapshot_every : sys.cols();

    Rng rng(cfg.seed);
    WalkResult out;
    if (keep_records) out.records.reserve(cfg.steps);
    out.snapshots.push_back(take_snapshot(sys, 0));

    for (std::uint64_t k = 1; k <= cfg.steps; ++k) {
        const auto [i, j] = sample_pair(rng, sys.rows());
        const StepRecord rec = walk_step(sys, i, j, cfg, k);
        if (keep_records) out.records.push_back(rec);
        if (k % every == 0 || k == cfg.steps) out.snapshots.push_back(take_snapshot(sys, k));
    }
    out.final_system = std::move(sys);
    return out;
}

double residual_at_reference(const LinearSystem& sys) {
    if (!sys.x_ref) throw WalkError("residual_at_reference: no reference solution");
    const Vector ax = matvec(sys.a, *sys.x_ref);
    double worst = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) worst = std::max(worst, std::abs(ax[i] - sys.b[i]));
    return worst;
}

void write_snapshots_csv(std::ostream& out, const std::vector<SpectrumSnapshot>& snaps) {
    const std::size_t n = snaps.empty() ? 0 : snaps.front().sigmas.size();
    std::vector<std::string> cols{"k"};
    csv::append_indexed(cols, "sigma", n);
    cols.emplace_back("frob_sq");
    csv::write_header(out, cols);
    std::vector<double> row;
    for (const auto& s : snaps) {
        row.assign(1, static_cast<double>(s.k));
        row.insert(row.end(), s.sigmas.values.begin(), s.sigmas.values.end());
        row.push_back(s.frob_sq);
        csv::write_row(out, row);
    }
}

void write_steps_csv(std::ostream& out, const std::vector<StepRecord>& records) {
    out << "k,i,j,c,skipped\n";
    for (const auto& r : records) {
        out << r.k << ',' << r.i << ',' << r.j << ',' << csv::format(r.c) << ','
            << (r.skipped ? 1 : 0) << '\n';
    }
}

}  // namespace kkw
