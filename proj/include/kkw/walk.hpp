#pragma once

// The Kaczmarz Kac walk: pick rows i != j uniformly at random, replace row j
// by its normalized projection onto the orthogonal complement of row i and
// co-update b_j so the solution set of Ax = b is unchanged.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "kkw/linalg.hpp"
#include "kkw/rng.hpp"

namespace kkw {

class WalkError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ax = b with unit rows. Plain value type: safe to move between threads.
struct LinearSystem {
    Matrix a;
    Vector b;
    std::optional<Vector> x_ref;

    std::size_t rows() const noexcept { return a.rows(); }
    std::size_t cols() const noexcept { return a.cols(); }

    /// Checks unit rows (1e-12) and, when x_ref is set, ||A x_ref - b||_inf <= 1e-10.
    void validate() const;

    /// Normalizes the rows of `a` (scaling b alongside) and sets b = A x_ref.
    static LinearSystem consistent(const Matrix& a, Vector x_ref);

    friend bool operator==(const LinearSystem&, const LinearSystem&) = default;
};

struct WalkConfig {
    std::uint64_t seed = 0;
    std::uint64_t steps = 0;
    double degenerate_tol = 1e-12;
    std::uint64_t snapshot_every = 0;  // 0 means "number of columns"
    bool renormalize = true;

    void validate() const;
};

struct StepRecord {
    std::uint64_t k = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    double c = 0.0;
    bool skipped = false;

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct SpectrumSnapshot {
    std::uint64_t k = 0;
    SingularValues sigmas;
    double frob_sq = 0.0;
};

struct WalkResult {
    LinearSystem final_system;
    std::vector<StepRecord> records;
    std::vector<SpectrumSnapshot> snapshots;

    std::size_t skipped_count() const;
};

/// Ordered pair (i, j), i != j, uniform over the m(m-1) choices. j is redrawn
/// until it differs from i.
std::pair<std::size_t, std::size_t> sample_pair(Rng& rng, std::size_t m);

/// Applies one update of row j against row i in place. The inner product is
/// taken once, before anything is mutated.
StepRecord walk_step(LinearSystem& sys, std::size_t i, std::size_t j, const WalkConfig& cfg,
                     std::uint64_t k = 0);

WalkResult run_walk(LinearSystem sys, const WalkConfig& cfg, bool keep_records = true);

SpectrumSnapshot take_snapshot(const LinearSystem& sys, std::uint64_t k);

/// ||A x_ref - b||_inf. Throws WalkError when x_ref is absent.
double residual_at_reference(const LinearSystem& sys);

// CSV: "k,sigma_1,...,sigma_n,frob_sq" and "k,i,j,c,skipped".
void write_snapshots_csv(std::ostream& out, const std::vector<SpectrumSnapshot>& snaps);
void write_steps_csv(std::ostream& out, const std::vector<StepRecord>& records);

}  // namespace kkw
