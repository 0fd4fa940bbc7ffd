#include "kkw/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace kkw {

namespace {

void require_finite(const Matrix& a, const char* what) {
    if (!a.all_finite()) {
        throw LinalgError(std::string(what) + ": matrix has non-finite entries");
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
        throw LinalgError("matrix dimensions must be positive");
    }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows == 0 || cols == 0) {
        throw LinalgError("matrix dimensions must be positive");
    }
    if (data_.size() != rows * cols) {
        throw LinalgError("matrix entry count " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw LinalgError("dot: length mismatch");
    }
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Vector matvec(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) {
        throw LinalgError("matvec: vector length " + std::to_string(x.size()) +
                          " != matrix cols " + std::to_string(a.cols()));
    }
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

Vector matvec_transposed(const Matrix& a, std::span<const double> y) {
    if (y.size() != a.rows()) {
        throw LinalgError("matvec_transposed: vector length " + std::to_string(y.size()) +
                          " != matrix rows " + std::to_string(a.rows()));
    }
    Vector x(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) x[k] += y[i] * r[k];
    }
    return x;
}

double gram_entry(const Matrix& a, std::size_t i, std::size_t j) {
    if (i >= a.rows() || j >= a.rows()) {
        throw LinalgError("gram_entry: row index out of range");
    }
    return dot(a.row(i), a.row(j));
}

SingularValues singular_values(const Matrix& a) {
    require_finite(a, "singular_values");
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();

    // Column-major working copy: column k occupies work[k*m, (k+1)*m).
    std::vector<double> work(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < n; ++k) work[k * m + i] = a(i, k);

    auto col = [&](std::size_t k) { return work.data() + k * m; };
    auto col_dot = [m](const double* u, const double* v) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += u[i] * v[i];
        return s;
    };

    constexpr double kTol = 1e-15;
    constexpr int kMaxSweeps = 80;
    std::vector<double> sq(n);

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        for (std::size_t k = 0; k < n; ++k) sq[k] = col_dot(col(k), col(k));
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = sq[p];
                const double beta = sq[q];
                if (alpha == 0.0 || beta == 0.0) continue;
                double* cp = col(p);
                double* cq = col(q);
                const double gamma = col_dot(cp, cq);
                if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t =
                    std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double u = cp[i];
                    const double v = cq[i];
                    cp[i] = c * u - s * v;
                    cq[i] = s * u + c * v;
                }
                sq[p] = alpha - t * gamma;
                sq[q] = beta + t * gamma;
            }
        }
        if (!rotated) break;
    }

    SingularValues out;
    out.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.values[k] = std::sqrt(col_dot(col(k), col(k)));
    std::sort(out.values.begin(), out.values.end(), std::greater<>());
    return out;
}

double frobenius_sq(const Matrix& a) {
    require_finite(a, "frobenius_sq");
    const auto d = a.data();
    return std::inner_product(d.begin(), d.end(), d.begin(), 0.0);
}

Matrix normalize_rows(const Matrix& a) {
    require_finite(a, "normalize_rows");
    Matrix out = a;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        const double len = norm2(r);
        if (len == 0.0) {
            throw LinalgError("normalize_rows: row " + std::to_string(i) + " is zero");
        }
        for (double& v : r) v /= len;
    }
    return out;
}

}  // namespace kkw
