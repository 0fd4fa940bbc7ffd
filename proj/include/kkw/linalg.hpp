#pragma once

// Dense row-major matrix kernel shared by every other module.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kkw {

using Vector = std::vector<double>;

/// Raised on dimension mismatches, bad indices and non-finite data.
class LinalgError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense m x n matrix stored row-major. Rows are contiguous so a single row
/// is available as a span without copying.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Descending, nonnegative; one value per column of the source matrix.
struct SingularValues {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double max() const { return values.front(); }
    double min() const { return values.back(); }
    double operator[](std::size_t k) const { return values[k]; }
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

Vector matvec(const Matrix& a, std::span<const double> x);
Vector matvec_transposed(const Matrix& a, std::span<const double> y);

/// <A_i, A_j> for rows i and j.
double gram_entry(const Matrix& a, std::size_t i, std::size_t j);

/// One-sided (Hestenes) Jacobi SVD. High relative accuracy, also for the
/// small singular values the walk is meant to lift.
SingularValues singular_values(const Matrix& a);

double frobenius_sq(const Matrix& a);

/// Throws LinalgError on a zero (or non-finite) row.
Matrix normalize_rows(const Matrix& a);

}  // namespace kkw
