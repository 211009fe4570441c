#pragma once

#include <cstddef>
#include <vector>

namespace massflow {

/// Dense row-major matrix. Flowsheets here are desk scale, so dense
/// factorizations are used throughout; the equation system keeps sparse
/// structure so a sparse backend could slot in later.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double* row_data(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_data(std::size_t i) const { return data_.data() + i * cols_; }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct LuFactors {
    Matrix lu;
    std::vector<int> perm;
    bool singular = false;
};

/// LU with partial pivoting; pivots below pivot_tol flag the matrix singular.
LuFactors lu_factor(const Matrix& a, double pivot_tol = 1e-12);
std::vector<double> lu_solve(const LuFactors& f, std::vector<double> b);
/// Solves A^T x = b using the factorization of A.
std::vector<double> lu_solve_transposed(const LuFactors& f, const std::vector<double>& b);

/// Factor-and-solve of a square system; empty result means singular.
std::vector<double> solve_dense(const Matrix& a, const std::vector<double>& b,
                                bool* singular = nullptr, double pivot_tol = 1e-12);

/// Minimum-norm least squares via normal equations; adequate for the small
/// well-conditioned fits used here.
std::vector<double> least_squares(const Matrix& a, const std::vector<double>& b);

double norm_inf(const std::vector<double>& v);

}  // namespace massflow
