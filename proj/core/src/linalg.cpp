#include "massflow/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace massflow {

LuFactors lu_factor(const Matrix& a, double pivot_tol) {
    if (a.rows() != a.cols()) throw std::invalid_argument("lu_factor: matrix not square");
    std::size_t n = a.rows();
    LuFactors f;
    f.lu = a;
    f.perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = static_cast<int>(i);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(f.lu(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = std::abs(f.lu(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best <= pivot_tol) {
            f.singular = true;
            return f;
        }
        if (piv != k) {
            std::swap(f.perm[k], f.perm[piv]);
            for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double m = f.lu(i, k) / f.lu(k, k);
            f.lu(i, k) = m;
            for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= m * f.lu(k, j);
        }
    }
    return f;
}

std::vector<double> lu_solve(const LuFactors& f, std::vector<double> b) {
    if (f.singular) throw std::runtime_error("lu_solve: singular factorization");
    std::size_t n = f.lu.rows();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[static_cast<std::size_t>(f.perm[i])];
    for (std::size_t i = 1; i < n; ++i) {
        double s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= f.lu(ii, j) * x[j];
        x[ii] = s / f.lu(ii, ii);
    }
    return x;
}

std::vector<double> lu_solve_transposed(const LuFactors& f, const std::vector<double>& b) {
    if (f.singular) throw std::runtime_error("lu_solve_transposed: singular factorization");
    std::size_t n = f.lu.rows();
    // P A = L U  =>  A^T = U^T L^T P, so solve U^T z = b, L^T w = z, x = P^T w.
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < i; ++j) s -= f.lu(j, i) * z[j];
        z[i] = s / f.lu(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= f.lu(j, ii) * z[j];
        z[ii] = s;
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[static_cast<std::size_t>(f.perm[i])] = z[i];
    return x;
}

std::vector<double> solve_dense(const Matrix& a, const std::vector<double>& b, bool* singular,
                                double pivot_tol) {
    LuFactors f = lu_factor(a, pivot_tol);
    if (singular) *singular = f.singular;
    if (f.singular) return {};
    return lu_solve(f, b);
}

std::vector<double> least_squares(const Matrix& a, const std::vector<double>& b) {
    std::size_t m = a.rows(), n = a.cols();
    Matrix ata(n, n);
    std::vector<double> atb(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            atb[j] += a(i, j) * b[i];
            for (std::size_t k = j; k < n; ++k) ata(j, k) += a(i, j) * a(i, k);
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) ata(j, k) = ata(k, j);
    }
    bool singular = false;
    auto x = solve_dense(ata, atb, &singular, 1e-14);
    if (singular) throw std::runtime_error("least_squares: rank-deficient normal equations");
    return x;
}

double norm_inf(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace massflow
