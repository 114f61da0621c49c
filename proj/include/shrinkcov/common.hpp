#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <string>

namespace shrinkcov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown when a matrix required to be positive definite is not.
struct NotPositiveDefinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an iterative solver exhausts its iteration budget.
/// Carries the last iterate so callers can inspect how far it got.
struct ConvergenceFailure : std::runtime_error {
    Vector last_iterate;
    ConvergenceFailure(const std::string& what, Vector iterate)
        : std::runtime_error(what), last_iterate(std::move(iterate)) {}
};

inline double clamp(double x, double lo, double hi) {
    return std::max(lo, std::min(hi, x));
}

/// Squared Frobenius norm accumulated in extended precision. Needed where
/// third-digit agreement is asserted on p >= 200 matrices.
inline double fro_norm2(const Matrix& a) {
    long double acc = 0.0L;
    const double* data = a.data();
    const Eigen::Index size = a.size();
    for (Eigen::Index i = 0; i < size; ++i) acc += static_cast<long double>(data[i]) * data[i];
    return static_cast<double>(acc);
}

inline double trace_of(const Matrix& a) {
    long double acc = 0.0L;
    for (Eigen::Index i = 0; i < a.rows(); ++i) acc += static_cast<long double>(a(i, i));
    return static_cast<double>(acc);
}

/// <A, B> = tr(A^T B), extended-precision accumulation.
inline double fro_inner(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("fro_inner: shape mismatch");
    long double acc = 0.0L;
    const double* pa = a.data();
    const double* pb = b.data();
    const Eigen::Index size = a.size();
    for (Eigen::Index i = 0; i < size; ++i) acc += static_cast<long double>(pa[i]) * pb[i];
    return static_cast<double>(acc);
}

inline Matrix symmetrized(const Matrix& a) {
    return 0.5 * (a + a.transpose());
}

}  // namespace shrinkcov
