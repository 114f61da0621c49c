#pragma once

#include <Eigen/Eigenvalues>

#include "shrinkcov/common.hpp"

namespace shrinkcov {

/// Dense symmetric covariance matrix with cached trace and squared Frobenius
/// norm. Construction symmetrizes the input, so stored matrices satisfy
/// sigma(i,j) == sigma(j,i) exactly.
class CovMatrix {
public:
    CovMatrix() = default;

    explicit CovMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw std::invalid_argument("CovMatrix: matrix must be square");
        m_ = symmetrized(m_);
        trace_ = trace_of(m_);
        fro2_ = fro_norm2(m_);
    }

    Index dim() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    double trace() const { return trace_; }
    /// Squared Frobenius norm, ||Sigma||_F^2.
    double fro2() const { return fro2_; }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    /// Positive definiteness at a scale-relative threshold:
    /// min eigenvalue > tol * tr(Sigma)/p.
    bool is_pd(double tol = 1e-10) const {
        if (dim() == 0) return false;
        return min_eigenvalue() > tol * trace_ / static_cast<double>(dim());
    }

    void require_pd(double tol = 1e-10) const {
        if (!is_pd(tol)) throw NotPositiveDefinite("covariance matrix is not positive definite");
    }

private:
    Matrix m_;
    double trace_ = 0.0;
    double fro2_ = 0.0;
};

}  // namespace shrinkcov
