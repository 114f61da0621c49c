#pragma once

#include <cmath>

#include "shrinkcov/common.hpp"
#include "shrinkcov/cov_matrix.hpp"
#include "shrinkcov/scm.hpp"

namespace shrinkcov {

/// Sample size and elliptical kurtosis, plus the two derived scalars that all
/// finite-sample SCM moments are written in:
///   tau1 = 1/(n-1) + kappa/n,   tau2 = kappa/n.
/// Taking kappa as a plain number lets estimated kurtosis reuse the same code
/// path as population values.
struct MomentContext {
    Index n;
    double kappa;

    MomentContext(Index n_in, double kappa_in) : n(n_in), kappa(kappa_in) {
        if (n < 2) throw std::invalid_argument("MomentContext: n must be >= 2");
    }

    double tau1() const { return 1.0 / static_cast<double>(n - 1) + kappa / static_cast<double>(n); }
    double tau2() const { return kappa / static_cast<double>(n); }
};

/// E||S||_F^2 = (1 + tau1 + tau2) ||Sigma||_F^2 + tau1 tr(Sigma)^2.
inline double expected_fro2_scm(const CovMatrix& sigma, const MomentContext& ctx) {
    const double t = sigma.trace();
    return (1.0 + ctx.tau1() + ctx.tau2()) * sigma.fro2() + ctx.tau1() * t * t;
}

/// E[tr(S)^2] = 2 tau1 ||Sigma||_F^2 + (1 + tau2) tr(Sigma)^2.
inline double expected_tr2_scm(const CovMatrix& sigma, const MomentContext& ctx) {
    const double t = sigma.trace();
    return 2.0 * ctx.tau1() * sigma.fro2() + (1.0 + ctx.tau2()) * t * t;
}

/// MSE(S) = E||S - Sigma||_F^2 = (tau1 + tau2) ||Sigma||_F^2 + tau1 tr(Sigma)^2.
inline double mse_scm(const CovMatrix& sigma, const MomentContext& ctx) {
    return expected_fro2_scm(sigma, ctx) - sigma.fro2();
}

/// NMSE(S) = (1 + p/gamma)(1/(n-1) + kappa/n) + kappa/n.
inline double nmse_scm(Index p, double gamma, const MomentContext& ctx) {
    if (p < 1) throw std::invalid_argument("nmse_scm: p must be >= 1");
    if (!(gamma >= 1.0)) throw std::invalid_argument("nmse_scm: gamma must be >= 1");
    if (!(ctx.kappa > -2.0 / (static_cast<double>(p) + 2.0)))
        throw std::invalid_argument("nmse_scm: kappa below the elliptical bound -2/(p+2)");
    return (1.0 + static_cast<double>(p) / gamma) * ctx.tau1() + ctx.tau2();
}

/// Limiting NMSE in the doubly asymptotic regime p/n -> c0: (1 + kappa) c0 / gamma0.
inline double limiting_nmse(double c0, double gamma0, double kappa) {
    if (!(c0 > 0.0) || !(gamma0 >= 1.0)) throw std::invalid_argument("limiting_nmse: bad arguments");
    return (1.0 + kappa) * c0 / gamma0;
}

/// E||W o S||_F^2 = (1 + tau1 + tau2) ||W o Sigma||_F^2 + tau1 tr((D_Sigma W)^2),
/// D_Sigma = diag(Sigma).
inline double expected_fro2_tapered(const TaperTemplate& w, const CovMatrix& sigma,
                                    const MomentContext& ctx) {
    if (w.dim() != sigma.dim()) throw std::invalid_argument("expected_fro2_tapered: dimension mismatch");
    const Matrix ws = w.w.cwiseProduct(sigma.matrix());
    // tr((D W)^2) = sum_ij d_i w_ij w_ji d_j = sum_ij sigma_ii sigma_jj w_ij^2
    const Vector d = sigma.matrix().diagonal();
    long double tr_dw2 = 0.0L;
    for (Index i = 0; i < w.dim(); ++i)
        for (Index j = 0; j < w.dim(); ++j)
            tr_dw2 += static_cast<long double>(d(i)) * d(j) * w.w(i, j) * w.w(i, j);
    return (1.0 + ctx.tau1() + ctx.tau2()) * fro_norm2(ws) +
           ctx.tau1() * static_cast<double>(tr_dw2);
}

/// MSE(W o S) = E||W o S||_F^2 + ||Sigma||_F^2 - 2 ||V o Sigma||_F^2,
/// with V the element-wise square root of W.
inline double mse_tapered(const TaperTemplate& w, const CovMatrix& sigma, const MomentContext& ctx) {
    const Matrix vs = w.v.cwiseProduct(sigma.matrix());
    return expected_fro2_tapered(w, sigma, ctx) + sigma.fro2() - 2.0 * fro_norm2(vs);
}

inline double nmse_tapered(const TaperTemplate& w, const CovMatrix& sigma, const MomentContext& ctx) {
    return mse_tapered(w, sigma, ctx) / sigma.fro2();
}

/// var(s^2) = sigma^4 (kurt/n + 2/(n-1)) for the unbiased 1-D sample variance.
inline double var_sample_variance(double sigma2, double kurt, Index n) {
    if (n < 2) throw std::invalid_argument("var_sample_variance: n must be >= 2");
    return sigma2 * sigma2 * (kurt / static_cast<double>(n) + 2.0 / static_cast<double>(n - 1));
}

/// MSE-optimal scaling of the 1-D sample variance:
/// beta0 = n(n-1) / (kurt (n-1) + n(n+1)).
inline double beta0_1d(double kurt, Index n) {
    if (n < 2) throw std::invalid_argument("beta0_1d: n must be >= 2");
    const double nd = static_cast<double>(n);
    return nd * (nd - 1.0) / (kurt * (nd - 1.0) + nd * (nd + 1.0));
}

/// Analytic MSE surface of the linear shrinkage estimator beta*S + alpha*I.
/// The deterministic term substitutes E[S] = Sigma, giving
///   MSE(alpha, beta) = beta^2 MSE(S) + ||beta Sigma + alpha I - Sigma||_F^2,
/// a convex quadratic in (alpha, beta).
inline double rscm_mse_surface(double alpha, double beta, const CovMatrix& sigma,
                               const MomentContext& ctx) {
    const double p = static_cast<double>(sigma.dim());
    const double bias2 = (beta - 1.0) * (beta - 1.0) * sigma.fro2() +
                         2.0 * (beta - 1.0) * alpha * sigma.trace() + alpha * alpha * p;
    return beta * beta * mse_scm(sigma, ctx) + bias2;
}

}  // namespace shrinkcov
