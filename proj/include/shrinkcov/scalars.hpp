#pragma once

#include <cmath>
#include <string>

#include "shrinkcov/common.hpp"
#include "shrinkcov/cov_matrix.hpp"
#include "shrinkcov/scm.hpp"
#include "shrinkcov/theory.hpp"

namespace shrinkcov {

enum class SphericityMethod { Ell1, Ell2 };

inline const char* to_string(SphericityMethod m) {
    return m == SphericityMethod::Ell1 ? "ell1" : "ell2";
}

/// Scalar plug-ins every shrinkage rule needs.
struct ScalarEstimates {
    double eta_hat = 0.0;
    double kappa_hat = 0.0;
    double gamma_hat = 1.0;
    SphericityMethod method = SphericityMethod::Ell1;
};

/// eta_hat = tr(S)/p.
inline double estimate_scale(const CovMatrix& s) {
    if (!(s.trace() > 0.0)) throw std::invalid_argument("estimate_scale: tr(S) must be > 0");
    return s.trace() / static_cast<double>(s.dim());
}

/// Lower bound for the elliptical kurtosis at dimension p (plus a margin that
/// keeps tau1 strictly positive downstream).
inline double kurtosis_lower_bound(Index p) {
    return -2.0 / (static_cast<double>(p) + 2.0) + 1e-6;
}

/// kappa_hat: average over coordinates of the marginal sample excess kurtosis,
/// divided by 3 and clamped at the elliptical lower bound. Each coordinate
/// uses the finite-sample-adjusted moment ratio
///   G2 = ((n+1) g2 + 6)(n-1) / ((n-2)(n-3)),  g2 = m4/m2^2 - 3;
/// the raw g2 carries a -6/(n+1) bias that would leak into every downstream
/// plug-in at small n.
inline double estimate_kurtosis(const Matrix& x) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (n < 4) throw std::invalid_argument("estimate_kurtosis: need n >= 4");
    const double nd = static_cast<double>(n);
    long double g2_sum = 0.0L;
    for (Index j = 0; j < p; ++j) {
        const double mean = x.col(j).mean();
        long double m2 = 0.0L, m4 = 0.0L;
        for (Index i = 0; i < n; ++i) {
            const double d = x(i, j) - mean;
            const double d2 = d * d;
            m2 += d2;
            m4 += d2 * d2;
        }
        m2 /= n;
        m4 /= n;
        if (!(m2 > 0.0))
            throw std::invalid_argument("estimate_kurtosis: coordinate " + std::to_string(j) +
                                        " has zero variance");
        const double g2 = static_cast<double>(m4 / (m2 * m2)) - 3.0;
        g2_sum += ((nd + 1.0) * g2 + 6.0) * (nd - 1.0) / ((nd - 2.0) * (nd - 3.0));
    }
    const double kappa = static_cast<double>(g2_sum) / (3.0 * static_cast<double>(p));
    return std::max(kappa, kurtosis_lower_bound(p));
}

/// Sphericity from the spatial sign covariance matrix:
/// gamma_hat = (n/(n-1)) (||Lambda_hat||_F^2 / p - p/n), clamped to [1, p].
inline double estimate_sphericity_ell1(const Matrix& x) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (n < 2) throw std::invalid_argument("estimate_sphericity_ell1: need n >= 2");
    const CovMatrix lambda = sscm(x);
    const double nd = static_cast<double>(n);
    const double pd = static_cast<double>(p);
    const double raw = (nd / (nd - 1.0)) * (lambda.fro2() / pd - pd / nd);
    return clamp(raw, 1.0, pd);
}

/// a_n = (n/(n+kappa)) (n/(n-1) + kappa).
inline double ell2_a(double kappa, Index n) {
    const double nd = static_cast<double>(n);
    return (nd / (nd + kappa)) * (nd / (nd - 1.0) + kappa);
}

/// b_n = (kappa + n)(n-1)^2 / ((n-2)(3 kappa (n-1) + n(n+1))).
inline double ell2_b(double kappa, Index n) {
    if (n <= 2) throw std::invalid_argument("ell2_b: needs n > 2");
    const double nd = static_cast<double>(n);
    return (kappa + nd) * (nd - 1.0) * (nd - 1.0) /
           ((nd - 2.0) * (3.0 * kappa * (nd - 1.0) + nd * (nd + 1.0)));
}

/// SCM-based sphericity estimate:
/// gamma_hat = b_n (p tr(S^2)/tr(S)^2 - a_n p/n), clamped to [1, p].
inline double estimate_sphericity_ell2_from_scm(const CovMatrix& s, Index n, double kappa_hat) {
    if (n <= 2) throw std::invalid_argument("estimate_sphericity_ell2: needs n > 2");
    if (!(s.trace() > 0.0)) throw std::invalid_argument("estimate_sphericity_ell2: degenerate data");
    const double pd = static_cast<double>(s.dim());
    const double nd = static_cast<double>(n);
    const double ratio = pd * s.fro2() / (s.trace() * s.trace());
    const double raw = ell2_b(kappa_hat, n) * (ratio - ell2_a(kappa_hat, n) * pd / nd);
    return clamp(raw, 1.0, pd);
}

inline double estimate_sphericity_ell2(const Matrix& x, double kappa_hat) {
    return estimate_sphericity_ell2_from_scm(scm(x), x.rows(), kappa_hat);
}

/// tr((diag(S) W)^2) = sum_ij s_ii s_jj w_ij^2 over the supported entries of W.
inline double tr_diag_taper_sq(const Matrix& s, const TaperTemplate& w) {
    const Vector d = s.diagonal();
    long double acc = 0.0L;
    for (Index i = 0; i < s.rows(); ++i)
        for (Index j = 0; j < s.cols(); ++j)
            acc += static_cast<long double>(d(i)) * d(j) * w.w(i, j) * w.w(i, j);
    return static_cast<double>(acc);
}

/// Sphericity of the tapered covariance W o Sigma,
/// gamma_W = p tr((W o Sigma)^2) / tr(Sigma)^2, estimated by the plug-in
///   gamma_hat_W = b_n (p tr((W o S)^2)/tr(S)^2 - a_n (p/n) d_W),
/// where d_W = tr((diag(S) W)^2)/tr(S)^2 restricts the diagonal-bias
/// correction to the supported entries of W. Reduces exactly to the Ell2
/// estimator when W is the all-ones matrix (d_W = 1). The raw value can fall
/// below 1 for sparse templates, so the lower clamp is a small positive
/// number rather than 1.
inline double estimate_sphericity_tapered_from_scm(const CovMatrix& s, Index n,
                                                   const TaperTemplate& w, double kappa_hat) {
    if (n <= 2) throw std::invalid_argument("estimate_sphericity_tapered: needs n > 2");
    if (w.dim() != s.dim())
        throw std::invalid_argument("estimate_sphericity_tapered: template dimension mismatch");
    if (!(s.trace() > 0.0)) throw std::invalid_argument("estimate_sphericity_tapered: degenerate data");
    const double pd = static_cast<double>(s.dim());
    const double nd = static_cast<double>(n);
    const double tr2 = s.trace() * s.trace();
    const double ratio = pd * fro_norm2(w.w.cwiseProduct(s.matrix())) / tr2;
    const double d_w = tr_diag_taper_sq(s.matrix(), w) / tr2;
    const double raw = ell2_b(kappa_hat, n) * (ratio - ell2_a(kappa_hat, n) * (pd / nd) * d_w);
    return clamp(raw, 1e-12, pd);
}

inline double estimate_sphericity_tapered(const Matrix& x, const TaperTemplate& w, double kappa_hat) {
    return estimate_sphericity_tapered_from_scm(scm(x), x.rows(), w, kappa_hat);
}

inline double estimate_sphericity_tapered(const Matrix& x, const TaperTemplate& w) {
    return estimate_sphericity_tapered(x, w, estimate_kurtosis(x));
}

/// Population sphericity of W o Sigma (the target of the estimator above).
inline double sphericity_tapered(const TaperTemplate& w, const CovMatrix& sigma) {
    if (w.dim() != sigma.dim()) throw std::invalid_argument("sphericity_tapered: dimension mismatch");
    const Matrix ws = w.w.cwiseProduct(sigma.matrix());
    return static_cast<double>(sigma.dim()) * fro_norm2(ws) / (sigma.trace() * sigma.trace());
}

/// Approximately unbiased estimates of (||Sigma||_F^2, tr(Sigma)^2) obtained
/// by inverting the linear system that expresses E||S||_F^2 and E[tr(S)^2]
/// in these two quantities. The observed ||S||_F^2 and tr(S)^2 stand in for
/// the expectations. Output is projected onto the feasible cone
/// tr(Sigma)^2/p <= ||Sigma||_F^2 <= tr(Sigma)^2 (equivalently 1 <= gamma <= p).
struct SigmaNormEstimates {
    double fro2;    // estimate of ||Sigma||_F^2
    double trace2;  // estimate of tr(Sigma)^2
};

inline SigmaNormEstimates invert_scm_moments(double fro2_s, double trace2_s, Index p,
                                             const MomentContext& ctx) {
    const double t1 = ctx.tau1();
    const double t2 = ctx.tau2();
    const double det = (1.0 + t1 + t2) * (1.0 + t2) - 2.0 * t1 * t1;
    if (!(det > 0.0)) throw std::invalid_argument("invert_scm_moments: singular moment system");
    double fro2 = ((1.0 + t2) * fro2_s - t1 * trace2_s) / det;
    double trace2 = ((1.0 + t1 + t2) * trace2_s - 2.0 * t1 * fro2_s) / det;
    trace2 = std::max(trace2, 0.0);
    fro2 = clamp(fro2, trace2 / static_cast<double>(p), trace2);
    return {fro2, trace2};
}

}  // namespace shrinkcov
