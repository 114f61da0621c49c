#pragma once

#include <Eigen/Cholesky>

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "shrinkcov/common.hpp"
#include "shrinkcov/cov_matrix.hpp"
#include "shrinkcov/qp.hpp"
#include "shrinkcov/rscm.hpp"
#include "shrinkcov/scalars.hpp"
#include "shrinkcov/scm.hpp"
#include "shrinkcov/theory.hpp"

namespace shrinkcov {

/// Per-class scalar summaries feeding every multi-population rule: scales,
/// kurtoses, sphericities, scaled SCM MSEs delta_k, and the matrix of scaled
/// covariance inner products c_ij = p^-1 tr(Sigma_i Sigma_j). Also carries the
/// second moments of the class SCMs needed by the bivariate MSE polynomial.
struct ClassScalars {
    Index p = 0;
    std::vector<Index> n;
    std::vector<double> pi;
    std::vector<double> eta;
    std::vector<double> kappa;
    std::vector<double> gamma;
    std::vector<double> delta;        // delta_k = p^-1 E||S_k - Sigma_k||_F^2
    Matrix c;                         // c_ij = p^-1 tr(Sigma_i Sigma_j)
    std::vector<double> trace2_sigma; // tr(Sigma_k)^2
    std::vector<double> e_fro2_s;     // E||S_k||_F^2
    std::vector<double> e_tr2_s;      // E[tr(S_k)^2]

    std::size_t num_classes() const { return n.size(); }
    double fro2_sigma(std::size_t k) const { return static_cast<double>(p) * c(k, k); }

    /// tr(Sigma_i) tr(Sigma_j): exact for population scalars; for estimated
    /// scalars the same-class product uses the debiased trace-square (the
    /// plain (tr S_k)^2 would overshoot by var(tr S_k)).
    double trace_product(std::size_t i, std::size_t j) const {
        if (i == j) return trace2_sigma[i];
        return static_cast<double>(p) * static_cast<double>(p) * eta[i] * eta[j];
    }

    Matrix delta_mat() const {
        Matrix d = Matrix::Zero(num_classes(), num_classes());
        for (std::size_t k = 0; k < num_classes(); ++k) d(k, k) = delta[k];
        return d;
    }
};

/// Exact class scalars from known populations; the oracle counterpart of
/// estimate_class_scalars and the reference in Monte Carlo tests.
inline ClassScalars class_scalars_from_population(const std::vector<CovMatrix>& sigmas,
                                                  const std::vector<Index>& n,
                                                  const std::vector<double>& kappa) {
    const std::size_t K = sigmas.size();
    if (K == 0 || n.size() != K || kappa.size() != K)
        throw std::invalid_argument("class_scalars_from_population: inconsistent inputs");
    ClassScalars cs;
    cs.p = sigmas.front().dim();
    double total = 0.0;
    for (Index nk : n) total += static_cast<double>(nk);
    cs.c = Matrix::Zero(K, K);
    for (std::size_t k = 0; k < K; ++k) {
        if (sigmas[k].dim() != cs.p)
            throw std::invalid_argument("class_scalars_from_population: dimension mismatch");
        const MomentContext ctx(n[k], kappa[k]);
        cs.n.push_back(n[k]);
        cs.pi.push_back(static_cast<double>(n[k]) / total);
        cs.eta.push_back(scale(sigmas[k]));
        cs.kappa.push_back(kappa[k]);
        cs.gamma.push_back(sphericity(sigmas[k]));
        cs.trace2_sigma.push_back(sigmas[k].trace() * sigmas[k].trace());
        cs.e_fro2_s.push_back(expected_fro2_scm(sigmas[k], ctx));
        cs.e_tr2_s.push_back(expected_tr2_scm(sigmas[k], ctx));
        cs.delta.push_back(mse_scm(sigmas[k], ctx) / static_cast<double>(cs.p));
        for (std::size_t j = 0; j <= k; ++j) {
            const double cij = fro_inner(sigmas[k].matrix(), sigmas[j].matrix()) /
                               static_cast<double>(cs.p);
            cs.c(k, j) = cij;
            cs.c(j, k) = cij;
        }
    }
    return cs;
}

/// Data-driven class scalars. Per class: eta, kappa and gamma plug-ins;
/// (||Sigma_k||_F^2, tr(Sigma_k)^2) recovered by inverting the SCM moment
/// system, which bias-corrects c_kk (the raw p^-1 tr(S_k^2) overshoots by the
/// tau1/tau2 terms); delta_k = NMSE(S_k) ||Sigma_k||_F^2 / p. Cross terms
/// c_ij = p^-1 tr(S_i S_j) are unbiased by class independence.
inline ClassScalars estimate_class_scalars(const ClassPanel& panel,
                                           SphericityMethod method = SphericityMethod::Ell2) {
    const std::size_t K = panel.num_classes();
    ClassScalars cs;
    cs.p = panel.dim();
    cs.pi = panel.proportions();
    cs.c = Matrix::Zero(K, K);
    const double pd = static_cast<double>(cs.p);

    std::vector<CovMatrix> s;
    s.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        const Matrix& x = panel.samples(k);
        const Index nk = x.rows();
        s.push_back(scm(x));
        const CovMatrix& sk = s.back();
        if (!(sk.trace() > 0.0))
            throw std::invalid_argument("estimate_class_scalars: class " + std::to_string(k) +
                                        " has zero total variance");
        cs.n.push_back(nk);
        cs.eta.push_back(estimate_scale(sk));
        cs.kappa.push_back(estimate_kurtosis(x));
        cs.gamma.push_back(method == SphericityMethod::Ell1
                               ? estimate_sphericity_ell1(x)
                               : estimate_sphericity_ell2(x, cs.kappa.back()));
        const MomentContext ctx(nk, cs.kappa.back());
        const SigmaNormEstimates norms =
            invert_scm_moments(sk.fro2(), sk.trace() * sk.trace(), cs.p, ctx);
        cs.c(k, k) = norms.fro2 / pd;
        cs.trace2_sigma.push_back(norms.trace2);
        cs.e_fro2_s.push_back((1.0 + ctx.tau1() + ctx.tau2()) * norms.fro2 +
                              ctx.tau1() * norms.trace2);
        cs.e_tr2_s.push_back(2.0 * ctx.tau1() * norms.fro2 + (1.0 + ctx.tau2()) * norms.trace2);
        cs.delta.push_back(nmse_scm(cs.p, cs.gamma.back(), ctx) * norms.fro2 / pd);
    }
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double cij = fro_inner(s[i].matrix(), s[j].matrix()) / pd;
            cs.c(i, j) = cij;
            cs.c(j, i) = cij;
        }
    return cs;
}

/// Two-stage shrinkage of each class SCM: first toward the pooled SCM, then
/// toward a scaled identity whose scale matches the partially pooled matrix,
///   M_k = alpha_k (beta_k S_k + (1-beta_k) S_pool)
///         + (1-alpha_k) (tr(beta_k S_k + (1-beta_k) S_pool)/p) I.
inline std::vector<CovMatrix> coupled_rscm(const ClassPanel& panel,
                                           const std::vector<double>& alpha,
                                           const std::vector<double>& beta) {
    const std::size_t K = panel.num_classes();
    if (alpha.size() != K || beta.size() != K)
        throw std::invalid_argument("coupled_rscm: need one (alpha, beta) pair per class");
    const Matrix pool = pooled_scm(panel).matrix();
    const double pd = static_cast<double>(panel.dim());
    std::vector<CovMatrix> out;
    out.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        const Matrix partial =
            beta[k] * scm(panel.samples(k)).matrix() + (1.0 - beta[k]) * pool;
        Matrix m = alpha[k] * partial;
        m.diagonal().array() += (1.0 - alpha[k]) * partial.trace() / pd;
        out.emplace_back(std::move(m));
    }
    return out;
}

enum class StreamlinedTarget { OwnClass, Pool };

/// Coefficients of the bivariate MSE polynomial
///   alpha^2 beta^2 B22 + alpha^2 beta B21 + alpha^2 B20
///   + alpha beta B11 + alpha B10 + B00
/// for the streamlined estimator alpha (beta S_k + (1-beta) S_pool)
/// + (1-alpha) (tr(T)/p) I with fixed identity-scale target T.
struct PolyCoeffs {
    double b22 = 0.0, b21 = 0.0, b20 = 0.0, b11 = 0.0, b10 = 0.0, b00 = 0.0;

    double value(double alpha, double beta) const {
        return alpha * alpha * beta * beta * b22 + alpha * alpha * beta * b21 +
               alpha * alpha * b20 + alpha * beta * b11 + alpha * b10 + b00;
    }
};

namespace detail {

/// Second-moment table shared by the streamlined and coupled expansions.
struct PoolMoments {
    double e_p2;          // E||S_pool||_F^2
    double e_skp;         // E<S_k, S_pool>
    double e_trsktrp;     // E[tr(S_k) tr(S_pool)]
    double e_trp2;        // E[tr(S_pool)^2]
    double tr_pool;       // tr(E[S_pool]) = sum_j pi_j tr(Sigma_j)
    double sigbar_k;      // <E[S_pool], Sigma_k>
    double trpool_trsig;  // E[tr(S_pool)] tr(Sigma_k) = sum_j pi_j tr(Sigma_j) tr(Sigma_k)
};

inline PoolMoments pool_moments(const ClassScalars& cs, std::size_t k) {
    const std::size_t K = cs.num_classes();
    const double pd = static_cast<double>(cs.p);
    PoolMoments m{};
    for (std::size_t j = 0; j < K; ++j) {
        const double g_kj = pd * cs.c(k, j);  // <Sigma_k, Sigma_j>
        m.tr_pool += cs.pi[j] * pd * cs.eta[j];
        m.sigbar_k += cs.pi[j] * g_kj;
        m.trpool_trsig += cs.pi[j] * cs.trace_product(j, k);
        m.e_skp += (j == k) ? cs.pi[j] * cs.e_fro2_s[j] : cs.pi[j] * g_kj;
        m.e_trsktrp +=
            (j == k) ? cs.pi[j] * cs.e_tr2_s[j] : cs.pi[j] * cs.trace_product(k, j);
        for (std::size_t i = 0; i < K; ++i) {
            if (i == j) {
                m.e_p2 += cs.pi[i] * cs.pi[i] * cs.e_fro2_s[i];
                m.e_trp2 += cs.pi[i] * cs.pi[i] * cs.e_tr2_s[i];
            } else {
                m.e_p2 += cs.pi[i] * cs.pi[j] * pd * cs.c(i, j);
                m.e_trp2 += cs.pi[i] * cs.pi[j] * cs.trace_product(i, j);
            }
        }
    }
    return m;
}

}  // namespace detail

/// Expand E||alpha(beta S_k + (1-beta) S_pool) + (1-alpha) I_T - Sigma_k||_F^2 / p
/// into the six-coefficient polynomial of PolyCoeffs. Uses class independence
/// (E<S_i, S_j> = <Sigma_i, Sigma_j> for i != j) and the SCM second moments
/// held by ClassScalars.
inline PolyCoeffs streamlined_coeffs(std::size_t k, const ClassScalars& cs,
                                     StreamlinedTarget target) {
    const std::size_t K = cs.num_classes();
    if (k >= K) throw std::invalid_argument("streamlined_coeffs: class index out of range");
    const double pd = static_cast<double>(cs.p);
    const detail::PoolMoments m = detail::pool_moments(cs, k);

    const double f_k = cs.e_fro2_s[k];
    const double t_k = cs.e_tr2_s[k];
    const double g_kk = pd * cs.c(k, k);

    double e_trsk_trt, e_trp_trt, e_trt2, e_trt_trsig;
    if (target == StreamlinedTarget::OwnClass) {
        e_trsk_trt = t_k;
        e_trp_trt = m.e_trsktrp;
        e_trt2 = t_k;
        e_trt_trsig = cs.trace_product(k, k);  // E[tr(S_k)] tr(Sigma_k)
    } else {
        e_trsk_trt = m.e_trsktrp;
        e_trp_trt = m.e_trp2;
        e_trt2 = m.e_trp2;
        e_trt_trsig = m.trpool_trsig;
    }

    PolyCoeffs b;
    b.b22 = f_k + m.e_p2 - 2.0 * m.e_skp;
    b.b21 = -2.0 * m.e_p2 + 2.0 * m.e_skp + 2.0 * (e_trp_trt - e_trsk_trt) / pd;
    b.b20 = m.e_p2 + e_trt2 / pd - 2.0 * e_trp_trt / pd;
    b.b11 = 2.0 * (e_trsk_trt - e_trp_trt) / pd - 2.0 * g_kk + 2.0 * m.sigbar_k;
    b.b10 = 2.0 * e_trp_trt / pd - 2.0 * e_trt2 / pd - 2.0 * m.sigbar_k + 2.0 * e_trt_trsig / pd;
    b.b00 = e_trt2 / pd - 2.0 * e_trt_trsig / pd + g_kk;

    b.b22 /= pd;
    b.b21 /= pd;
    b.b20 /= pd;
    b.b11 /= pd;
    b.b10 /= pd;
    b.b00 /= pd;
    // b22 = E||S_k - S_pool||_F^2 / p, which is exactly zero when K = 1; snap
    // cancellation noise to zero there and reject materially negative moments.
    const double tol = 1e-12 * std::max(1.0, std::abs(b.b00));
    if (b.b22 < 0.0 && b.b22 > -tol) b.b22 = 0.0;
    if (b.b22 < 0.0 || !(b.b20 > 0.0))
        throw std::invalid_argument("streamlined_coeffs: moment inputs are not positive definite");
    return b;
}

namespace detail {

/// Minimizer of A2 t^2 + A1 t + const on [0, 1].
inline double minimize_quadratic_01(double a2, double a1) {
    if (a2 > 0.0) return clamp(-a1 / (2.0 * a2), 0.0, 1.0);
    // Degenerate edge: compare the endpoints.
    return (a2 + a1 < 0.0) ? 1.0 : 0.0;
}

}  // namespace detail

/// Minimizer of the bivariate MSE polynomial over [0,1]^2. Returns the
/// closed-form interior stationary point when it lies in the open unit
/// square; otherwise evaluates the four boundary candidates
///   (i)  beta = 0, alpha = [-B10/(2 B20)]
///   (ii) beta = 1, alpha = [-(B10+B11)/(2(B22+B21+B20))]
///   (iii) alpha = 1, beta = [-(B21+B11)/(2 B22)]
///   (iv) alpha = 0 (the MSE no longer depends on beta)
/// and returns the feasible minimizer. Boundary hits of the interior formula
/// fall through to the boundary cases.
inline std::pair<double, double> streamlined_optimal(const PolyCoeffs& b) {
    if (b.b22 == 0.0 && b.b21 == 0.0 && b.b20 == 0.0 && b.b11 == 0.0 && b.b10 == 0.0)
        throw std::invalid_argument("streamlined_optimal: degenerate (all-zero) coefficients");

    std::vector<std::pair<double, double>> candidates;
    const double den_a = b.b21 * b.b21 - 4.0 * b.b20 * b.b22;
    const double num_a = 2.0 * b.b10 * b.b22 - b.b11 * b.b21;
    if (den_a != 0.0 && num_a != 0.0) {
        const double alpha = num_a / den_a;
        const double beta = (2.0 * b.b11 * b.b20 - b.b10 * b.b21) / num_a;
        if (alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0)
            candidates.emplace_back(alpha, beta);
    }
    candidates.emplace_back(detail::minimize_quadratic_01(b.b20, b.b10), 0.0);
    candidates.emplace_back(
        detail::minimize_quadratic_01(b.b22 + b.b21 + b.b20, b.b10 + b.b11), 1.0);
    candidates.emplace_back(1.0, detail::minimize_quadratic_01(b.b22, b.b21 + b.b11));
    candidates.emplace_back(0.0, 0.0);

    std::pair<double, double> best = candidates.front();
    double best_val = b.value(best.first, best.second);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double v = b.value(candidates[i].first, candidates[i].second);
        if (v < best_val) {
            best = candidates[i];
            best_val = v;
        }
    }
    return best;
}

/// Coefficients of the full coupled-RSCM MSE surface (identity scale taken
/// from the partially pooled matrix itself, so extra beta^2 and beta terms
/// appear):
///   MSE(alpha, beta) = a22 alpha^2 beta^2 + a21 alpha^2 beta + a20 alpha^2
///     + a11 alpha beta + a10 alpha + a02 beta^2 + a01 beta + a00.
struct CoupledPolyCoeffs {
    double a22 = 0.0, a21 = 0.0, a20 = 0.0, a11 = 0.0, a10 = 0.0;
    double a02 = 0.0, a01 = 0.0, a00 = 0.0;

    double value(double alpha, double beta) const {
        return a22 * alpha * alpha * beta * beta + a21 * alpha * alpha * beta +
               a20 * alpha * alpha + a11 * alpha * beta + a10 * alpha + a02 * beta * beta +
               a01 * beta + a00;
    }
};

/// Exact second-moment expansion of the coupled-RSCM MSE for class k
/// (unscaled Frobenius MSE; divide by ||Sigma_k||_F^2 for NMSE).
inline CoupledPolyCoeffs coupled_mse_coeffs(std::size_t k, const ClassScalars& cs) {
    const std::size_t K = cs.num_classes();
    if (k >= K) throw std::invalid_argument("coupled_mse_coeffs: class index out of range");
    const double pd = static_cast<double>(cs.p);
    const detail::PoolMoments m = detail::pool_moments(cs, k);
    const double f_k = cs.e_fro2_s[k];
    const double t_k = cs.e_tr2_s[k];
    const double g_kk = pd * cs.c(k, k);
    const double trk_trsig = cs.trace_product(k, k);  // E[tr(S_k)] tr(Sigma_k)

    // alpha^2 factor: E||G - I_G||^2 with G = beta S_k + (1-beta) S_pool.
    const double sk_c = f_k - t_k / pd;                 // E||S_k||^2 - E tr(S_k)^2 / p
    const double cross_c = m.e_skp - m.e_trsktrp / pd;  // E<S_k,P> - E tr(S_k)tr(P)/p
    const double p_c = m.e_p2 - m.e_trp2 / pd;

    CoupledPolyCoeffs c;
    c.a22 = sk_c - 2.0 * cross_c + p_c;
    c.a21 = 2.0 * (cross_c - p_c);
    c.a20 = p_c;

    // alpha factor: 2 E<G - I_G, I_G - Sigma_k> = -2 E<G - I_G, Sigma_k>
    // (tr(G - I_G) = 0 kills the I_G part), linear in beta.
    const double d_lin = -(g_kk - m.sigbar_k - (trk_trsig - m.trpool_trsig) / pd);
    const double d_const = -(m.sigbar_k - m.trpool_trsig / pd);
    c.a11 = 2.0 * d_lin;
    c.a10 = 2.0 * d_const;

    // constant factor: E||I_G - Sigma_k||^2, quadratic in beta.
    c.a02 = (t_k - 2.0 * m.e_trsktrp + m.e_trp2) / pd;
    c.a01 = 2.0 * (m.e_trsktrp - m.e_trp2) / pd - 2.0 * (trk_trsig - m.trpool_trsig) / pd;
    c.a00 = m.e_trp2 / pd - 2.0 * m.trpool_trsig / pd + g_kk;
    return c;
}

/// Weight vector of the linearly pooled estimator for target class k.
/// Returns the unconstrained solution (Delta + C)^-1 c_k when it satisfies
/// the bounds; otherwise solves the strictly convex QP. With
/// identity_augment the system is bordered by the scale vector eta and the
/// identity weight is kept >= eps; with simplex the constraint 1^T a = 1 is
/// added.
struct LinpoolOptions {
    bool identity_augment = false;
    double eps = 1e-6;
    bool simplex = false;
};

inline Vector linpool_weights(const ClassScalars& cs, std::size_t k,
                              const LinpoolOptions& opt = {}) {
    const std::size_t K = cs.num_classes();
    if (k >= K) throw std::invalid_argument("linpool_weights: class index out of range");
    const Index m = static_cast<Index>(K) + (opt.identity_augment ? 1 : 0);

    Matrix q(m, m);
    Vector rhs(m);
    q.topLeftCorner(K, K) = cs.delta_mat() + cs.c;
    for (std::size_t j = 0; j < K; ++j) rhs(j) = cs.c(k, j);
    if (opt.identity_augment) {
        for (std::size_t j = 0; j < K; ++j) {
            q(j, K) = cs.eta[j];
            q(K, j) = cs.eta[j];
        }
        q(K, K) = 1.0;
        rhs(K) = cs.eta[k];
    }
    Eigen::LLT<Matrix> llt(q);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("linpool_weights: Delta + C is not positive definite");

    Vector lower = Vector::Zero(m);
    if (opt.identity_augment) lower(m - 1) = opt.eps;

    // Closed-form candidate first (with the equality folded in when asked).
    Vector cand;
    if (!opt.simplex) {
        cand = llt.solve(rhs);
    } else {
        const Vector ones = Vector::Ones(m);
        const Vector qc = llt.solve(rhs);
        const Vector q1 = llt.solve(ones);
        const double lambda = (1.0 - ones.dot(qc)) / ones.dot(q1);
        cand = qc + lambda * q1;
    }
    bool feasible = true;
    for (Index i = 0; i < m; ++i)
        if (cand(i) < lower(i)) feasible = false;
    if (feasible) return cand;

    QpProblem prob(q, rhs);
    prob.lower = lower;
    prob.has_equality = opt.simplex;
    prob.equality_rhs = 1.0;
    return qp_solve(prob);
}

/// S(a) = sum_i a_i S_i, plus a_I * I when the weight vector carries the
/// identity coordinate (length K+1).
inline CovMatrix linpool_estimate(const ClassPanel& panel, const Vector& weights) {
    const std::size_t K = panel.num_classes();
    const bool augmented = weights.size() == static_cast<Index>(K) + 1;
    if (!augmented && weights.size() != static_cast<Index>(K))
        throw std::invalid_argument("linpool_estimate: weight vector has wrong length");
    Matrix acc = Matrix::Zero(panel.dim(), panel.dim());
    for (std::size_t i = 0; i < K; ++i) acc += weights(i) * scm(panel.samples(i)).matrix();
    if (augmented) acc.diagonal().array() += weights(K);
    return CovMatrix(std::move(acc));
}

/// End-to-end streamlined coupled shrinkage: estimate the class scalars, fit
/// the MSE polynomial per class, take the closed-form minimizer and apply
/// the estimator with the chosen identity-scale target.
struct CoupledFit {
    std::vector<CovMatrix> estimates;
    std::vector<double> alpha;
    std::vector<double> beta;
    ClassScalars scalars;
};

inline CoupledFit streamlined_fit(const ClassPanel& panel,
                                  StreamlinedTarget target = StreamlinedTarget::Pool,
                                  SphericityMethod method = SphericityMethod::Ell2) {
    CoupledFit fit;
    fit.scalars = estimate_class_scalars(panel, method);
    const std::size_t K = panel.num_classes();
    const Matrix pool = pooled_scm(panel).matrix();
    const double pd = static_cast<double>(panel.dim());
    for (std::size_t k = 0; k < K; ++k) {
        const PolyCoeffs b = streamlined_coeffs(k, fit.scalars, target);
        const auto [alpha, beta] = streamlined_optimal(b);
        fit.alpha.push_back(alpha);
        fit.beta.push_back(beta);
        const Matrix sk = scm(panel.samples(k)).matrix();
        const Matrix partial = beta * sk + (1.0 - beta) * pool;
        const double target_trace = target == StreamlinedTarget::OwnClass ? sk.trace() : pool.trace();
        Matrix m = alpha * partial;
        m.diagonal().array() += (1.0 - alpha) * target_trace / pd;
        fit.estimates.emplace_back(std::move(m));
    }
    return fit;
}

}  // namespace shrinkcov
