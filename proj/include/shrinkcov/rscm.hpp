#pragma once

#include <optional>
#include <string>
#include <utility>

#include "shrinkcov/common.hpp"
#include "shrinkcov/cov_matrix.hpp"
#include "shrinkcov/scalars.hpp"
#include "shrinkcov/scm.hpp"
#include "shrinkcov/theory.hpp"

namespace shrinkcov {

/// Output of a shrinkage estimator: the estimate, the chosen coefficients and
/// the scalar statistics that produced them.
struct ShrinkResult {
    CovMatrix estimate;
    double alpha_hat = 0.0;
    double beta_hat = 1.0;
    ScalarEstimates scalars;
    std::string template_label;           // set by template-selecting estimators
    std::optional<double> oracle_nmse;    // set when computed from population inputs
};

/// MSE-optimal coefficients for beta*S + alpha*I:
///   beta0 = (gamma - 1) / ((gamma - 1) + gamma NMSE(S)),  alpha0 = (1 - beta0) eta.
inline std::pair<double, double> oracle_coeffs(double gamma, double eta, double nmse_scm_value) {
    if (!(gamma >= 1.0)) throw std::invalid_argument("oracle_coeffs: gamma must be >= 1");
    if (!(eta > 0.0)) throw std::invalid_argument("oracle_coeffs: eta must be > 0");
    if (!(nmse_scm_value > 0.0)) throw std::invalid_argument("oracle_coeffs: NMSE must be > 0");
    const double beta0 = (gamma - 1.0) / ((gamma - 1.0) + gamma * nmse_scm_value);
    return {(1.0 - beta0) * eta, beta0};
}

/// NMSE attained by the oracle: (1 - beta0)(gamma - 1)/gamma.
inline double oracle_nmse(double gamma, double beta0) {
    if (!(gamma >= 1.0)) throw std::invalid_argument("oracle_nmse: gamma must be >= 1");
    return (1.0 - beta0) * (gamma - 1.0) / gamma;
}

/// Data-driven regularized SCM: beta0_hat S + (1 - beta0_hat) eta_hat I with
/// plug-in (kappa_hat, gamma_hat). The sphericity method selects between the
/// sign-covariance estimate (Ell1) and the SCM-based one (Ell2).
inline ShrinkResult rscm(const Matrix& x, SphericityMethod method = SphericityMethod::Ell1) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (n < 3) throw std::invalid_argument("rscm: need n >= 3");
    const CovMatrix s = scm(x);
    if (!(s.trace() > 0.0)) throw std::invalid_argument("rscm: data has zero total variance");

    ScalarEstimates est;
    est.method = method;
    est.eta_hat = estimate_scale(s);
    est.kappa_hat = estimate_kurtosis(x);
    est.gamma_hat = method == SphericityMethod::Ell1 ? estimate_sphericity_ell1(x)
                                                     : estimate_sphericity_ell2(x, est.kappa_hat);

    double nmse = nmse_scm(p, est.gamma_hat, MomentContext(n, est.kappa_hat));
    if (!(nmse > 0.0))  // cannot happen with the clamped kappa_hat, kept as a guard
        nmse = nmse_scm(p, est.gamma_hat, MomentContext(n, 0.0));

    double beta = (est.gamma_hat - 1.0) / ((est.gamma_hat - 1.0) + est.gamma_hat * nmse);
    beta = clamp(beta, 0.0, 1.0);
    const double alpha = (1.0 - beta) * est.eta_hat;

    Matrix m = beta * s.matrix();
    m.diagonal().array() += alpha;
    ShrinkResult out{CovMatrix(std::move(m)), alpha, beta, est, "", std::nullopt};
    return out;
}

}  // namespace shrinkcov
