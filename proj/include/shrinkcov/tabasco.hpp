#pragma once

#include <optional>
#include <vector>

#include "shrinkcov/common.hpp"
#include "shrinkcov/cov_matrix.hpp"
#include "shrinkcov/rscm.hpp"
#include "shrinkcov/scalars.hpp"
#include "shrinkcov/scm.hpp"
#include "shrinkcov/theory.hpp"

namespace shrinkcov {

/// Ordered collection of tapering templates sharing a dimension.
struct TemplateSet {
    std::vector<TaperTemplate> templates;
    bool has_all_ones = false;

    explicit TemplateSet(std::vector<TaperTemplate> ts) : templates(std::move(ts)) {
        if (templates.empty()) throw std::invalid_argument("TemplateSet: empty set");
        const Index p = templates.front().dim();
        for (const TaperTemplate& t : templates) {
            if (t.dim() != p) throw std::invalid_argument("TemplateSet: templates must share p");
            if (t.is_all_ones()) has_all_ones = true;
        }
    }

    Index dim() const { return templates.front().dim(); }
    std::size_t size() const { return templates.size(); }
};

/// Default grid: band(k) for k in {1, ..., min(p, 30)} plus the all-ones
/// template band(p).
inline TemplateSet default_band_grid(Index p) {
    std::vector<TaperTemplate> ts;
    const Index kmax = std::min<Index>(p, 30);
    for (Index k = 1; k <= kmax; ++k) ts.push_back(banding_template(p, k));
    if (kmax < p) ts.push_back(banding_template(p, p));
    return TemplateSet(std::move(ts));
}

/// Second moments of the decomposition W o S = eta_hat I + (W o S - eta_hat I)
/// with eta_hat = tr(S)/p. The estimator beta (W o S) + (1 - beta) eta_hat I
/// has MSE(beta) = beta^2 e_aa + 2 beta e_ab + e_bb.
struct TabascoMoments {
    double e_aa;  // E|| W o S - eta_hat I ||_F^2
    double e_ab;  // E< W o S - eta_hat I, eta_hat I - Sigma >
    double e_bb;  // E|| eta_hat I - Sigma ||_F^2
};

inline TabascoMoments tabasco_moments(const TaperTemplate& w, const CovMatrix& sigma,
                                      const MomentContext& ctx) {
    const double p = static_cast<double>(sigma.dim());
    const double eta = sigma.trace() / p;
    const double e_tr2 = expected_tr2_scm(sigma, ctx);
    const double gamma_v = p * fro_norm2(w.v.cwiseProduct(sigma.matrix())) /
                           (sigma.trace() * sigma.trace());
    TabascoMoments m;
    m.e_aa = expected_fro2_tapered(w, sigma, ctx) - e_tr2 / p;
    m.e_ab = -p * eta * eta * (gamma_v - 1.0);
    m.e_bb = e_tr2 / p - 2.0 * p * eta * eta + sigma.fro2();
    return m;
}

/// MSE-optimal shrinkage for a fixed template,
/// beta0 = p (gamma_V - 1) eta^2 / (E||W o S||_F^2 - E[tr(S)^2]/p), in [0,1].
inline double oracle_tabasco_beta(const TaperTemplate& w, const CovMatrix& sigma,
                                  const MomentContext& ctx) {
    const TabascoMoments m = tabasco_moments(w, sigma, ctx);
    if (!(m.e_aa > 0.0)) throw std::invalid_argument("oracle_tabasco_beta: nonpositive denominator");
    return clamp(-m.e_ab / m.e_aa, 0.0, 1.0);
}

/// Theoretical MSE of beta (W o S) + (1 - beta) (tr(S)/p) I.
inline double mse_tabasco(const TaperTemplate& w, double beta, const CovMatrix& sigma,
                          const MomentContext& ctx) {
    const TabascoMoments m = tabasco_moments(w, sigma, ctx);
    return beta * beta * m.e_aa + 2.0 * beta * m.e_ab + m.e_bb;
}

/// MSE-optimal template index: argmin_k beta0(k) (1 - gamma_V(k)). The MSE at
/// the per-template optimum is e_bb + p eta^2 beta0(k)(1 - gamma_V(k)) and
/// e_bb does not depend on k. Ties go to the smaller index (sparser template).
inline std::size_t select_template(const TemplateSet& set, const CovMatrix& sigma,
                                   const MomentContext& ctx) {
    const double p = static_cast<double>(sigma.dim());
    if (set.dim() != sigma.dim()) throw std::invalid_argument("select_template: dimension mismatch");
    std::size_t best = 0;
    double best_obj = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) {
        const TaperTemplate& w = set.templates[k];
        const double gamma_v = p * fro_norm2(w.v.cwiseProduct(sigma.matrix())) /
                               (sigma.trace() * sigma.trace());
        const double beta0 = oracle_tabasco_beta(w, sigma, ctx);
        const double obj = beta0 * (1.0 - gamma_v);
        if (k == 0 || obj < best_obj) {
            best = k;
            best_obj = obj;
        }
    }
    return best;
}

/// Joint data-driven selection of tapering template and shrinkage intensity:
///   M = beta0_hat(k0_hat) (W(k0_hat) o S) + (1 - beta0_hat(k0_hat)) (tr(S)/p) I.
/// Plug-in scalars: kappa_hat from the marginal kurtosis average, gamma_V_hat
/// and gamma_W_hat from the tapered sphericity estimator, eta_hat = tr(S)/p.
/// Note the distinction: the sphericity entering the numerator of beta0(k) is
/// that of V o Sigma (element-wise square root of W), while the template
/// applied to S is W itself. For 0/1 banding templates V = W.
/// `fixed_beta`, when set, bypasses the estimated beta0 (beta = 1 returns the
/// tapered SCM for the selected template).
inline ShrinkResult tabasco(const Matrix& x, const TemplateSet& set,
                            std::optional<double> fixed_beta = std::nullopt) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (set.dim() != p) throw std::invalid_argument("tabasco: template dimension mismatch");
    if (n < 3) throw std::invalid_argument("tabasco: need n >= 3");

    const CovMatrix s = scm(x);
    if (!(s.trace() > 0.0)) throw std::invalid_argument("tabasco: data has zero total variance");
    const double pd = static_cast<double>(p);
    const double eta_hat = s.trace() / pd;
    const double kappa_hat = estimate_kurtosis(x);
    const double gamma_hat = estimate_sphericity_ell2_from_scm(s, n, kappa_hat);
    const MomentContext ctx(n, kappa_hat);
    const double t1 = ctx.tau1();
    const double t2 = ctx.tau2();

    // E[tr(S)^2]/p with plug-in norms: 2 tau1 gamma_hat eta^2 + (1 + tau2) p eta^2.
    const double e_tr2_over_p = 2.0 * t1 * gamma_hat * eta_hat * eta_hat +
                                (1.0 + t2) * pd * eta_hat * eta_hat;

    std::size_t best_k = 0;
    double best_obj = 0.0;
    double best_beta = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) {
        const TaperTemplate& w = set.templates[k];
        const double gamma_w = estimate_sphericity_tapered_from_scm(s, n, w, kappa_hat);
        double gamma_v = gamma_w;
        if (!w.is_all_ones() && !(w.v.array() == w.w.array()).all()) {
            const TaperTemplate v_tpl(w.v, w.label + "_sqrt");
            gamma_v = estimate_sphericity_tapered_from_scm(s, n, v_tpl, kappa_hat);
        }
        // E||W o S||_F^2 with plug-in norms in the exact moment expansion.
        const double e_ws = (1.0 + t1 + t2) * gamma_w * pd * eta_hat * eta_hat +
                            t1 * tr_diag_taper_sq(s.matrix(), w);
        const double denom = e_ws - e_tr2_over_p;
        const double num = pd * (gamma_v - 1.0) * eta_hat * eta_hat;
        double beta;
        if (num <= 0.0) beta = 0.0;
        else if (denom <= 0.0) beta = 1.0;
        else beta = clamp(num / denom, 0.0, 1.0);

        const double obj = beta * (1.0 - gamma_v);
        if (k == 0 || obj < best_obj) {
            best_k = k;
            best_obj = obj;
            best_beta = beta;
        }
    }

    const double beta = fixed_beta ? clamp(*fixed_beta, 0.0, 1.0) : best_beta;
    const TaperTemplate& w = set.templates[best_k];
    Matrix m = beta * w.w.cwiseProduct(s.matrix());
    m.diagonal().array() += (1.0 - beta) * eta_hat;

    ShrinkResult out{CovMatrix(std::move(m)),
                     (1.0 - beta) * eta_hat,
                     beta,
                     ScalarEstimates{eta_hat, kappa_hat, gamma_hat, SphericityMethod::Ell2},
                     w.label,
                     std::nullopt};
    return out;
}

}  // namespace shrinkcov
