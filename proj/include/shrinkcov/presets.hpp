#pragma once

// Canned experiment configurations behind the `simulate` command: each runner
// emits theoretical curves next to seeded Monte Carlo averages with standard
// errors, as a plain numeric table.

#include <array>
#include <string>
#include <vector>

#include "shrinkcov/common.hpp"
#include "shrinkcov/mc.hpp"
#include "shrinkcov/models.hpp"
#include "shrinkcov/multiclass.hpp"
#include "shrinkcov/rscm.hpp"
#include "shrinkcov/scm.hpp"
#include "shrinkcov/tabasco.hpp"
#include "shrinkcov/theory.hpp"

namespace shrinkcov {

struct SimTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline EllipticalModel make_population(const CovMatrix& sigma, const std::string& family,
                                       double dof) {
    if (family == "gaussian") return gaussian_model(sigma);
    if (family == "t") return student_t_model(sigma, dof);
    throw std::invalid_argument("unknown family '" + family + "'; valid: gaussian, t");
}

inline CovMatrix make_structure(const std::string& model, double eta, double rho, double decay,
                                Index p) {
    if (model == "ar1") return ar1_cov(eta, rho, p);
    if (model == "cai") return cai_cov(rho, decay, p);
    throw std::invalid_argument("unknown model '" + model + "'; valid: ar1, cai");
}

/// Smallest AR(1) correlation whose sphericity at dimension p hits the target.
inline double ar1_rho_for_gamma(double target, Index p) {
    double lo = 0.0, hi = 0.999999;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (sphericity_ar1(mid, p) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// 1-D variance shrinkage curve: MSE, squared bias and variance of beta*s^2
/// over beta in [0, 1], with the empirical MSE of unit-variance t samples.
/// Note the per-trial statistic (beta s^2 - 1)^2 is heavy-tailed for small
/// dof; the emitted standard error is the plug-in estimate.
inline SimTable run_fig1(Index n, double dof, std::size_t trials, std::uint64_t seed) {
    const double kurt = 6.0 / (dof - 4.0);
    const double var_s2 = var_sample_variance(1.0, kurt, n);

    Matrix draws = mc_run(trials, 2, seed, [&](std::uint64_t s, double* out) {
        Engine rng = make_engine(s);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::chi_squared_distribution<double> chi2(dof);
        const double scale_t = std::sqrt((dof - 2.0) / dof);
        Vector x(n);
        for (Index i = 0; i < n; ++i) x(i) = scale_t * gauss(rng) * std::sqrt(dof / chi2(rng));
        const double mean = x.mean();
        const double s2 = (x.array() - mean).square().sum() / static_cast<double>(n - 1);
        out[0] = s2;
        out[1] = s2 * s2;
    });
    const Vector m = mc_mean(draws);
    // covariance of (s^2, s^4) across trials, for the per-beta standard error
    const double t_count = static_cast<double>(trials);
    Matrix c2 = Matrix::Zero(2, 2);
    for (Index i = 0; i < draws.rows(); ++i) {
        const Vector d = draws.row(i).transpose() - m;
        c2 += d * d.transpose();
    }
    c2 /= (t_count - 1.0);

    SimTable table;
    table.header = {"beta", "mse_theory", "bias2_theory", "var_theory", "mse_empirical", "mse_se"};
    for (int i = 0; i <= 100; ++i) {
        const double beta = i / 100.0;
        const double bias2 = (1.0 - beta) * (1.0 - beta);
        const double var = beta * beta * var_s2;
        const double emp = beta * beta * m(1) - 2.0 * beta * m(0) + 1.0;
        Vector grad(2);
        grad << -2.0 * beta, beta * beta;
        const double se = std::sqrt(std::max(0.0, grad.dot(c2 * grad)) / t_count);
        table.rows.push_back({beta, bias2 + var, bias2, var, emp, se});
    }
    return table;
}

/// Tapered-SCM NMSE versus bandwidth on the even grid, trapezoid family.
inline SimTable run_fig3(Index p, Index n, double rho, double decay, const std::string& family,
                         double dof, std::size_t trials, std::uint64_t seed) {
    const CovMatrix sigma = cai_cov(rho, decay, p);
    const EllipticalModel model = make_population(sigma, family, dof);
    const double kappa = population_kurtosis(model);
    const MomentContext ctx(n, kappa);

    std::vector<Index> ks;
    for (Index k = 2; k <= p; k += 2) ks.push_back(k);
    std::vector<TaperTemplate> tpls;
    tpls.reserve(ks.size());
    for (Index k : ks) tpls.push_back(trapezoid_template(p, k));

    Matrix draws =
        mc_run(trials, static_cast<int>(ks.size()), seed, [&](std::uint64_t s, double* out) {
            const Matrix x = sample(model, n, s);
            const Matrix scm_x = scm(x).matrix();
            for (std::size_t i = 0; i < tpls.size(); ++i)
                out[i] = fro_norm2(tpls[i].w.cwiseProduct(scm_x) - sigma.matrix()) / sigma.fro2();
        });
    const Vector emp = mc_mean(draws);
    const Vector se = mc_stderr(draws);

    SimTable table;
    table.header = {"k", "nmse_theory", "nmse_empirical", "nmse_se"};
    for (std::size_t i = 0; i < ks.size(); ++i)
        table.rows.push_back({static_cast<double>(ks[i]), nmse_tapered(tpls[i], sigma, ctx),
                              emp(static_cast<Index>(i)), se(static_cast<Index>(i))});
    return table;
}

/// NMSE of the SCM and of the oracle shrinkage estimator over a sample-size
/// grid, for AR(1) structures calibrated to prescribed sphericities.
inline SimTable run_fig4(Index p, const std::vector<double>& gammas, const std::string& family,
                         double dof, std::size_t trials, std::uint64_t seed) {
    SimTable table;
    table.header = {"gamma",        "n",           "nmse_scm_theory", "nmse_rscm_theory",
                    "nmse_scm_emp", "nmse_scm_se", "nmse_rscm_emp",   "nmse_rscm_se"};
    std::uint64_t stream = seed;
    for (double gamma : gammas) {
        const double rho = ar1_rho_for_gamma(gamma, p);
        const CovMatrix sigma = ar1_cov(1.0, rho, p);
        const EllipticalModel model = make_population(sigma, family, dof);
        const double kappa = population_kurtosis(model);
        const double eta = scale(sigma);
        const double gamma_exact = sphericity(sigma);
        for (Index n = 2; n <= 197; n += 5) {
            const MomentContext ctx(n, kappa);
            const double nmse_s = nmse_scm(p, gamma_exact, ctx);
            const auto [alpha0, beta0] = oracle_coeffs(gamma_exact, eta, nmse_s);
            const double nmse_o = oracle_nmse(gamma_exact, beta0);
            Matrix draws = mc_run(trials, 2, stream += 1000003, [&](std::uint64_t s, double* out) {
                const Matrix x = sample(model, n, s);
                const Matrix scm_x = scm(x).matrix();
                out[0] = fro_norm2(scm_x - sigma.matrix()) / sigma.fro2();
                Matrix oracle = beta0 * scm_x;
                oracle.diagonal().array() += alpha0;
                out[1] = fro_norm2(oracle - sigma.matrix()) / sigma.fro2();
            });
            const Vector emp = mc_mean(draws);
            const Vector se = mc_stderr(draws);
            table.rows.push_back(
                {gamma, static_cast<double>(n), nmse_s, nmse_o, emp(0), se(0), emp(1), se(1)});
        }
    }
    return table;
}

/// Multi-class coupled shrinkage reference setup: oracle tuning pair and NMSE
/// per class from the analytic surface, empirical NMSE at the oracle pair,
/// and the mean of the data-driven tuning estimates.
inline SimTable run_setup_a(Index p, const std::vector<double>& rhos,
                            const std::vector<double>& etas, const std::vector<Index>& ns,
                            const std::string& family, double dof, std::size_t trials,
                            std::uint64_t seed) {
    const std::size_t num_classes = rhos.size();
    if (etas.size() != num_classes || ns.size() != num_classes)
        throw std::invalid_argument("setupA: rhos, etas and n must have equal length");
    std::vector<CovMatrix> sigmas;
    std::vector<double> kappas;
    for (std::size_t k = 0; k < num_classes; ++k) {
        sigmas.push_back(ar1_cov(etas[k], rhos[k], p));
        kappas.push_back(family == "t" ? 2.0 / (dof - 4.0) : 0.0);
    }
    const ClassScalars cs = class_scalars_from_population(sigmas, ns, kappas);

    // oracle tuning per class: coordinate descent on the closed-form 1-D
    // minimizers of the coupled surface
    std::vector<std::array<double, 3>> oracle(num_classes);
    for (std::size_t k = 0; k < num_classes; ++k) {
        const CoupledPolyCoeffs c = coupled_mse_coeffs(k, cs);
        double a = 0.5, b = 0.5;
        for (int it = 0; it < 200; ++it) {
            const double qa = c.a22 * b * b + c.a21 * b + c.a20;
            const double la = c.a11 * b + c.a10;
            a = qa > 0.0 ? clamp(-la / (2.0 * qa), 0.0, 1.0) : 0.0;
            const double qb = c.a22 * a * a + c.a02;
            const double lb = c.a21 * a * a + c.a11 * a + c.a01;
            b = qb > 0.0 ? clamp(-lb / (2.0 * qb), 0.0, 1.0) : 0.0;
        }
        oracle[k] = {a, b, c.value(a, b) / sigmas[k].fro2()};
    }

    Matrix draws = mc_run(trials, static_cast<int>(3 * num_classes), seed,
                          [&](std::uint64_t s, double* out) {
                              std::vector<Matrix> xs;
                              for (std::size_t k = 0; k < num_classes; ++k) {
                                  const EllipticalModel model =
                                      make_population(sigmas[k], family, dof);
                                  xs.push_back(sample(model, ns[k], s + 900000007ULL * k));
                              }
                              const ClassPanel panel(std::move(xs));
                              std::vector<double> alpha, beta;
                              for (std::size_t k = 0; k < num_classes; ++k) {
                                  alpha.push_back(oracle[k][0]);
                                  beta.push_back(oracle[k][1]);
                              }
                              const auto estimates = coupled_rscm(panel, alpha, beta);
                              const CoupledFit fit = streamlined_fit(panel);
                              for (std::size_t k = 0; k < num_classes; ++k) {
                                  out[3 * k] = fro_norm2(estimates[k].matrix() -
                                                         sigmas[k].matrix()) /
                                               sigmas[k].fro2();
                                  out[3 * k + 1] = fit.alpha[k];
                                  out[3 * k + 2] = fit.beta[k];
                              }
                          });
    const Vector emp = mc_mean(draws);
    const Vector se = mc_stderr(draws);

    SimTable table;
    table.header = {"class",    "alpha_star", "beta_star",      "nmse_star_theory",
                    "nmse_emp", "nmse_se",    "mean_alpha_hat", "mean_beta_hat"};
    for (std::size_t k = 0; k < num_classes; ++k)
        table.rows.push_back({static_cast<double>(k + 1), oracle[k][0], oracle[k][1],
                              oracle[k][2], emp(static_cast<Index>(3 * k)),
                              se(static_cast<Index>(3 * k)), emp(static_cast<Index>(3 * k + 1)),
                              emp(static_cast<Index>(3 * k + 2))});
    return table;
}

/// Free-form single-population run: theoretical oracle NMSE next to the
/// empirical NMSE of the data-driven estimator.
inline SimTable run_generic(const std::string& model, double eta, double rho, double decay,
                            Index p, const std::vector<Index>& ns, const std::string& family,
                            double dof, const std::vector<std::string>& estimators,
                            std::size_t trials, std::uint64_t seed) {
    const CovMatrix sigma = make_structure(model, eta, rho, decay, p);
    const EllipticalModel pop = make_population(sigma, family, dof);
    const double kappa = population_kurtosis(pop);
    const double gamma = sphericity(sigma);
    const TemplateSet grid = default_band_grid(p);

    SimTable table;
    std::string names;
    for (std::size_t e = 0; e < estimators.size(); ++e)
        names += (e ? "|" : "") + estimators[e];
    table.header = {"n", "estimator_index(" + names + ")", "nmse_theory", "nmse_emp", "nmse_se"};
    std::uint64_t stream = seed;
    for (Index n : ns) {
        const MomentContext ctx(n, kappa);
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            const std::string& est = estimators[e];
            double theory = 0.0;
            if (est == "scm") {
                theory = nmse_scm(p, gamma, ctx);
            } else if (est == "rscm-ell1" || est == "rscm-ell2") {
                const auto [a0, b0] = oracle_coeffs(gamma, scale(sigma), nmse_scm(p, gamma, ctx));
                theory = oracle_nmse(gamma, b0);
                (void)a0;
            } else if (est == "tabasco") {
                double best = 1e300;
                for (const TaperTemplate& w : grid.templates)
                    best = std::min(
                        best, mse_tabasco(w, oracle_tabasco_beta(w, sigma, ctx), sigma, ctx));
                theory = best / sigma.fro2();
            } else {
                throw std::invalid_argument("estimator '" + est +
                                            "' is not available in the generic run; valid: scm, "
                                            "rscm-ell1, rscm-ell2, tabasco");
            }
            Matrix draws = mc_run(trials, 1, stream += 1000003, [&](std::uint64_t s, double* out) {
                const Matrix x = sample(pop, n, s);
                Matrix est_m;
                if (est == "scm") est_m = scm(x).matrix();
                else if (est == "rscm-ell1") est_m = rscm(x, SphericityMethod::Ell1).estimate.matrix();
                else if (est == "rscm-ell2") est_m = rscm(x, SphericityMethod::Ell2).estimate.matrix();
                else est_m = tabasco(x, grid).estimate.matrix();
                out[0] = fro_norm2(est_m - sigma.matrix()) / sigma.fro2();
            });
            table.rows.push_back({static_cast<double>(n), static_cast<double>(e), theory,
                                  mc_mean(draws)(0), mc_stderr(draws)(0)});
        }
    }
    return table;
}

}  // namespace shrinkcov
