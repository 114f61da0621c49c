#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdint>

#include "shrinkcov/common.hpp"
#include "shrinkcov/cov_matrix.hpp"
#include "shrinkcov/rng.hpp"

namespace shrinkcov {

enum class Family { Gaussian, StudentT };

/// Elliptical population model (mu, Sigma, family). Sigma is the covariance
/// matrix of the draws, not the raw scatter: Student-t draws are rescaled by
/// sqrt((nu-2)/nu) so that cov(x) = Sigma holds for every family.
struct EllipticalModel {
    Vector mu;
    CovMatrix sigma;
    Family family = Family::Gaussian;
    double dof = 0.0;  // Student-t degrees of freedom; ignored for Gaussian

    EllipticalModel(Vector mu_in, CovMatrix sigma_in, Family fam = Family::Gaussian,
                    double dof_in = 0.0)
        : mu(std::move(mu_in)), sigma(std::move(sigma_in)), family(fam), dof(dof_in) {
        if (mu.size() != sigma.dim()) throw std::invalid_argument("EllipticalModel: mu/sigma size mismatch");
        if (family == Family::StudentT && dof <= 2.0)
            throw std::invalid_argument("EllipticalModel: Student-t needs dof > 2 for finite covariance");
    }

    Index dim() const { return sigma.dim(); }
};

inline EllipticalModel gaussian_model(CovMatrix sigma) {
    Vector mu = Vector::Zero(sigma.dim());
    return EllipticalModel(std::move(mu), std::move(sigma), Family::Gaussian);
}

inline EllipticalModel student_t_model(CovMatrix sigma, double dof) {
    Vector mu = Vector::Zero(sigma.dim());
    return EllipticalModel(std::move(mu), std::move(sigma), Family::StudentT, dof);
}

/// Elliptical kurtosis kappa = kurt(x_i)/3. Gaussian: 0. Student-t(nu): 2/(nu-4).
inline double population_kurtosis(const EllipticalModel& model) {
    switch (model.family) {
        case Family::Gaussian:
            return 0.0;
        case Family::StudentT:
            if (model.dof <= 4.0)
                throw std::invalid_argument("population_kurtosis: infinite kurtosis for dof <= 4");
            return 2.0 / (model.dof - 4.0);
    }
    throw std::logic_error("population_kurtosis: unknown family");
}

/// Draw n i.i.d. rows from the model. Deterministic for a given seed.
inline Matrix sample(const EllipticalModel& model, Index n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    const Index p = model.dim();

    Eigen::LLT<Matrix> llt(model.sigma.matrix());
    if (llt.info() != Eigen::Success || !model.sigma.is_pd())
        throw NotPositiveDefinite("sample: model covariance is not positive definite");
    const Matrix chol_l = llt.matrixL();

    Engine rng = make_engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix x(n, p);
    Vector z(p);
    if (model.family == Family::Gaussian) {
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < p; ++j) z(j) = gauss(rng);
            x.row(i) = (model.mu + chol_l * z).transpose();
        }
    } else {
        // x = mu + sqrt((nu-2)/nu) * L z / sqrt(w/nu), w ~ chi^2_nu, gives cov(x) = Sigma.
        std::chi_squared_distribution<double> chi2(model.dof);
        const double cov_fix = std::sqrt((model.dof - 2.0) / model.dof);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < p; ++j) z(j) = gauss(rng);
            const double w = chi2(rng);
            const double mix = std::sqrt(model.dof / w) * cov_fix;
            x.row(i) = (model.mu + mix * (chol_l * z)).transpose();
        }
    }
    return x;
}

/// AR(1) covariance: Sigma_ij = eta * rho^|i-j|.
inline CovMatrix ar1_cov(double eta, double rho, Index p) {
    if (!(eta > 0.0)) throw std::invalid_argument("ar1_cov: eta must be > 0");
    if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("ar1_cov: |rho| must be < 1");
    if (p < 1) throw std::invalid_argument("ar1_cov: p must be >= 1");
    Matrix sigma(p, p);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j) sigma(i, j) = eta * std::pow(rho, std::abs(double(i - j)));
    return CovMatrix(std::move(sigma));
}

/// Polynomially decaying correlation model: unit diagonal and
/// Sigma_ij = rho * |i-j|^-(alpha+1) off the diagonal. Rejects parameter
/// combinations that are not positive definite.
inline CovMatrix cai_cov(double rho, double alpha, Index p) {
    if (p < 1) throw std::invalid_argument("cai_cov: p must be >= 1");
    Matrix sigma(p, p);
    for (Index i = 0; i < p; ++i) {
        sigma(i, i) = 1.0;
        for (Index j = i + 1; j < p; ++j) {
            const double v = rho * std::pow(double(j - i), -(alpha + 1.0));
            sigma(i, j) = v;
            sigma(j, i) = v;
        }
    }
    CovMatrix out(std::move(sigma));
    if (!out.is_pd())
        throw NotPositiveDefinite("cai_cov: (rho, alpha, p) combination is not positive definite");
    return out;
}

/// Scale eta = tr(Sigma)/p, the mean eigenvalue.
inline double scale(const CovMatrix& sigma) {
    if (!(sigma.trace() > 0.0)) throw std::invalid_argument("scale: tr(Sigma) must be > 0");
    return sigma.trace() / static_cast<double>(sigma.dim());
}

/// Sphericity gamma = p tr(Sigma^2)/tr(Sigma)^2, in [1, p]. Equals 1 iff
/// Sigma is proportional to I and p iff Sigma has rank 1.
inline double sphericity(const CovMatrix& sigma) {
    if (!(sigma.trace() > 0.0)) throw std::invalid_argument("sphericity: tr(Sigma) must be > 0");
    const double p = static_cast<double>(sigma.dim());
    return p * sigma.fro2() / (sigma.trace() * sigma.trace());
}

/// Shape matrix Lambda = p Sigma / tr(Sigma); tr(Lambda) = p.
inline Matrix shape(const CovMatrix& sigma) {
    if (!(sigma.trace() > 0.0)) throw std::invalid_argument("shape: tr(Sigma) must be > 0");
    return (static_cast<double>(sigma.dim()) / sigma.trace()) * sigma.matrix();
}

/// Closed-form sphericity of the AR(1) model:
/// gamma = (p - p rho^4 - 2 rho^2 + 2 (rho^2)^(p+1)) / (p (rho^2 - 1)^2).
inline double sphericity_ar1(double rho, Index p) {
    if (p < 1) throw std::invalid_argument("sphericity_ar1: p must be >= 1");
    const double u = rho * rho;
    if (u >= 1.0) throw std::invalid_argument("sphericity_ar1: |rho| must be < 1");
    const double pd = static_cast<double>(p);
    if (u == 0.0) return 1.0;
    return (pd - pd * u * u - 2.0 * u + 2.0 * std::pow(u, pd + 1.0)) / (pd * (u - 1.0) * (u - 1.0));
}

}  // namespace shrinkcov
