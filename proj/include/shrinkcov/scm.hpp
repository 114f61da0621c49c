#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "shrinkcov/common.hpp"
#include "shrinkcov/cov_matrix.hpp"

namespace shrinkcov {

/// Unbiased sample covariance matrix (divisor n-1), centered at the sample mean.
inline CovMatrix scm(const Matrix& x) {
    const Index n = x.rows();
    if (n < 2) throw std::invalid_argument("scm: need at least 2 samples");
    const Vector mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - mean.transpose();
    Matrix s = (centered.transpose() * centered) / static_cast<double>(n - 1);
    return CovMatrix(std::move(s));
}

/// Per-class sample matrices sharing a common dimension p.
class ClassPanel {
public:
    ClassPanel() = default;

    explicit ClassPanel(std::vector<Matrix> samples, std::vector<std::string> labels = {})
        : samples_(std::move(samples)), labels_(std::move(labels)) {
        if (samples_.empty()) throw std::invalid_argument("ClassPanel: no classes");
        const Index p = samples_.front().cols();
        for (const Matrix& x : samples_) {
            if (x.cols() != p) throw std::invalid_argument("ClassPanel: classes must share dimension p");
            if (x.rows() < 2) throw std::invalid_argument("ClassPanel: every class needs n_k >= 2");
        }
        if (labels_.empty())
            for (std::size_t k = 0; k < samples_.size(); ++k) labels_.push_back("class" + std::to_string(k));
        if (labels_.size() != samples_.size())
            throw std::invalid_argument("ClassPanel: label count mismatch");
    }

    std::size_t num_classes() const { return samples_.size(); }
    Index dim() const { return samples_.front().cols(); }
    Index class_size(std::size_t k) const { return samples_.at(k).rows(); }
    Index total_size() const {
        Index n = 0;
        for (const Matrix& x : samples_) n += x.rows();
        return n;
    }
    const Matrix& samples(std::size_t k) const { return samples_.at(k); }
    const std::string& label(std::size_t k) const { return labels_.at(k); }

    /// pi_k = n_k / sum_j n_j. Sums to 1 exactly up to rounding of the ratio.
    std::vector<double> proportions() const {
        const double total = static_cast<double>(total_size());
        std::vector<double> pi;
        pi.reserve(num_classes());
        for (const Matrix& x : samples_) pi.push_back(static_cast<double>(x.rows()) / total);
        return pi;
    }

private:
    std::vector<Matrix> samples_;
    std::vector<std::string> labels_;
};

/// Pooled SCM, sum_k pi_k S_k with the sample-proportion weights.
inline CovMatrix pooled_scm(const ClassPanel& panel) {
    const std::vector<double> pi = panel.proportions();
    Matrix acc = Matrix::Zero(panel.dim(), panel.dim());
    for (std::size_t k = 0; k < panel.num_classes(); ++k)
        acc += pi[k] * scm(panel.samples(k)).matrix();
    return CovMatrix(std::move(acc));
}

/// Sample spatial median: argmin_mu sum_i ||x_i - mu||. Weiszfeld iteration
/// with a damped step and the standard modification when an iterate lands on
/// a data point. Converges when the relative objective decrease drops below
/// 1e-10; throws ConvergenceFailure (carrying the last iterate) after 500
/// iterations.
inline Vector spatial_median(const Matrix& x) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (n < 1) throw std::invalid_argument("spatial_median: need at least 1 sample");
    if (n == 1) return x.row(0).transpose();

    const auto objective = [&](const Vector& mu) {
        long double acc = 0.0L;
        for (Index i = 0; i < n; ++i) acc += (x.row(i).transpose() - mu).norm();
        return static_cast<double>(acc);
    };

    Vector mu = x.colwise().mean().transpose();
    double obj = objective(mu);
    const double coincide_tol = 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff());
    constexpr int max_iter = 500;
    constexpr double rel_tol = 1e-10;

    for (int iter = 0; iter < max_iter; ++iter) {
        Vector weighted = Vector::Zero(p);
        double weight_sum = 0.0;
        Vector direction = Vector::Zero(p);  // sum of unit vectors from mu to non-coincident points
        Index coincident = 0;
        for (Index i = 0; i < n; ++i) {
            const Vector d = x.row(i).transpose() - mu;
            const double dist = d.norm();
            if (dist < coincide_tol) {
                ++coincident;
                continue;
            }
            weighted += x.row(i).transpose() / dist;
            weight_sum += 1.0 / dist;
            direction += d / dist;
        }
        if (weight_sum == 0.0) return mu;  // all points coincide with mu

        Vector next;
        if (coincident > 0) {
            // Modified (Vardi-Zhang) step at a data point: stationary when the
            // pull of the other points does not exceed the point's own weight.
            const double pull = direction.norm();
            if (pull <= static_cast<double>(coincident)) return mu;
            const Vector t = weighted / weight_sum;
            const double lambda = std::min(1.0, static_cast<double>(coincident) / pull);
            next = (1.0 - lambda) * t + lambda * mu;
        } else {
            next = weighted / weight_sum;
        }

        // Damping: halve the step until the objective does not increase.
        double step = 1.0;
        Vector candidate = mu + step * (next - mu);
        double cand_obj = objective(candidate);
        while (cand_obj > obj && step > 1e-8) {
            step *= 0.5;
            candidate = mu + step * (next - mu);
            cand_obj = objective(candidate);
        }

        const double decrease = obj - cand_obj;
        mu = candidate;
        const double prev = obj;
        obj = cand_obj;
        if (decrease >= 0.0 && decrease < rel_tol * std::max(1.0, prev)) return mu;
    }
    throw ConvergenceFailure("spatial_median: no convergence after 500 iterations", mu);
}

/// Scaled spatial sign covariance matrix,
/// Lambda_hat = (p/n) sum_i (x_i - mu)(x_i - mu)^T / ||x_i - mu||^2,
/// centered at the spatial median when no center is given. Rows that
/// coincide with the center are skipped and n reduced accordingly.
inline CovMatrix sscm(const Matrix& x, const Vector* center = nullptr) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (n < 1) throw std::invalid_argument("sscm: need at least 1 sample");
    const Vector mu = center ? *center : spatial_median(x);
    if (mu.size() != p) throw std::invalid_argument("sscm: center has wrong dimension");

    const double skip_tol = 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff());
    Matrix acc = Matrix::Zero(p, p);
    Index used = 0;
    for (Index i = 0; i < n; ++i) {
        const Vector d = x.row(i).transpose() - mu;
        const double norm2 = d.squaredNorm();
        if (std::sqrt(norm2) < skip_tol) continue;
        acc += d * d.transpose() / norm2;
        ++used;
    }
    if (used == 0) throw std::invalid_argument("sscm: all samples coincide with the center");
    acc *= static_cast<double>(p) / static_cast<double>(used);
    return CovMatrix(std::move(acc));
}

/// Tapering template W in the admissible set (symmetric, unit diagonal,
/// nonnegative entries) together with its element-wise square root V.
struct TaperTemplate {
    Matrix w;
    Matrix v;
    std::string label;

    TaperTemplate(Matrix w_in, std::string label_in = "") : w(std::move(w_in)), label(std::move(label_in)) {
        if (w.rows() != w.cols()) throw std::invalid_argument("TaperTemplate: W must be square");
        if (!w.isApprox(w.transpose(), 1e-12)) throw std::invalid_argument("TaperTemplate: W must be symmetric");
        for (Index i = 0; i < w.rows(); ++i) {
            if (std::abs(w(i, i) - 1.0) > 1e-12)
                throw std::invalid_argument("TaperTemplate: W must have unit diagonal");
            for (Index j = 0; j < w.cols(); ++j)
                if (w(i, j) < 0.0) throw std::invalid_argument("TaperTemplate: W entries must be nonnegative");
        }
        v = w.cwiseSqrt();
    }

    Index dim() const { return w.rows(); }
    bool is_all_ones() const { return (w.array() == 1.0).all(); }
};

/// Banding template: w_ij = 1 if |i-j| < k, else 0. k = p gives the all-ones
/// matrix (no tapering), k = 1 the identity template.
inline TaperTemplate banding_template(Index p, Index k) {
    if (k < 1 || k > p) throw std::invalid_argument("banding_template: k must lie in [1, p]");
    Matrix w = Matrix::Zero(p, p);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j)
            if (std::abs(double(i - j)) < static_cast<double>(k)) w(i, j) = 1.0;
    return TaperTemplate(std::move(w), "band(" + std::to_string(k) + ")");
}

/// Trapezoid tapering template: weights 1 up to lag k/2, then decaying
/// linearly to 0 at lag k,
///   w_ij = 1                    for |i-j| <= k/2,
///   w_ij = 2 - 2|i-j|/k         for k/2 < |i-j| < k,
///   w_ij = 0                    for |i-j| >= k.
/// k = 1 gives the identity template, k = p the all-ones matrix is NOT
/// reached (weights decay beyond p/2); use banding_template(p, p) for that.
inline TaperTemplate trapezoid_template(Index p, Index k) {
    if (k < 1) throw std::invalid_argument("trapezoid_template: k must be >= 1");
    Matrix w = Matrix::Zero(p, p);
    const double kh = static_cast<double>(k) / 2.0;
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j) {
            const double d = std::abs(double(i - j));
            if (d <= kh) w(i, j) = 1.0;
            else if (d < static_cast<double>(k)) w(i, j) = 2.0 - d / kh;
        }
    return TaperTemplate(std::move(w), "taper(" + std::to_string(k) + ")");
}

/// Hadamard taper W o S. Keeps the trace: tr(W o S) = tr(S).
inline CovMatrix taper(const TaperTemplate& w, const CovMatrix& s) {
    if (w.dim() != s.dim()) throw std::invalid_argument("taper: dimension mismatch");
    return CovMatrix(w.w.cwiseProduct(s.matrix()));
}

}  // namespace shrinkcov
