#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <vector>

#include "shrinkcov/common.hpp"

namespace shrinkcov {

/// Strictly convex quadratic program
///   minimize 1/2 a^T Q a - b^T a
///   subject to a_i >= lower_i (lower_i = -inf disables the bound)
///   and optionally 1^T a = equality_rhs.
struct QpProblem {
    Matrix q;
    Vector b;
    Vector lower;             // defaults to all zeros
    bool has_equality = false;
    double equality_rhs = 1.0;

    QpProblem(Matrix q_in, Vector b_in) : q(std::move(q_in)), b(std::move(b_in)) {
        if (q.rows() != q.cols() || q.rows() != b.size())
            throw std::invalid_argument("QpProblem: inconsistent dimensions");
        if (!q.isApprox(q.transpose(), 1e-10)) throw std::invalid_argument("QpProblem: Q must be symmetric");
        lower = Vector::Zero(b.size());
    }

    Index size() const { return b.size(); }
};

struct QpSolution {
    Vector a;
    double lambda = 0.0;  // multiplier of the equality constraint
    Vector mu;            // multipliers of the lower bounds (0 on inactive)
    double objective = 0.0;
};

namespace detail {

inline double qp_objective(const QpProblem& prob, const Vector& a) {
    return 0.5 * a.dot(prob.q * a) - prob.b.dot(a);
}

/// Minimizer over the free coordinates with fixed actives and the optional
/// equality constraint. Returns (x_free, lambda).
inline std::pair<Vector, double> solve_eqp(const QpProblem& prob, const std::vector<bool>& active,
                                           const Vector& fixed) {
    const Index m = prob.size();
    std::vector<Index> free;
    for (Index i = 0; i < m; ++i)
        if (!active[i]) free.push_back(i);
    const Index nf = static_cast<Index>(free.size());
    if (nf == 0) return {Vector(), 0.0};

    Matrix qff(nf, nf);
    Vector c(nf);
    for (Index r = 0; r < nf; ++r) {
        c(r) = prob.b(free[r]);
        for (Index s = 0; s < nf; ++s) qff(r, s) = prob.q(free[r], free[s]);
        for (Index i = 0; i < m; ++i)
            if (active[i]) c(r) -= prob.q(free[r], i) * fixed(i);
    }
    Eigen::LLT<Matrix> llt(qff);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("qp: principal submatrix of Q is not positive definite");

    if (!prob.has_equality) return {llt.solve(c), 0.0};

    double fixed_sum = 0.0;
    for (Index i = 0; i < m; ++i)
        if (active[i]) fixed_sum += fixed(i);
    const Vector ones = Vector::Ones(nf);
    const Vector qc = llt.solve(c);
    const Vector q1 = llt.solve(ones);
    const double lambda = (prob.equality_rhs - fixed_sum - ones.dot(qc)) / ones.dot(q1);
    return {qc + lambda * q1, lambda};
}

inline Vector feasible_start(const QpProblem& prob) {
    const Index m = prob.size();
    const double inf = std::numeric_limits<double>::infinity();
    Vector a(m);
    for (Index i = 0; i < m; ++i) a(i) = std::isfinite(prob.lower(i)) ? prob.lower(i) : 0.0;
    if (!prob.has_equality) return a;

    double deficit = prob.equality_rhs - a.sum();
    if (deficit > 0.0) {
        // Raising any coordinate keeps the bounds satisfied.
        a(0) += deficit;
        return a;
    }
    // Need to lower; only coordinates without a finite bound have room.
    for (Index i = 0; i < m && deficit < 0.0; ++i) {
        if (!std::isfinite(prob.lower(i))) {
            a(i) += deficit;
            deficit = 0.0;
        }
    }
    if (deficit < -1e-12 * std::max(1.0, std::abs(prob.equality_rhs)))
        throw std::invalid_argument("qp: equality constraint infeasible with the lower bounds");
    (void)inf;
    return a;
}

}  // namespace detail

/// Primal active-set solve. Deterministic; Bland's smallest-index rule guards
/// against cycling. KKT conditions hold to ~1e-10 at the returned point.
inline QpSolution qp_solve_detailed(const QpProblem& prob) {
    const Index m = prob.size();
    {
        Eigen::LLT<Matrix> llt(prob.q);
        if (llt.info() != Eigen::Success) throw NotPositiveDefinite("qp: Q is not positive definite");
    }

    Vector a = detail::feasible_start(prob);
    std::vector<bool> active(m, false);
    const double scale = std::max(1.0, prob.b.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    for (Index i = 0; i < m; ++i)
        if (std::isfinite(prob.lower(i)) && a(i) <= prob.lower(i) + tol) active[i] = true;

    double lambda = 0.0;
    const long max_iter = 100 * static_cast<long>(m) + 1000;
    for (long iter = 0; iter < max_iter; ++iter) {
        auto [x_free, lam] = detail::solve_eqp(prob, active, a);
        lambda = lam;
        Vector target = a;
        {
            Index r = 0;
            for (Index i = 0; i < m; ++i)
                if (!active[i]) target(i) = x_free(r++);
        }

        const double step_norm = (target - a).cwiseAbs().maxCoeff();
        if (step_norm <= 1e-11 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
            // At the subproblem optimum; check multipliers of the active bounds.
            const Vector grad = prob.q * a - prob.b;
            Index drop = -1;
            double worst = -1e-10 * scale;
            for (Index i = 0; i < m; ++i) {
                if (!active[i]) continue;
                const double mu_i = grad(i) - (prob.has_equality ? lambda : 0.0);
                if (mu_i < worst) {  // Bland: first (smallest) offending index wins
                    drop = i;
                    worst = mu_i;
                    break;
                }
            }
            if (drop < 0) {
                QpSolution sol;
                sol.a = a;
                sol.lambda = prob.has_equality ? lambda : 0.0;
                sol.mu = Vector::Zero(m);
                for (Index i = 0; i < m; ++i)
                    if (active[i]) sol.mu(i) = grad(i) - sol.lambda;
                sol.objective = detail::qp_objective(prob, a);
                return sol;
            }
            active[drop] = false;
            continue;
        }

        // Line step toward the subproblem optimum, stopping at the first bound.
        double step = 1.0;
        Index blocking = -1;
        for (Index i = 0; i < m; ++i) {
            if (active[i] || !std::isfinite(prob.lower(i))) continue;
            const double d = target(i) - a(i);
            if (d < -tol) {
                const double s = (prob.lower(i) - a(i)) / d;
                if (s < step - 1e-15) {
                    step = s;
                    blocking = i;
                }
            }
        }
        if (blocking < 0) {
            a = target;
        } else {
            a += step * (target - a);
            a(blocking) = prob.lower(blocking);
            active[blocking] = true;
        }
    }
    throw ConvergenceFailure("qp: active-set iteration limit exceeded", a);
}

/// Unique minimizer of the strictly convex QP.
inline Vector qp_solve(const QpProblem& prob) {
    return qp_solve_detailed(prob).a;
}

}  // namespace shrinkcov
