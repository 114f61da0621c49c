#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "shrinkcov/shrinkcov.hpp"

namespace sct {

using namespace shrinkcov;

/// Monte Carlo mean and standard error of a per-trial scalar statistic.
struct McStat {
    double mean;
    double se;
};

template <typename TrialFn>
McStat mc_scalar(std::size_t trials, std::uint64_t seed, TrialFn&& fn) {
    Matrix draws = mc_run(trials, 1, seed, [&](std::uint64_t s, double* out) { out[0] = fn(s); });
    return {mc_mean(draws)(0), mc_stderr(draws)(0)};
}

/// |x - ref| <= k standard errors.
inline bool within_se(const McStat& stat, double ref, double k = 3.0) {
    return std::abs(stat.mean - ref) <= k * stat.se;
}

inline Matrix random_spd(Index p, std::uint64_t seed, double jitter = 0.5) {
    Engine rng = make_engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix a(p, p);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j) a(i, j) = gauss(rng);
    Matrix s = a * a.transpose() / static_cast<double>(p);
    s.diagonal().array() += jitter;
    return s;
}

/// Exhaustive active-set enumeration for small bound-constrained QPs: solve
/// every bound-activation pattern as an equality-constrained subproblem and
/// keep the best feasible candidate. Independent of the active-set solver.
inline Vector qp_bruteforce(const QpProblem& prob) {
    const Index m = prob.size();
    double best_obj = std::numeric_limits<double>::infinity();
    Vector best;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        std::vector<Index> free;
        Vector a(m);
        bool valid = true;
        for (Index i = 0; i < m; ++i) {
            if (mask & (1u << i)) {
                if (!std::isfinite(prob.lower(i))) {
                    valid = false;
                    break;
                }
                a(i) = prob.lower(i);
            } else {
                free.push_back(i);
            }
        }
        if (!valid) continue;

        const Index nf = static_cast<Index>(free.size());
        if (nf > 0) {
            Matrix qff(nf, nf);
            Vector c(nf);
            for (Index r = 0; r < nf; ++r) {
                c(r) = prob.b(free[r]);
                for (Index s = 0; s < nf; ++s) qff(r, s) = prob.q(free[r], free[s]);
                for (Index i = 0; i < m; ++i)
                    if (mask & (1u << i)) c(r) -= prob.q(free[r], i) * prob.lower(i);
            }
            Eigen::LLT<Matrix> llt(qff);
            if (llt.info() != Eigen::Success) continue;
            Vector xf;
            if (prob.has_equality) {
                double fixed_sum = 0.0;
                for (Index i = 0; i < m; ++i)
                    if (mask & (1u << i)) fixed_sum += prob.lower(i);
                const Vector ones = Vector::Ones(nf);
                const Vector qc = llt.solve(c);
                const Vector q1 = llt.solve(ones);
                const double lambda = (prob.equality_rhs - fixed_sum - ones.dot(qc)) / ones.dot(q1);
                xf = qc + lambda * q1;
            } else {
                xf = llt.solve(c);
            }
            for (Index r = 0; r < nf; ++r) a(free[r]) = xf(r);
        } else if (prob.has_equality) {
            if (std::abs(a.sum() - prob.equality_rhs) > 1e-9) continue;
        }

        bool feasible = true;
        for (Index i = 0; i < m; ++i)
            if (std::isfinite(prob.lower(i)) && a(i) < prob.lower(i) - 1e-10) feasible = false;
        if (!feasible) continue;
        const double obj = 0.5 * a.dot(prob.q * a) - prob.b.dot(a);
        if (obj < best_obj) {
            best_obj = obj;
            best = a;
        }
    }
    return best;
}

}  // namespace sct
