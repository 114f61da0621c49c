#include "support.hpp"

#include <limits>

using namespace shrinkcov;
using Catch::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using sct::qp_bruteforce;

QpProblem random_problem(Index m, std::uint64_t seed) {
    QpProblem prob(sct::random_spd(m, seed, 1.0), Vector::Zero(m));
    Engine rng = make_engine(seed + 101);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index i = 0; i < m; ++i) prob.b(i) = gauss(rng);
    return prob;
}

}  // namespace

TEST_CASE("separable projection case", "[qp]") {
    QpProblem prob(Matrix::Identity(2, 2), Vector(2));
    prob.b << 1.0, -1.0;
    const Vector a = qp_solve(prob);
    REQUIRE(a(0) == Approx(1.0));
    REQUIRE(a(1) == Approx(0.0).margin(1e-14));
}

TEST_CASE("feasible unconstrained optimum is returned exactly", "[qp]") {
    Matrix q(3, 3);
    q << 4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0;
    Vector b(3);
    b << 4.0, 3.0, 2.0;  // Q^-1 b is strictly positive
    QpProblem prob(q, b);
    const Vector expect = q.llt().solve(b);
    REQUIRE(expect.minCoeff() > 0.0);
    const Vector a = qp_solve(prob);
    REQUIRE((a - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("random problems match exhaustive enumeration", "[qp]") {
    for (Index m : {Index(2), Index(4), Index(6), Index(8)}) {
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            const QpProblem prob = random_problem(m, 1000 * m + seed);
            const Vector got = qp_solve(prob);
            const Vector expect = qp_bruteforce(prob);
            REQUIRE((got - expect).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("equality-constrained problems match enumeration", "[qp]") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        QpProblem prob = random_problem(5, 9000 + seed);
        prob.has_equality = true;
        prob.equality_rhs = 1.0;
        const Vector got = qp_solve(prob);
        REQUIRE(got.sum() == Approx(1.0).epsilon(1e-10));
        const Vector expect = qp_bruteforce(prob);
        REQUIRE((got - expect).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("KKT conditions hold at the solution", "[qp]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        QpProblem prob = random_problem(6, 500 + seed);
        prob.has_equality = (seed % 2 == 0);
        const QpSolution sol = qp_solve_detailed(prob);
        // stationarity: Q a - b - lambda 1 - mu = 0
        Vector resid = prob.q * sol.a - prob.b - sol.mu;
        if (prob.has_equality) resid.array() -= sol.lambda;
        REQUIRE(resid.cwiseAbs().maxCoeff() < 1e-8);
        // primal feasibility, dual feasibility, complementary slackness
        for (Index i = 0; i < prob.size(); ++i) {
            REQUIRE(sol.a(i) >= prob.lower(i) - 1e-10);
            REQUIRE(sol.mu(i) >= -1e-8);
            REQUIRE(std::abs(sol.mu(i) * (sol.a(i) - prob.lower(i))) < 1e-8);
        }
        if (prob.has_equality) REQUIRE(sol.a.sum() == Approx(prob.equality_rhs).epsilon(1e-10));
    }
}

TEST_CASE("objective at the solution beats random feasible points", "[qp]") {
    QpProblem prob = random_problem(7, 321);
    const QpSolution sol = qp_solve_detailed(prob);
    Engine rng = make_engine(99);
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    for (int k = 0; k < 10000; ++k) {
        Vector candidate(7);
        for (Index i = 0; i < 7; ++i) candidate(i) = unif(rng);
        const double obj = 0.5 * candidate.dot(prob.q * candidate) - prob.b.dot(candidate);
        REQUIRE(obj >= sol.objective - 1e-10);
    }
}

TEST_CASE("solution is invariant to symmetric permutation", "[qp]") {
    const QpProblem prob = random_problem(6, 777);
    const Vector base = qp_solve(prob);

    std::vector<Index> perm = {3, 0, 5, 1, 4, 2};
    Matrix qp_mat(6, 6);
    Vector bp(6), lp(6);
    for (Index i = 0; i < 6; ++i) {
        bp(i) = prob.b(perm[i]);
        lp(i) = prob.lower(perm[i]);
        for (Index j = 0; j < 6; ++j) qp_mat(i, j) = prob.q(perm[i], perm[j]);
    }
    QpProblem permuted(qp_mat, bp);
    permuted.lower = lp;
    const Vector got = qp_solve(permuted);
    for (Index i = 0; i < 6; ++i) REQUIRE(got(i) == Approx(base(perm[i])).margin(1e-10));
}

TEST_CASE("equality with unbounded variables matches the closed-form KKT solve", "[qp]") {
    QpProblem prob = random_problem(5, 4321);
    prob.lower.setConstant(-kInf);
    prob.has_equality = true;
    prob.equality_rhs = 1.0;
    const Vector got = qp_solve(prob);

    // closed form: a = Q^-1 (b + lambda 1), lambda chosen to satisfy 1^T a = 1
    const Vector qb = prob.q.llt().solve(prob.b);
    const Vector q1 = prob.q.llt().solve(Vector::Ones(5));
    const double lambda = (1.0 - qb.sum()) / q1.sum();
    const Vector expect = qb + lambda * q1;
    REQUIRE((got - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("moderately large problems stay exact and fast", "[qp]") {
    const Index m = 100;
    QpProblem prob(sct::random_spd(m, 2024, 1.0), Vector::Zero(m));
    Engine rng = make_engine(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index i = 0; i < m; ++i) prob.b(i) = gauss(rng);
    prob.has_equality = true;
    const QpSolution sol = qp_solve_detailed(prob);
    Vector resid = prob.q * sol.a - prob.b - sol.mu;
    resid.array() -= sol.lambda;
    REQUIRE(resid.cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE(sol.a.sum() == Approx(1.0).epsilon(1e-10));
    REQUIRE(sol.a.minCoeff() >= -1e-12);
}

TEST_CASE("error paths", "[qp]") {
    Matrix indef(2, 2);
    indef << 1.0, 2.0, 2.0, 1.0;
    QpProblem bad(indef, Vector::Zero(2));
    REQUIRE_THROWS_AS(qp_solve(bad), NotPositiveDefinite);

    QpProblem infeasible(Matrix::Identity(2, 2), Vector::Zero(2));
    infeasible.lower << 0.6, 0.6;
    infeasible.has_equality = true;
    infeasible.equality_rhs = 1.0;  // bounds force a sum of at least 1.2
    REQUIRE_THROWS_AS(qp_solve(infeasible), std::invalid_argument);
}
