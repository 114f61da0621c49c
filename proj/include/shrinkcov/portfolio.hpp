#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "shrinkcov/common.hpp"
#include "shrinkcov/cov_matrix.hpp"
#include "shrinkcov/rscm.hpp"

namespace shrinkcov {

/// T x p panel of net returns with asset names and an ordinal date index.
struct ReturnsPanel {
    Matrix returns;
    std::vector<std::string> assets;
    std::vector<std::string> dates;

    ReturnsPanel() = default;

    explicit ReturnsPanel(Matrix r, std::vector<std::string> asset_names = {},
                          std::vector<std::string> date_index = {})
        : returns(std::move(r)), assets(std::move(asset_names)), dates(std::move(date_index)) {
        const Index t = returns.rows();
        const Index p = returns.cols();
        if (t < 2 || p < 1) throw std::invalid_argument("ReturnsPanel: need at least 2 rows");
        for (Index i = 0; i < t; ++i)
            for (Index j = 0; j < p; ++j) {
                const double v = returns(i, j);
                if (!std::isfinite(v) || v < -1.0)
                    throw std::invalid_argument("ReturnsPanel: invalid return at row " +
                                                std::to_string(i) + ", col " + std::to_string(j));
            }
        if (assets.empty())
            for (Index j = 0; j < p; ++j) assets.push_back("asset" + std::to_string(j));
        if (assets.size() != static_cast<std::size_t>(p))
            throw std::invalid_argument("ReturnsPanel: asset name count mismatch");
        if (!dates.empty() && dates.size() != static_cast<std::size_t>(t))
            throw std::invalid_argument("ReturnsPanel: date count mismatch");
    }

    Index num_days() const { return returns.rows(); }
    Index num_assets() const { return returns.cols(); }
};

/// Net returns from a (T+1) x p price matrix: r_t = p_t / p_{t-1} - 1.
inline Matrix net_returns(const Matrix& prices) {
    const Index t = prices.rows();
    const Index p = prices.cols();
    if (t < 2) throw std::invalid_argument("net_returns: need at least 2 price rows");
    Matrix r(t - 1, p);
    for (Index i = 1; i < t; ++i)
        for (Index j = 0; j < p; ++j) {
            const double prev = prices(i - 1, j);
            if (!(prev > 0.0))
                throw std::invalid_argument("net_returns: nonpositive price at row " +
                                            std::to_string(i - 1) + ", col " + std::to_string(j));
            r(i - 1, j) = prices(i, j) / prev - 1.0;
        }
    return r;
}

/// Global minimum-variance weights w = Sigma^-1 1 / (1^T Sigma^-1 1),
/// renormalized so the weights sum to 1 exactly.
inline Vector gmvp_weights(const CovMatrix& sigma_hat) {
    const Index p = sigma_hat.dim();
    Eigen::LLT<Matrix> llt(sigma_hat.matrix());
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite(
            "gmvp_weights: covariance estimate is singular; use a shrinkage estimator");
    Vector w = llt.solve(Vector::Ones(p));
    const double s = w.sum();
    if (!std::isfinite(s) || s == 0.0)
        throw NotPositiveDefinite(
            "gmvp_weights: covariance estimate is ill-conditioned; use a shrinkage estimator");
    w /= s;
    w /= w.sum();  // second pass pins the sum to 1 within one ulp
    return w;
}

/// Covariance estimator used inside the backtest: maps a training window to a
/// ShrinkResult (plain SCM is wrapped with beta = 1).
using CovEstimator = std::function<ShrinkResult(const Matrix&)>;

struct BacktestConfig {
    Index window = 100;       // training window length n
    Index holding = 20;       // holding period h
    double annualize = std::sqrt(250.0);
    CovEstimator estimator;   // defaults to the plain SCM
    std::string estimator_name = "scm";

    BacktestConfig() {
        estimator = [](const Matrix& x) {
            const CovMatrix s = scm(x);
            return ShrinkResult{s, 0.0, 1.0, ScalarEstimates{}, "", std::nullopt};
        };
    }
};

struct WindowLog {
    Index index = 0;
    Index train_begin = 0;  // inclusive
    Index train_end = 0;    // exclusive
    Index eval_begin = 0;   // inclusive
    Index eval_end = 0;     // exclusive
    double beta_hat = 1.0;
    double alpha_hat = 0.0;
    std::string template_label;
};

struct BacktestResult {
    double realized_risk_annualized = 0.0;
    Vector daily_returns;  // all out-of-sample daily portfolio returns, pooled
    std::vector<WindowLog> windows;
};

/// Rolling out-of-sample protocol: at each rebalance date t the covariance is
/// estimated from rows [t-n, t-1], the GMVP weights are held for the next h
/// days, then the window shifts h days forward. The final partial window is
/// included. Realized risk is the sample standard deviation (divisor n-1) of
/// all pooled daily out-of-sample returns times the annualization factor.
/// Training data always precedes evaluation data; the window log records the
/// index ranges so tests can assert the absence of look-ahead.
inline BacktestResult backtest(const ReturnsPanel& panel, const BacktestConfig& config) {
    const Index t_total = panel.num_days();
    const Index n = config.window;
    const Index h = config.holding;
    if (n < 2 || h < 1) throw std::invalid_argument("backtest: need window >= 2 and holding >= 1");
    if (n + h > t_total)
        throw std::invalid_argument("backtest: insufficient history (need window + holding days)");

    BacktestResult result;
    std::vector<double> daily;
    Index window_index = 0;
    for (Index t = n; t < t_total; t += h, ++window_index) {
        const Index eval_end = std::min(t + h, t_total);
        const Matrix train = panel.returns.block(t - n, 0, n, panel.num_assets());

        ShrinkResult fit = [&] {
            try {
                return config.estimator(train);
            } catch (const std::exception& e) {
                throw std::runtime_error("backtest: window " + std::to_string(window_index) +
                                         " estimator failed: " + e.what());
            }
        }();
        Vector w;
        try {
            w = gmvp_weights(fit.estimate);
        } catch (const std::exception& e) {
            throw std::runtime_error("backtest: window " + std::to_string(window_index) + ": " +
                                     e.what());
        }

        for (Index s = t; s < eval_end; ++s) daily.push_back(panel.returns.row(s).dot(w));

        WindowLog log;
        log.index = window_index;
        log.train_begin = t - n;
        log.train_end = t;
        log.eval_begin = t;
        log.eval_end = eval_end;
        log.beta_hat = fit.beta_hat;
        log.alpha_hat = fit.alpha_hat;
        log.template_label = fit.template_label;
        result.windows.push_back(log);
    }

    const Index m = static_cast<Index>(daily.size());
    result.daily_returns = Eigen::Map<Vector>(daily.data(), m);
    if (m < 2) {
        result.realized_risk_annualized = 0.0;
        return result;
    }
    const double mean = result.daily_returns.mean();
    const double var =
        (result.daily_returns.array() - mean).square().sum() / static_cast<double>(m - 1);
    result.realized_risk_annualized = std::sqrt(var) * config.annualize;
    return result;
}

}  // namespace shrinkcov
