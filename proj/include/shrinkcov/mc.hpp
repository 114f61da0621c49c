#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "shrinkcov/common.hpp"
#include "shrinkcov/rng.hpp"

namespace shrinkcov {

/// Worker count: hardware concurrency capped by the SHRINKCOV_THREADS
/// environment variable (values < 1 mean single-threaded).
inline unsigned mc_thread_count() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("SHRINKCOV_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap < 1) return 1;
        if (static_cast<unsigned long>(cap) < n) n = static_cast<unsigned>(cap);
    }
    return n;
}

/// Run `trials` independent trials. Each trial receives its sub-seed
/// (seed + trial index) and writes `stats` statistics into its own row, so
/// the result is identical for any worker count or scheduling order.
/// trial_fn signature: void(std::uint64_t trial_seed, double* out_row).
template <typename TrialFn>
Matrix mc_run(std::size_t trials, int stats, std::uint64_t seed, TrialFn&& trial_fn) {
    if (trials == 0) throw std::invalid_argument("mc_run: trial count must be >= 1");
    Matrix out(static_cast<Index>(trials), stats);
    const unsigned workers = mc_thread_count();

    if (workers <= 1 || trials < 2 * workers) {
        std::vector<double> row(stats);
        for (std::size_t i = 0; i < trials; ++i) {
            trial_fn(trial_seed(seed, i), row.data());
            for (int j = 0; j < stats; ++j) out(static_cast<Index>(i), j) = row[j];
        }
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            std::vector<double> row(stats);
            constexpr std::size_t chunk = 64;
            for (;;) {
                const std::size_t begin = next.fetch_add(chunk);
                if (begin >= trials || failed.load()) break;
                const std::size_t end = std::min(begin + chunk, trials);
                try {
                    for (std::size_t i = begin; i < end; ++i) {
                        trial_fn(trial_seed(seed, i), row.data());
                        for (int j = 0; j < stats; ++j) out(static_cast<Index>(i), j) = row[j];
                    }
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    break;
                }
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (failed.load()) std::rethrow_exception(error);
    return out;
}

/// Column means, summed in trial order (deterministic reduction).
inline Vector mc_mean(const Matrix& samples) {
    const Index n = samples.rows();
    Vector mean(samples.cols());
    for (Index j = 0; j < samples.cols(); ++j) {
        long double acc = 0.0L;
        for (Index i = 0; i < n; ++i) acc += samples(i, j);
        mean(j) = static_cast<double>(acc / n);
    }
    return mean;
}

/// Standard error of each column mean.
inline Vector mc_stderr(const Matrix& samples) {
    const Index n = samples.rows();
    if (n < 2) throw std::invalid_argument("mc_stderr: need at least 2 trials");
    const Vector mean = mc_mean(samples);
    Vector se(samples.cols());
    for (Index j = 0; j < samples.cols(); ++j) {
        long double acc = 0.0L;
        for (Index i = 0; i < n; ++i) {
            const long double d = samples(i, j) - mean(j);
            acc += d * d;
        }
        se(j) = std::sqrt(static_cast<double>(acc / (n - 1)) / static_cast<double>(n));
    }
    return se;
}

}  // namespace shrinkcov
