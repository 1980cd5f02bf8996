#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace bubblesim {

/// Monte Carlo estimate of an expectation: sample mean, standard error
/// (sample std / sqrt(n)), and the path count behind it.
struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;

    /// |mean - target| <= k standard errors. With zero standard error the
    /// check degenerates to equality.
    bool within(double target, double k_sigma = 3.0) const {
        return std::abs(mean - target) <= k_sigma * std_error;
    }
};

inline MonteCarloEstimate estimate_from_samples(std::span<const double> samples) {
    if (samples.empty())
        throw std::invalid_argument("estimate_from_samples: empty sample set");
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (double x : samples) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    MonteCarloEstimate e;
    e.mean = mean;
    e.n = n;
    e.std_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return e;
}

}  // namespace bubblesim
