#include "bubblesim/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bubblesim/rng.hpp"

namespace bubblesim {

BrownianPath sample_brownian(const TimeGrid& grid, int dim, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("sample_brownian: dim must be at least 1");
    BrownianPath p;
    p.grid = grid;
    p.dim = dim;
    p.values.assign(static_cast<std::size_t>(grid.n_points()) * static_cast<std::size_t>(dim), 0.0);
    NormalSampler gauss(seed);
    const double sqrt_dt = std::sqrt(grid.dt);
    for (int j = 0; j < grid.n_steps; ++j) {
        const std::size_t prev = static_cast<std::size_t>(j) * static_cast<std::size_t>(dim);
        const std::size_t next = prev + static_cast<std::size_t>(dim);
        for (int d = 0; d < dim; ++d) {
            p.values[next + static_cast<std::size_t>(d)] =
                p.values[prev + static_cast<std::size_t>(d)] + sqrt_dt * gauss.next();
        }
    }
    return p;
}

PathStat running_max(const PathStat& p) {
    PathStat out;
    out.values.resize(p.values.size());
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p.values.size(); ++j) {
        m = std::max(m, p.values[j]);
        out.values[j] = m;
    }
    return out;
}

std::optional<int> first_crossing_index(std::span<const double> values, double level,
                                        Crossing direction) {
    for (std::size_t j = 0; j < values.size(); ++j) {
        const double x = values[j];
        bool hit = false;
        switch (direction) {
            case Crossing::below: hit = x < level; break;
            case Crossing::at_or_below: hit = x <= level; break;
            case Crossing::above: hit = x > level; break;
            case Crossing::at_or_above: hit = x >= level; break;
        }
        if (hit) return static_cast<int>(j);
    }
    return std::nullopt;
}

double bridge_crossing_correction(double x0, double x1, double barrier, double dt, double vol) {
    if (!(vol > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("bridge_crossing_correction: vol and dt must be positive");
    const double a = x0 - barrier;
    const double b = x1 - barrier;
    // Either endpoint at or beyond the barrier: the hit is certain.
    if (a <= 0.0 || b <= 0.0) return 1.0;
    return std::exp(-2.0 * a * b / (vol * vol * dt));
}

PathStat discrete_stochastic_exponential(const StepVectorPath& loading, const BrownianPath& driver,
                                         int alive_steps) {
    const int n = driver.grid.n_steps;
    if (loading.dim != driver.dim)
        throw std::invalid_argument("discrete_stochastic_exponential: dimension mismatch");
    if (loading.n_steps() < n)
        throw std::invalid_argument("discrete_stochastic_exponential: loading too short");
    if (alive_steps < 0 || alive_steps > n) alive_steps = n;
    PathStat out;
    out.values.assign(static_cast<std::size_t>(n) + 1, 1.0);
    double log_e = 0.0;
    for (int j = 0; j < n; ++j) {
        if (j < alive_steps) {
            auto g = loading.row(j);
            double drift = 0.0;
            double shock = 0.0;
            for (int d = 0; d < driver.dim; ++d) {
                drift += g[static_cast<std::size_t>(d)] * g[static_cast<std::size_t>(d)];
                shock += g[static_cast<std::size_t>(d)] * driver.increment(j, d);
            }
            log_e += shock - 0.5 * drift * driver.grid.dt;
        }
        out.values[static_cast<std::size_t>(j) + 1] = std::exp(log_e);
    }
    return out;
}

}  // namespace bubblesim
