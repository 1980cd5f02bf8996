#pragma once

#include <stdexcept>
#include <vector>

namespace bubblesim {

/// Uniform time grid on [0, T] with n_steps intervals.
/// Grid point j sits at j*dt; the last point equals T up to one rounding.
struct TimeGrid {
    double horizon = 0.0;
    int n_steps = 0;
    double dt = 0.0;

    int n_points() const { return n_steps + 1; }
    double time(int j) const { return static_cast<double>(j) * dt; }

    std::vector<double> times() const {
        std::vector<double> t(static_cast<std::size_t>(n_points()));
        for (int j = 0; j <= n_steps; ++j) t[static_cast<std::size_t>(j)] = time(j);
        return t;
    }
};

inline TimeGrid make_time_grid(double horizon, int n_steps) {
    if (!(horizon > 0.0))
        throw std::invalid_argument("make_time_grid: horizon must be positive");
    if (n_steps < 1)
        throw std::invalid_argument("make_time_grid: n_steps must be at least 1");
    TimeGrid g;
    g.horizon = horizon;
    g.n_steps = n_steps;
    g.dt = horizon / static_cast<double>(n_steps);
    return g;
}

inline bool same_grid(const TimeGrid& a, const TimeGrid& b) {
    return a.horizon == b.horizon && a.n_steps == b.n_steps;
}

}  // namespace bubblesim
