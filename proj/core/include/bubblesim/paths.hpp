#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bubblesim/grid.hpp"

namespace bubblesim {

/// Discretized multi-dimensional Brownian driver. values is row-major
/// (n_steps+1) x dim; row 0 is identically zero and increments over step j
/// are N(0, dt) per coordinate, reproducible from (seed, grid, dim).
struct BrownianPath {
    TimeGrid grid;
    int dim = 1;
    std::vector<double> values;

    double value(int j, int d) const {
        return values[static_cast<std::size_t>(j) * static_cast<std::size_t>(dim) +
                      static_cast<std::size_t>(d)];
    }
    double increment(int j, int d) const { return value(j + 1, d) - value(j, d); }
};

/// Scalar functional sampled on the grid (running max, density values, ...).
struct PathStat {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t j) const { return values[j]; }
};

/// Per-step vector process (one dim-vector for each of the n_steps steps).
/// Rows beyond a process's lifetime are zero-filled by the producers.
struct StepVectorPath {
    int dim = 1;
    std::vector<double> flat;  // row-major n_steps x dim

    int n_steps() const { return static_cast<int>(flat.size()) / dim; }
    std::span<const double> row(int j) const {
        return {flat.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(dim),
                static_cast<std::size_t>(dim)};
    }
    std::span<double> row(int j) {
        return {flat.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(dim),
                static_cast<std::size_t>(dim)};
    }
};

enum class Crossing { below, at_or_below, above, at_or_above };

BrownianPath sample_brownian(const TimeGrid& grid, int dim, std::uint64_t seed);

PathStat running_max(const PathStat& p);

std::optional<int> first_crossing_index(std::span<const double> values, double level,
                                        Crossing direction);

/// Probability that a Brownian bridge between x0 and x1 (volatility vol over
/// a step of length dt) crossed a one-sided barrier within the step:
/// exp(-2 (x0-b)(x1-b) / (vol^2 dt)). Returns 1 if either endpoint is at or
/// beyond the barrier. For geometric processes apply in log space.
double bridge_crossing_correction(double x0, double x1, double barrier, double dt, double vol);

/// E[0] = 1, E[j+1] = E[j] * exp(loading_j . dX_j - 0.5 |loading_j|^2 dt).
/// Strictly positive by construction. Only the first alive_steps loadings are
/// consumed; the value is held constant afterwards. alive_steps < 0 means all.
PathStat discrete_stochastic_exponential(const StepVectorPath& loading, const BrownianPath& driver,
                                         int alive_steps = -1);

}  // namespace bubblesim
