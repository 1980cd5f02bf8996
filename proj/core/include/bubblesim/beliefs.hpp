#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bubblesim/estimate.hpp"
#include "bubblesim/grid.hpp"
#include "bubblesim/market.hpp"
#include "bubblesim/paths.hpp"

namespace bubblesim {

/// Division floor near bankruptcy: the density is declared bankrupt once its
/// value falls to or below this threshold, even if the underlying barrier has
/// not been grid-detected yet.
constexpr double kDensityFloor = 1e-10;

/// One agent's belief density Z relative to the reference measure.
///
/// z holds the path values with Z_0 = 1, absorbed at exact zero from
/// bankruptcy_index on. loading holds the volatility loading of log Z
/// evaluated pointwise at every grid point (zero-filled at and after
/// bankruptcy); rows 0..n_steps-1 double as per-step loadings for the
/// discrete stochastic exponential.
struct DensityPath {
    TimeGrid grid;
    std::vector<double> z;
    StepVectorPath loading;
    std::optional<int> bankruptcy_index;

    bool alive_at(int j) const { return !bankruptcy_index || j < *bankruptcy_index; }
    /// Number of leading grid points strictly before bankruptcy.
    int alive_points() const {
        return bankruptcy_index ? *bankruptcy_index : grid.n_points();
    }
};

/// Barrier detection policy. Grid detection (at-or-below / at-or-above) is
/// the default; the bridge refinement declares an intra-step crossing when a
/// uniform draw falls below the Brownian-bridge crossing probability.
struct HittingPolicy {
    bool bridge = false;
    std::uint64_t seed = 0;
};

/// Z = (D_{t^tau} - 1)/(D0 - 1), absorbed at the first hit of level 1.
/// Requires D0 > 1. Loading: v D / (D - 1).
DensityPath density_optimist(const DividendPath& d, const HittingPolicy& policy = {});

/// Z = (1 - D_{t^tau})/(1 - D0), absorbed at the first hit of 1 from below.
/// Requires D0 in (0, 1). Loading: v D / (D - 1), negative before tau.
DensityPath density_pessimist(const DividendPath& d, const HittingPolicy& policy = {});

/// Z = (D - kappa D*) / ((1-kappa) D0) * (D*/D0)^(kappa/(1-kappa)), with D*
/// the running maximum, absorbed at the first time D = kappa D*.
/// Loading: v D / (D - kappa D*).
DensityPath density_drawdown(const DividendPath& d, double kappa,
                             const HittingPolicy& policy = {});

/// Z = 1 + X_{k, t^tau}, absorbed at the first hit of X_k at -1.
/// Loading: e_k / (1 + X_k).
DensityPath density_linear(const BrownianPath& x, int coordinate,
                           const HittingPolicy& policy = {});

/// The trivial density Z == 1 (an agent holding the reference beliefs).
DensityPath reference_density(const TimeGrid& grid, int dim);

/// Sample mean and standard error of Z_T * Y over paired samples; computes a
/// reference-measure expectation of Y under the tilted measure.
MonteCarloEstimate bayes_weighted_expectation(std::span<const double> z_terminal,
                                              std::span<const double> y);

struct MartingaleReport {
    std::vector<double> checkpoint_times;
    std::vector<int> checkpoint_indices;
    std::vector<MonteCarloEstimate> estimates;
    std::vector<bool> pass;

    bool all_pass() const {
        for (bool p : pass)
            if (!p) return false;
        return true;
    }
};

/// Monte Carlo check that E[Z_t] = 1 at each checkpoint, within three
/// standard errors. The sampler maps a per-path seed to a density path.
MartingaleReport verify_martingale(const std::function<DensityPath(std::uint64_t)>& sampler,
                                   std::span<const double> checkpoints, std::size_t n_paths,
                                   std::uint64_t base_seed);

}  // namespace bubblesim
