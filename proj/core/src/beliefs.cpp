#include "bubblesim/beliefs.hpp"

#include <cmath>
#include <stdexcept>

#include "bubblesim/rng.hpp"

namespace bubblesim {

namespace {

constexpr std::uint64_t kBridgeSalt = 0x6272696467656373ULL;

double vol_norm(std::span<const double> v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

/// Shared absorption loop for densities driven by a scalar barrier on a
/// positive process (optimist/pessimist/drawdown work on D, linear on X).
/// value(j): closed-form Z at grid point j given survival. barrier_hit(j):
/// grid detection at j. bridge_prob(j): crossing probability on step j.
struct AbsorptionScan {
    int n_points;
    bool bridge;
    NormalSampler* bridge_rng;

    template <typename Value, typename Hit, typename BridgeProb>
    std::optional<int> run(std::vector<double>& z, Value value, Hit hit, BridgeProb prob) {
        std::optional<int> bankrupt;
        bool pending_bridge_hit = false;
        for (int j = 0; j < n_points; ++j) {
            if (bankrupt) {
                z[static_cast<std::size_t>(j)] = 0.0;
                continue;
            }
            const double zj = value(j);
            if (pending_bridge_hit || hit(j) || zj <= kDensityFloor) {
                bankrupt = j;
                z[static_cast<std::size_t>(j)] = 0.0;
                continue;
            }
            z[static_cast<std::size_t>(j)] = zj;
            if (bridge && j + 1 < n_points) {
                const double p = prob(j);
                if (p > 0.0 && bridge_rng->uniform01() < p) pending_bridge_hit = true;
            }
        }
        return bankrupt;
    }
};

void zero_loading_from(StepVectorPath& loading, int from) {
    for (int j = from; j < loading.n_steps(); ++j)
        for (double& c : loading.row(j)) c = 0.0;
}

}  // namespace

DensityPath density_optimist(const DividendPath& d, const HittingPolicy& policy) {
    const double d0 = d.initial();
    if (!(d0 > 1.0)) throw std::invalid_argument("density_optimist: requires D0 > 1");
    const int n_pts = d.grid.n_points();
    DensityPath out;
    out.grid = d.grid;
    out.z.resize(static_cast<std::size_t>(n_pts));
    out.loading.dim = static_cast<int>(d.vol.size());
    out.loading.flat.assign(static_cast<std::size_t>(n_pts) * d.vol.size(), 0.0);

    NormalSampler bridge_rng(substream_seed(policy.seed, kBridgeSalt));
    const double sigma = vol_norm(d.vol);
    AbsorptionScan scan{n_pts, policy.bridge && sigma > 0.0, &bridge_rng};
    out.bankruptcy_index = scan.run(
        out.z, [&](int j) { return (d.values[static_cast<std::size_t>(j)] - 1.0) / (d0 - 1.0); },
        [&](int j) { return d.values[static_cast<std::size_t>(j)] <= 1.0; },
        [&](int j) {
            return bridge_crossing_correction(std::log(d.values[static_cast<std::size_t>(j)]),
                                              std::log(d.values[static_cast<std::size_t>(j) + 1]),
                                              0.0, d.grid.dt, sigma);
        });

    const int alive = out.alive_points();
    for (int j = 0; j < alive; ++j) {
        const double dj = d.values[static_cast<std::size_t>(j)];
        const double scale = dj / (dj - 1.0);
        auto row = out.loading.row(j);
        for (std::size_t c = 0; c < d.vol.size(); ++c) row[c] = d.vol[c] * scale;
    }
    zero_loading_from(out.loading, alive);
    return out;
}

DensityPath density_pessimist(const DividendPath& d, const HittingPolicy& policy) {
    const double d0 = d.initial();
    if (!(d0 > 0.0 && d0 < 1.0))
        throw std::invalid_argument("density_pessimist: requires D0 in (0, 1)");
    const int n_pts = d.grid.n_points();
    DensityPath out;
    out.grid = d.grid;
    out.z.resize(static_cast<std::size_t>(n_pts));
    out.loading.dim = static_cast<int>(d.vol.size());
    out.loading.flat.assign(static_cast<std::size_t>(n_pts) * d.vol.size(), 0.0);

    NormalSampler bridge_rng(substream_seed(policy.seed, kBridgeSalt));
    const double sigma = vol_norm(d.vol);
    AbsorptionScan scan{n_pts, policy.bridge && sigma > 0.0, &bridge_rng};
    // Upper barrier: run the bridge in negated log space so it is one-sided
    // from above, matching the lower-barrier contract.
    out.bankruptcy_index = scan.run(
        out.z, [&](int j) { return (1.0 - d.values[static_cast<std::size_t>(j)]) / (1.0 - d0); },
        [&](int j) { return d.values[static_cast<std::size_t>(j)] >= 1.0; },
        [&](int j) {
            return bridge_crossing_correction(-std::log(d.values[static_cast<std::size_t>(j)]),
                                              -std::log(d.values[static_cast<std::size_t>(j) + 1]),
                                              0.0, d.grid.dt, sigma);
        });

    const int alive = out.alive_points();
    for (int j = 0; j < alive; ++j) {
        const double dj = d.values[static_cast<std::size_t>(j)];
        const double scale = dj / (dj - 1.0);
        auto row = out.loading.row(j);
        for (std::size_t c = 0; c < d.vol.size(); ++c) row[c] = d.vol[c] * scale;
    }
    zero_loading_from(out.loading, alive);
    return out;
}

DensityPath density_drawdown(const DividendPath& d, double kappa, const HittingPolicy& policy) {
    if (!(kappa > 0.0 && kappa < 1.0))
        throw std::invalid_argument("density_drawdown: requires kappa in (0, 1)");
    const double d0 = d.initial();
    const int n_pts = d.grid.n_points();
    const double expo = kappa / (1.0 - kappa);

    PathStat levels;
    levels.values = d.values;
    const PathStat run_max = running_max(levels);

    DensityPath out;
    out.grid = d.grid;
    out.z.resize(static_cast<std::size_t>(n_pts));
    out.loading.dim = static_cast<int>(d.vol.size());
    out.loading.flat.assign(static_cast<std::size_t>(n_pts) * d.vol.size(), 0.0);

    NormalSampler bridge_rng(substream_seed(policy.seed, kBridgeSalt));
    const double sigma = vol_norm(d.vol);
    AbsorptionScan scan{n_pts, policy.bridge && sigma > 0.0, &bridge_rng};
    out.bankruptcy_index = scan.run(
        out.z,
        [&](int j) {
            const double dj = d.values[static_cast<std::size_t>(j)];
            const double mj = run_max.values[static_cast<std::size_t>(j)];
            return (dj - kappa * mj) / ((1.0 - kappa) * d0) * std::pow(mj / d0, expo);
        },
        [&](int j) {
            return d.values[static_cast<std::size_t>(j)] <=
                   kappa * run_max.values[static_cast<std::size_t>(j)];
        },
        [&](int j) {
            // Moving barrier approximated by the running max at the step start.
            const double barrier = std::log(kappa * run_max.values[static_cast<std::size_t>(j)]);
            return bridge_crossing_correction(std::log(d.values[static_cast<std::size_t>(j)]),
                                              std::log(d.values[static_cast<std::size_t>(j) + 1]),
                                              barrier, d.grid.dt, sigma);
        });

    const int alive = out.alive_points();
    for (int j = 0; j < alive; ++j) {
        const double dj = d.values[static_cast<std::size_t>(j)];
        const double mj = run_max.values[static_cast<std::size_t>(j)];
        const double scale = dj / (dj - kappa * mj);
        auto row = out.loading.row(j);
        for (std::size_t c = 0; c < d.vol.size(); ++c) row[c] = d.vol[c] * scale;
    }
    zero_loading_from(out.loading, alive);
    return out;
}

DensityPath density_linear(const BrownianPath& x, int coordinate, const HittingPolicy& policy) {
    if (coordinate < 0 || coordinate >= x.dim)
        throw std::invalid_argument("density_linear: coordinate out of range");
    const int n_pts = x.grid.n_points();
    DensityPath out;
    out.grid = x.grid;
    out.z.resize(static_cast<std::size_t>(n_pts));
    out.loading.dim = x.dim;
    out.loading.flat.assign(static_cast<std::size_t>(n_pts) * static_cast<std::size_t>(x.dim),
                            0.0);

    NormalSampler bridge_rng(substream_seed(policy.seed, kBridgeSalt ^ static_cast<std::uint64_t>(
                                                             coordinate + 1)));
    AbsorptionScan scan{n_pts, policy.bridge, &bridge_rng};
    out.bankruptcy_index = scan.run(
        out.z, [&](int j) { return 1.0 + x.value(j, coordinate); },
        [&](int j) { return x.value(j, coordinate) <= -1.0; },
        [&](int j) {
            return bridge_crossing_correction(x.value(j, coordinate), x.value(j + 1, coordinate),
                                              -1.0, x.grid.dt, 1.0);
        });

    const int alive = out.alive_points();
    for (int j = 0; j < alive; ++j)
        out.loading.row(j)[static_cast<std::size_t>(coordinate)] =
            1.0 / (1.0 + x.value(j, coordinate));
    zero_loading_from(out.loading, alive);
    return out;
}

DensityPath reference_density(const TimeGrid& grid, int dim) {
    DensityPath out;
    out.grid = grid;
    out.z.assign(static_cast<std::size_t>(grid.n_points()), 1.0);
    out.loading.dim = dim;
    out.loading.flat.assign(
        static_cast<std::size_t>(grid.n_points()) * static_cast<std::size_t>(dim), 0.0);
    return out;
}

MonteCarloEstimate bayes_weighted_expectation(std::span<const double> z_terminal,
                                              std::span<const double> y) {
    if (z_terminal.empty()) throw std::invalid_argument("bayes_weighted_expectation: empty sample");
    if (z_terminal.size() != y.size())
        throw std::invalid_argument("bayes_weighted_expectation: sample size mismatch");
    std::vector<double> prod(z_terminal.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = z_terminal[i] * y[i];
    return estimate_from_samples(prod);
}

MartingaleReport verify_martingale(const std::function<DensityPath(std::uint64_t)>& sampler,
                                   std::span<const double> checkpoints, std::size_t n_paths,
                                   std::uint64_t base_seed) {
    MartingaleReport report;
    report.checkpoint_times.assign(checkpoints.begin(), checkpoints.end());

    std::vector<std::vector<double>> samples(checkpoints.size());
    for (auto& s : samples) s.resize(n_paths);

    bool indices_set = false;
    for (std::size_t i = 0; i < n_paths; ++i) {
        const DensityPath z = sampler(path_seed(base_seed, i));
        if (!indices_set) {
            for (double t : checkpoints) {
                int idx = static_cast<int>(std::llround(t / z.grid.dt));
                if (idx < 0 || idx > z.grid.n_steps)
                    throw std::invalid_argument("verify_martingale: checkpoint outside the grid");
                report.checkpoint_indices.push_back(idx);
            }
            indices_set = true;
        }
        for (std::size_t c = 0; c < report.checkpoint_indices.size(); ++c)
            samples[c][i] = z.z[static_cast<std::size_t>(report.checkpoint_indices[c])];
    }
    for (std::size_t c = 0; c < samples.size(); ++c) {
        MonteCarloEstimate e = estimate_from_samples(samples[c]);
        report.pass.push_back(e.within(1.0));
        report.estimates.push_back(e);
    }
    return report;
}

}  // namespace bubblesim
