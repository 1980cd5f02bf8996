#include "bubblesim/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bubblesim/rng.hpp"

namespace bubblesim {

namespace {

void check_economy(std::span<const DensityPath> densities, std::span<const double> weights) {
    if (densities.empty() || densities.size() != weights.size())
        throw std::invalid_argument("economy: need one positive weight per density");
    for (double w : weights)
        if (!(w > 0.0)) throw std::invalid_argument("economy: weights must be positive");
}

double weighted_density_sum(std::span<const DensityPath> densities,
                            std::span<const double> weights, int j) {
    double s = 0.0;
    for (std::size_t k = 0; k < densities.size(); ++k)
        s += weights[k] * densities[k].z[static_cast<std::size_t>(j)];
    return s;
}

/// First grid point where no density is positive; n_points if none.
int solvency_cap(std::span<const DensityPath> densities, std::span<const double> weights) {
    const int n_pts = densities.front().grid.n_points();
    for (int j = 0; j < n_pts; ++j)
        if (!(weighted_density_sum(densities, weights, j) > 0.0)) return j;
    return n_pts;
}

double trapezoid(std::span<const double> f, double dt, int from, int to) {
    double acc = 0.0;
    for (int j = from; j < to; ++j)
        acc += 0.5 * (f[static_cast<std::size_t>(j)] + f[static_cast<std::size_t>(j) + 1]) * dt;
    return acc;
}

/// Exact market clearing in floating point: quantize every member of a
/// clearing family onto one power-of-two grid. Grid multiples within the
/// capacity bound add without rounding, so family sums reproduce the target
/// bit for bit once the residual member is assigned on-grid.
double ulp_of(double x) {
    x = std::abs(x);
    if (x == 0.0) return std::numeric_limits<double>::denorm_min();
    return std::nextafter(x, std::numeric_limits<double>::infinity()) - x;
}

double snap_to_grid(double x, double unit) { return std::nearbyint(x / unit) * unit; }

}  // namespace

double eta(double t, double rho, double horizon) {
    if (!(rho > 0.0)) throw std::invalid_argument("eta: rho must be positive");
    return (1.0 - std::exp(-rho * (horizon - t))) / rho;
}

PathStat log_state_price_density(const DividendPath& d, std::span<const DensityPath> densities,
                                 std::span<const double> weights, double rho) {
    check_economy(densities, weights);
    const int n_pts = d.grid.n_points();
    const double eta0 = eta(0.0, rho, d.grid.horizon);
    PathStat xi;
    xi.values.resize(static_cast<std::size_t>(n_pts));
    for (int j = 0; j < n_pts; ++j) {
        const double s = weighted_density_sum(densities, weights, j);
        if (!(s > 0.0))
            throw SolvencyViolation("log_state_price_density: all densities vanish at grid point " +
                                    std::to_string(j));
        xi.values[static_cast<std::size_t>(j)] =
            std::exp(-rho * d.grid.time(j)) * s / (d.values[static_cast<std::size_t>(j)] * eta0);
    }
    return xi;
}

ConsumptionWealth log_consumption_wealth(const PathStat& xi, const DensityPath& z, double w_k,
                                         double rho) {
    const int n_pts = z.grid.n_points();
    const double eta0 = eta(0.0, rho, z.grid.horizon);
    ConsumptionWealth out;
    out.consumption.assign(static_cast<std::size_t>(n_pts), 0.0);
    out.wealth.assign(static_cast<std::size_t>(n_pts), 0.0);
    const int alive = z.alive_points();
    for (int j = 0; j < alive; ++j) {
        const double t = z.grid.time(j);
        const double c = w_k * z.z[static_cast<std::size_t>(j)] /
                         (std::exp(rho * t) * xi.values[static_cast<std::size_t>(j)] * eta0);
        out.consumption[static_cast<std::size_t>(j)] = c;
        out.wealth[static_cast<std::size_t>(j)] = c * eta(t, rho, z.grid.horizon);
    }
    return out;
}

PathStat market_portfolio_price(const DividendPath& d, double rho) {
    PathStat s;
    s.values.resize(d.values.size());
    for (int j = 0; j < d.grid.n_points(); ++j)
        s.values[static_cast<std::size_t>(j)] =
            d.values[static_cast<std::size_t>(j)] * eta(d.grid.time(j), rho, d.grid.horizon);
    return s;
}

StepVectorPath aggregate_gamma(std::span<const DensityPath> densities,
                               std::span<const double> weights) {
    check_economy(densities, weights);
    const int n_pts = densities.front().grid.n_points();
    const int dim = densities.front().loading.dim;
    StepVectorPath gamma;
    gamma.dim = dim;
    gamma.flat.assign(static_cast<std::size_t>(n_pts) * static_cast<std::size_t>(dim), 0.0);
    for (int j = 0; j < n_pts; ++j) {
        const double s = weighted_density_sum(densities, weights, j);
        if (!(s > 0.0))
            throw SolvencyViolation("aggregate_gamma: all densities vanish at grid point " +
                                    std::to_string(j));
        auto row = gamma.row(j);
        for (std::size_t k = 0; k < densities.size(); ++k) {
            const double wz = weights[k] * densities[k].z[static_cast<std::size_t>(j)];
            if (wz == 0.0) continue;
            auto gk = densities[k].loading.row(j);
            for (int c = 0; c < dim; ++c) row[static_cast<std::size_t>(c)] +=
                wz * gk[static_cast<std::size_t>(c)] / s;
        }
    }
    return gamma;
}

RateAndPrice rate_and_mpr(double drift, std::span<const double> vol, const StepVectorPath& gamma,
                          double rho) {
    if (static_cast<int>(vol.size()) != gamma.dim)
        throw std::invalid_argument("rate_and_mpr: dimension mismatch");
    const int n_pts = gamma.n_steps();
    RateAndPrice out;
    out.mpr.dim = gamma.dim;
    out.mpr.flat.resize(gamma.flat.size());
    out.rate.values.resize(static_cast<std::size_t>(n_pts));
    for (int j = 0; j < n_pts; ++j) {
        auto g = gamma.row(j);
        auto th = out.mpr.row(j);
        double v_dot_theta = 0.0;
        for (int c = 0; c < gamma.dim; ++c) {
            th[static_cast<std::size_t>(c)] = vol[static_cast<std::size_t>(c)] -
                                              g[static_cast<std::size_t>(c)];
            v_dot_theta += vol[static_cast<std::size_t>(c)] * th[static_cast<std::size_t>(c)];
        }
        out.rate.values[static_cast<std::size_t>(j)] = rho + drift - v_dot_theta;
    }
    return out;
}

StepVectorPath agent_mpr(const StepVectorPath& mpr, const DensityPath& z) {
    StepVectorPath out;
    out.dim = mpr.dim;
    out.flat.assign(mpr.flat.size(), std::numeric_limits<double>::quiet_NaN());
    const int alive = z.alive_points();
    for (int j = 0; j < alive; ++j) {
        auto th = mpr.row(j);
        auto gk = z.loading.row(j);
        auto o = out.row(j);
        for (int c = 0; c < mpr.dim; ++c)
            o[static_cast<std::size_t>(c)] =
                th[static_cast<std::size_t>(c)] + gk[static_cast<std::size_t>(c)];
    }
    return out;
}

Strategy optimal_strategy(std::span<const double> wealth, const StepVectorPath& theta_k,
                          double sigma, std::optional<int> bankruptcy_index) {
    if (sigma == 0.0) throw std::invalid_argument("optimal_strategy: singular price diffusion");
    const std::size_t n_pts = wealth.size();
    Strategy out;
    out.riskless.assign(n_pts, 0.0);
    out.stock.assign(n_pts, 0.0);
    const std::size_t alive =
        bankruptcy_index ? static_cast<std::size_t>(*bankruptcy_index) : n_pts;
    for (std::size_t j = 0; j < alive; ++j) {
        const double pi = wealth[j] * theta_k.row(static_cast<int>(j))[0] / sigma;
        out.stock[j] = pi;
        out.riskless[j] = wealth[j] - pi;
    }
    return out;
}

double phi_aggregate(double y, std::span<const double> nus, std::span<const Utility> utilities) {
    if (!(y > 0.0)) throw std::invalid_argument("phi_aggregate: y must be positive");
    if (nus.size() != utilities.size())
        throw std::invalid_argument("phi_aggregate: one utility per weight required");
    double total = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < nus.size(); ++k) {
        if (!(nus[k] > 0.0)) continue;
        any = true;
        total += utilities[k].inverse_marginal(y / nus[k]);
    }
    if (!any) throw SolvencyViolation("phi_aggregate: all weights vanish");
    return total;
}

double phi_inverse(double x, std::span<const double> nus, std::span<const Utility> utilities) {
    if (!(x > 0.0)) throw std::invalid_argument("phi_inverse: x must be positive");
    if (nus.size() != utilities.size())
        throw std::invalid_argument("phi_inverse: one utility per weight required");

    bool any = false;
    bool all_log = true;
    bool homogeneous_power = true;
    double rra = 0.0;
    double nu_sum = 0.0;
    double nu_pow_sum = 0.0;
    for (std::size_t k = 0; k < nus.size(); ++k) {
        if (!(nus[k] > 0.0)) continue;
        if (!any) rra = utilities[k].rra;
        any = true;
        if (utilities[k].is_log()) {
            homogeneous_power = false;
            nu_sum += nus[k];
        } else {
            all_log = false;
            if (utilities[k].rra != rra) homogeneous_power = false;
            nu_pow_sum += std::pow(nus[k], 1.0 / utilities[k].rra);
        }
    }
    if (!any) throw SolvencyViolation("phi_inverse: all weights vanish");
    if (all_log) return nu_sum / x;
    if (homogeneous_power) return std::pow(nu_pow_sum / x, rra);

    // Mixed utilities: bracket then bisect the strictly decreasing Phi.
    double lo = 1.0, hi = 1.0;
    int guard = 0;
    while (phi_aggregate(lo, nus, utilities) < x) {
        lo *= 0.5;
        if (++guard > 600) throw std::runtime_error("phi_inverse: bracket search failed (low)");
    }
    guard = 0;
    while (phi_aggregate(hi, nus, utilities) > x) {
        hi *= 2.0;
        if (++guard > 600) throw std::runtime_error("phi_inverse: bracket search failed (high)");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) return mid;
        if (phi_aggregate(mid, nus, utilities) > x)
            lo = mid;
        else
            hi = mid;
    }
    if ((hi - lo) > 1e-12 * std::max(1.0, lo))
        throw std::runtime_error("phi_inverse: bisection did not converge");
    return 0.5 * (lo + hi);
}

PathStat general_state_price_density(const EconomyDraw& econ, std::span<const double> y,
                                     std::span<const AgentSpec> agents, double rho) {
    const int n_pts = econ.dividend.grid.n_points();
    const std::size_t n_agents = agents.size();
    std::vector<Utility> utilities(n_agents);
    for (std::size_t k = 0; k < n_agents; ++k) utilities[k] = agents[k].utility;
    std::vector<double> nus(n_agents);
    PathStat xi;
    xi.values.resize(static_cast<std::size_t>(n_pts));
    for (int j = 0; j < n_pts; ++j) {
        const double disc = std::exp(-rho * econ.dividend.grid.time(j));
        for (std::size_t k = 0; k < n_agents; ++k)
            nus[k] = econ.densities[k].z[static_cast<std::size_t>(j)] * disc / y[k];
        xi.values[static_cast<std::size_t>(j)] =
            phi_inverse(econ.dividend.values[static_cast<std::size_t>(j)], nus, utilities);
    }
    return xi;
}

namespace {

/// Budget b_k(y) = E[int_0^T xi_t c_kt dt] with c from the first-order
/// condition, streamed over the fixed per-path seeds (common random numbers).
std::vector<double> budgets_general(std::span<const AgentSpec> agents,
                                    const EconomySampler& sampler, std::size_t n_paths,
                                    std::uint64_t base_seed, double rho,
                                    std::span<const double> y) {
    const std::size_t n_agents = agents.size();
    std::vector<double> acc(n_agents, 0.0);
    std::vector<double> integrand(n_agents);
    std::vector<double> prev(n_agents);
    for (std::size_t i = 0; i < n_paths; ++i) {
        const EconomyDraw econ = sampler(path_seed(base_seed, i));
        if (econ.densities.size() != n_agents)
            throw std::invalid_argument("solve_multipliers_general: density count mismatch");
        const PathStat xi = general_state_price_density(econ, y, agents, rho);
        const TimeGrid& grid = econ.dividend.grid;
        for (int j = 0; j < grid.n_points(); ++j) {
            const double t = grid.time(j);
            const double xij = xi.values[static_cast<std::size_t>(j)];
            for (std::size_t k = 0; k < n_agents; ++k) {
                const double z = econ.densities[k].z[static_cast<std::size_t>(j)];
                double c = 0.0;
                if (econ.densities[k].alive_at(j) && z > 0.0)
                    c = agents[k].utility.inverse_marginal(y[k] * std::exp(rho * t) * xij / z);
                integrand[k] = xij * c;
            }
            if (j > 0)
                for (std::size_t k = 0; k < n_agents; ++k)
                    acc[k] += 0.5 * (prev[k] + integrand[k]) * grid.dt;
            std::swap(prev, integrand);
        }
    }
    for (double& a : acc) a /= static_cast<double>(n_paths);
    return acc;
}

/// In the all-log economy the budget reduces to
/// b_k(y) = (1/y_k) int_0^T e^{-rho t} E[Z_kt] dt, so one streaming pass over
/// the sample means of the densities suffices for every iteration.
std::vector<double> log_budget_coefficients(std::span<const AgentSpec> agents,
                                            const EconomySampler& sampler, std::size_t n_paths,
                                            std::uint64_t base_seed, double rho) {
    std::vector<std::vector<double>> mean_z;
    TimeGrid grid;
    for (std::size_t i = 0; i < n_paths; ++i) {
        const EconomyDraw econ = sampler(path_seed(base_seed, i));
        if (econ.densities.size() != agents.size())
            throw std::invalid_argument("solve_multipliers_general: density count mismatch");
        if (mean_z.empty()) {
            grid = econ.dividend.grid;
            mean_z.assign(agents.size(),
                          std::vector<double>(static_cast<std::size_t>(grid.n_points()), 0.0));
        }
        for (std::size_t k = 0; k < agents.size(); ++k)
            for (std::size_t j = 0; j < mean_z[k].size(); ++j)
                mean_z[k][j] += econ.densities[k].z[j];
    }
    std::vector<double> coeff(agents.size(), 0.0);
    for (std::size_t k = 0; k < agents.size(); ++k) {
        std::vector<double> f(mean_z[k].size());
        for (std::size_t j = 0; j < f.size(); ++j)
            f[j] = std::exp(-rho * grid.time(static_cast<int>(j))) * mean_z[k][j] /
                   static_cast<double>(n_paths);
        coeff[k] = trapezoid(f, grid.dt, 0, grid.n_steps);
    }
    return coeff;
}

}  // namespace

MultiplierSolution solve_multipliers_general(std::span<const AgentSpec> agents,
                                             const EconomySampler& sampler, double rho,
                                             const TimeGrid& grid, std::size_t n_paths,
                                             std::uint64_t base_seed,
                                             const SolverOptions& options) {
    if (agents.empty()) throw std::invalid_argument("solve_multipliers_general: no agents");
    if (n_paths == 0) throw std::invalid_argument("solve_multipliers_general: n_paths must be > 0");
    const std::size_t n_agents = agents.size();

    bool all_log = true;
    for (const AgentSpec& a : agents)
        if (!a.utility.is_log()) all_log = false;
    std::vector<double> log_coeff;
    if (all_log) log_coeff = log_budget_coefficients(agents, sampler, n_paths, base_seed, rho);

    MultiplierSolution sol;
    sol.y.assign(n_agents, 0.0);
    const double eta0 = eta(0.0, rho, grid.horizon);
    for (std::size_t k = 0; k < n_agents; ++k) sol.y[k] = eta0 / agents[k].wealth;  // log guess

    std::vector<double> budgets(n_agents);
    for (int it = 0; it < options.max_iterations; ++it) {
        if (all_log) {
            for (std::size_t k = 0; k < n_agents; ++k) budgets[k] = log_coeff[k] / sol.y[k];
        } else {
            budgets = budgets_general(agents, sampler, n_paths, base_seed, rho, sol.y);
        }
        sol.iterations = it + 1;
        double worst = 0.0;
        for (std::size_t k = 0; k < n_agents; ++k)
            worst = std::max(worst, std::abs(budgets[k] / agents[k].wealth - 1.0));
        if (worst < options.budget_tol_rel) {
            sol.converged = true;
            break;
        }
        for (std::size_t k = 0; k < n_agents; ++k)
            sol.y[k] = std::exp(std::log(sol.y[k]) +
                                options.damping * std::log(budgets[k] / agents[k].wealth));
    }
    sol.budget_residual_rel.resize(n_agents);
    for (std::size_t k = 0; k < n_agents; ++k)
        sol.budget_residual_rel[k] = std::abs(budgets[k] / agents[k].wealth - 1.0);
    return sol;
}

EquilibriumBundle build_log_bundle(const DividendPath& d, std::span<const DensityPath> densities,
                                   std::span<const double> weights, double rho) {
    check_economy(densities, weights);
    const int n_pts = d.grid.n_points();
    const int dim = static_cast<int>(d.vol.size());
    const std::size_t n_agents = densities.size();
    const double eta0 = eta(0.0, rho, d.grid.horizon);

    EquilibriumBundle b;
    b.grid = d.grid;
    b.dividend = d.values;
    b.sigma = d.vol;
    b.cap_index = solvency_cap(densities, weights);
    if (b.cap_index == 0)
        throw SolvencyViolation("build_log_bundle: no solvent agent at time zero");
    b.has_strategies = (dim == 1);

    b.xi.values.assign(static_cast<std::size_t>(n_pts), 0.0);
    b.market_price.values.assign(static_cast<std::size_t>(n_pts), 0.0);
    b.gamma.dim = dim;
    b.gamma.flat.assign(static_cast<std::size_t>(n_pts) * static_cast<std::size_t>(dim), 0.0);
    b.mpr.dim = dim;
    b.mpr.flat.assign(b.gamma.flat.size(), std::numeric_limits<double>::quiet_NaN());
    b.rate.values.assign(static_cast<std::size_t>(n_pts),
                         std::numeric_limits<double>::quiet_NaN());

    b.agents.resize(n_agents);
    for (std::size_t k = 0; k < n_agents; ++k) {
        auto& a = b.agents[k];
        a.weight = weights[k];
        a.bankruptcy_index = densities[k].bankruptcy_index;
        a.consumption.assign(static_cast<std::size_t>(n_pts), 0.0);
        a.wealth.assign(static_cast<std::size_t>(n_pts), 0.0);
        a.riskless.assign(static_cast<std::size_t>(n_pts), 0.0);
        a.stock.assign(static_cast<std::size_t>(n_pts), 0.0);
        a.theta.dim = dim;
        a.theta.flat.assign(b.gamma.flat.size(), std::numeric_limits<double>::quiet_NaN());
    }

    const double sigma_scalar = dim == 1 ? d.vol[0] : 0.0;
    std::vector<double> wz(n_agents);
    for (int j = 0; j < n_pts; ++j) {
        const double t = d.grid.time(j);
        const double eta_t = eta(t, rho, d.grid.horizon);
        const double dj = d.values[static_cast<std::size_t>(j)];
        const double s_bar = dj * eta_t;
        b.market_price.values[static_cast<std::size_t>(j)] = s_bar;
        if (j >= b.cap_index) continue;

        double s_w = 0.0;
        std::size_t residual = 0;
        double best = -1.0;
        for (std::size_t k = 0; k < n_agents; ++k) {
            wz[k] = weights[k] * densities[k].z[static_cast<std::size_t>(j)];
            s_w += wz[k];
            if (wz[k] > best) {
                best = wz[k];
                residual = k;
            }
        }
        const double disc = std::exp(-rho * t);
        const double xij = disc * s_w / (dj * eta0);
        b.xi.values[static_cast<std::size_t>(j)] = xij;

        auto gamma_row = b.gamma.row(j);
        for (std::size_t k = 0; k < n_agents; ++k) {
            if (wz[k] == 0.0) continue;
            auto gk = densities[k].loading.row(j);
            for (int c = 0; c < dim; ++c)
                gamma_row[static_cast<std::size_t>(c)] +=
                    wz[k] * gk[static_cast<std::size_t>(c)] / s_w;
        }
        auto theta_row = b.mpr.row(j);
        double v_dot_theta = 0.0;
        for (int c = 0; c < dim; ++c) {
            theta_row[static_cast<std::size_t>(c)] =
                d.vol[static_cast<std::size_t>(c)] - gamma_row[static_cast<std::size_t>(c)];
            v_dot_theta +=
                d.vol[static_cast<std::size_t>(c)] * theta_row[static_cast<std::size_t>(c)];
        }
        b.rate.values[static_cast<std::size_t>(j)] = rho + d.drift - v_dot_theta;

        // Closed forms for everyone but the residual agent; the residual
        // takes what market clearing leaves. Values within each clearing
        // family are quantized to a shared power-of-two grid so the family
        // sums are exact, at a cost of an ulp-scale perturbation per value.
        for (std::size_t k = 0; k < n_agents; ++k) {
            if (!densities[k].alive_at(j)) continue;
            auto th = b.agents[k].theta.row(j);
            auto gk = densities[k].loading.row(j);
            for (int c = 0; c < dim; ++c)
                th[static_cast<std::size_t>(c)] =
                    theta_row[static_cast<std::size_t>(c)] + gk[static_cast<std::size_t>(c)];
        }

        const double grid_c = ulp_of(dj);
        double c_sum = 0.0, w_sum = 0.0;
        for (std::size_t k = 0; k < n_agents; ++k) {
            if (k == residual || !densities[k].alive_at(j)) continue;
            const double c_k = snap_to_grid(wz[k] * dj / s_w, grid_c);
            b.agents[k].consumption[static_cast<std::size_t>(j)] = c_k;
            c_sum += c_k;
        }
        b.agents[residual].consumption[static_cast<std::size_t>(j)] = dj - c_sum;

        if (b.has_strategies) {
            // Stock/riskless amounts can exceed the market value, so their
            // grid is set by the largest magnitude in play (padded for the
            // residual), and the market value is re-snapped onto it.
            double scale = s_bar;
            for (std::size_t k = 0; k < n_agents; ++k) {
                if (k == residual || !densities[k].alive_at(j)) continue;
                const double w_k = b.agents[k].consumption[static_cast<std::size_t>(j)] * eta_t;
                const double pi = w_k * b.agents[k].theta.row(j)[0] / sigma_scalar;
                scale = std::max({scale, std::abs(pi), std::abs(w_k - pi)});
            }
            const double grid_s = ulp_of(scale) * 4.0;
            const double s_bar_snapped = snap_to_grid(s_bar, grid_s);
            b.market_price.values[static_cast<std::size_t>(j)] = s_bar_snapped;

            const double grid_w = ulp_of(s_bar_snapped);
            double pi_sum = 0.0, phi_sum = 0.0;
            for (std::size_t k = 0; k < n_agents; ++k) {
                if (k == residual || !densities[k].alive_at(j)) continue;
                auto& a = b.agents[k];
                const double w_k = snap_to_grid(
                    a.consumption[static_cast<std::size_t>(j)] * eta_t, grid_w);
                a.wealth[static_cast<std::size_t>(j)] = w_k;
                w_sum += w_k;
                const double pi = snap_to_grid(w_k * a.theta.row(j)[0] / sigma_scalar, grid_s);
                const double phi = snap_to_grid(w_k - pi, grid_s);
                a.stock[static_cast<std::size_t>(j)] = pi;
                a.riskless[static_cast<std::size_t>(j)] = phi;
                pi_sum += pi;
                phi_sum += phi;
            }
            auto& res = b.agents[residual];
            res.wealth[static_cast<std::size_t>(j)] = s_bar_snapped - w_sum;
            res.stock[static_cast<std::size_t>(j)] = s_bar_snapped - pi_sum;
            res.riskless[static_cast<std::size_t>(j)] = -phi_sum;
        } else {
            const double grid_w = ulp_of(s_bar);
            for (std::size_t k = 0; k < n_agents; ++k) {
                if (k == residual || !densities[k].alive_at(j)) continue;
                auto& a = b.agents[k];
                const double w_k = snap_to_grid(
                    a.consumption[static_cast<std::size_t>(j)] * eta_t, grid_w);
                a.wealth[static_cast<std::size_t>(j)] = w_k;
                w_sum += w_k;
            }
            b.agents[residual].wealth[static_cast<std::size_t>(j)] = s_bar - w_sum;
        }
    }
    return b;
}

}  // namespace bubblesim
