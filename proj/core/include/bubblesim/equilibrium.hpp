#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bubblesim/beliefs.hpp"
#include "bubblesim/grid.hpp"
#include "bubblesim/market.hpp"
#include "bubblesim/paths.hpp"

namespace bubblesim {

/// Raised when every configured density vanishes at some grid point, i.e.
/// the economy has no solvent agent left where one was required.
struct SolvencyViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Utility {
    enum class Kind { log_utility, power_utility };
    Kind kind = Kind::log_utility;
    double rra = 1.0;  // relative risk aversion, power utility only

    bool is_log() const { return kind == Kind::log_utility; }
    /// Inverse marginal utility I(y) = (u')^{-1}(y).
    double inverse_marginal(double y) const {
        return is_log() ? 1.0 / y : std::pow(y, -1.0 / rra);
    }

    static Utility log_type() { return {Kind::log_utility, 1.0}; }
    static Utility power(double rra) {
        if (!(rra > 0.0)) throw std::invalid_argument("power utility: rra must be positive");
        return {Kind::power_utility, rra};
    }
};

/// Which density construction an agent's beliefs use.
struct BeliefSpec {
    enum class Kind { reference, optimist, pessimist, drawdown, linear };
    Kind kind = Kind::reference;
    double kappa = 0.5;  // drawdown only
    int coordinate = 0;  // linear only
};

struct AgentSpec {
    double wealth = 1.0;
    Utility utility;
    BeliefSpec belief;
};

/// eta(t) = (1 - e^{-rho (T - t)}) / rho; the annuity factor of the
/// logarithmic equilibrium.
double eta(double t, double rho, double horizon);

/// Reference state price density of the all-log economy:
/// xi_t = e^{-rho t} (sum_k w_k Z_kt) / (D_t eta(0)).
/// Throws SolvencyViolation if every density vanishes at some grid point.
PathStat log_state_price_density(const DividendPath& d,
                                 std::span<const DensityPath> densities,
                                 std::span<const double> weights, double rho);

/// c_kt = w_k Z_kt / (e^{rho t} xi_t eta(0)) before bankruptcy and 0 after;
/// W_kt = c_kt eta(t).
struct ConsumptionWealth {
    std::vector<double> consumption;
    std::vector<double> wealth;
};
ConsumptionWealth log_consumption_wealth(const PathStat& xi, const DensityPath& z, double w_k,
                                         double rho);

/// Market portfolio price S_t = D_t eta(t).
PathStat market_portfolio_price(const DividendPath& d, double rho);

/// Pointwise aggregate loading gamma_t = sum_k w_k Z_kt gamma_kt / sum_k w_k Z_kt,
/// with bankrupt agents contributing zero. Throws SolvencyViolation when the
/// denominator vanishes.
StepVectorPath aggregate_gamma(std::span<const DensityPath> densities,
                               std::span<const double> weights);

/// theta_t = v - gamma_t and r_t = rho + a - v.(v - gamma_t), pointwise.
struct RateAndPrice {
    PathStat rate;
    StepVectorPath mpr;
};
RateAndPrice rate_and_mpr(double drift, std::span<const double> vol, const StepVectorPath& gamma,
                          double rho);

/// theta_kt = theta_t + gamma_kt before bankruptcy; NaN (absent) after.
StepVectorPath agent_mpr(const StepVectorPath& mpr, const DensityPath& z);

/// Single-stock strategy: pi = W theta_k / sigma, phi = W - pi before
/// bankruptcy, identically zero after. sigma is the scalar price diffusion.
struct Strategy {
    std::vector<double> riskless;  // phi
    std::vector<double> stock;     // pi
};
Strategy optimal_strategy(std::span<const double> wealth, const StepVectorPath& theta_k,
                          double sigma, std::optional<int> bankruptcy_index);

/// Phi(y; nu) = sum_{nu_k > 0} I_k(y / nu_k), strictly decreasing in y.
double phi_aggregate(double y, std::span<const double> nus, std::span<const Utility> utilities);

/// Unique y > 0 with Phi(y; nu) = x, by bracketed bisection (closed forms for
/// the homogeneous log and power cases).
double phi_inverse(double x, std::span<const double> nus, std::span<const Utility> utilities);

/// One simulated economy: the aggregate dividend plus each agent's density.
struct EconomyDraw {
    DividendPath dividend;
    std::vector<DensityPath> densities;
};
using EconomySampler = std::function<EconomyDraw(std::uint64_t)>;

/// State price density xi_t = Phi^{-1}(D_t; Z_kt e^{-rho t} / y_k) of the
/// general-utility economy, per path.
PathStat general_state_price_density(const EconomyDraw& econ, std::span<const double> y,
                                     std::span<const AgentSpec> agents, double rho);

struct SolverOptions {
    double damping = 0.5;
    int max_iterations = 200;
    double budget_tol_rel = 1e-6;
};

struct MultiplierSolution {
    std::vector<double> y;
    std::vector<double> budget_residual_rel;  // |b_k / w_k - 1| at the solution
    int iterations = 0;
    bool converged = false;
};

/// Solves the budget system E[int_0^T xi_t c_kt dt] = w_k for the utility
/// multipliers y_k by damped fixed-point iteration on log y, with common
/// random numbers across iterations. In the all-log economy the solution is
/// y_k = eta(0)/w_k.
MultiplierSolution solve_multipliers_general(std::span<const AgentSpec> agents,
                                             const EconomySampler& sampler, double rho,
                                             const TimeGrid& grid, std::size_t n_paths,
                                             std::uint64_t base_seed,
                                             const SolverOptions& options = {});

/// Per-path equilibrium bundle of the logarithmic economy. Market clearing
/// holds exactly at every grid point before the solvency cap: the largest
/// solvent agent is assigned the clearing residual, all others follow their
/// closed forms. Quantities of bankrupt agents are identically zero from the
/// bankruptcy index on; subjective prices of risk are NaN there.
struct EquilibriumBundle {
    TimeGrid grid;
    std::vector<double> dividend;
    PathStat xi;
    PathStat rate;            // r_t
    StepVectorPath mpr;       // theta_t, pointwise
    StepVectorPath gamma;     // aggregate loading, pointwise
    PathStat market_price;    // S bar
    std::vector<double> sigma;  // price diffusion (= dividend vol here)
    int cap_index = 0;        // first grid point with no solvent agent, or n_points

    struct Agent {
        double weight = 1.0;
        std::optional<int> bankruptcy_index;
        std::vector<double> consumption;
        std::vector<double> wealth;
        std::vector<double> riskless;  // phi (single-stock economies only)
        std::vector<double> stock;     // pi  (single-stock economies only)
        StepVectorPath theta;          // theta_k, NaN at/after bankruptcy
    };
    std::vector<Agent> agents;

    bool has_strategies = false;
    int n_points() const { return grid.n_points(); }
};

/// Builds the full bundle from a dividend path and per-agent densities
/// (log utilities). Strategies are populated for one-dimensional drivers.
EquilibriumBundle build_log_bundle(const DividendPath& d,
                                   std::span<const DensityPath> densities,
                                   std::span<const double> weights, double rho);

}  // namespace bubblesim
