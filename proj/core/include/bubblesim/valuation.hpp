#pragma once

#include <span>
#include <string>
#include <vector>

#include "bubblesim/equilibrium.hpp"
#include "bubblesim/estimate.hpp"
#include "bubblesim/grid.hpp"
#include "bubblesim/paths.hpp"

namespace bubblesim {

/// Trapezoidal integral of the deflated cash flow xi_t c_t, split at a
/// truncation point. full is constructed as before + tail, so the
/// decomposition identity holds path by path.
struct DeflatedIntegralSplit {
    double before = 0.0;
    double tail = 0.0;
    double full = 0.0;
};

/// split_point and cap_point are grid-point indices; integration runs over
/// [0, cap_point-1] and is split at min(split_point, cap_point-1).
DeflatedIntegralSplit split_deflated_integral(std::span<const double> xi,
                                              std::span<const double> cash, double dt,
                                              int split_point, int cap_point);

/// Reduced per-path data every valuation estimate needs. One slot per path;
/// built incrementally by the scenario engine or by tests.
struct ValuationEnsemble {
    TimeGrid grid;
    double xi0 = 0.0;           // deterministic time-zero state price density
    double market_price0 = 0.0; // S bar at time zero
    std::vector<double> full;                             // deflated integral over [0, cap)
    std::vector<std::vector<double>> truncated;           // per agent, integral over [0, tau_k)
    std::vector<std::vector<double>> tail;                // per agent, integral over [tau_k, cap)
    std::vector<std::vector<double>> deflated_terminal;   // per agent, xi_T S_0T / xi_0 1{tau_k > T}

    std::size_t n_agents() const { return truncated.size(); }
    std::size_t n_paths() const { return full.size(); }
};

/// F_0(c) = xi_0^{-1} E[int_0^T xi_s c_s ds].
MonteCarloEstimate fundamental_value_reference(const ValuationEnsemble& ens);

/// F^k_0(c) = xi_0^{-1} E[int_0^{tau_k} xi_s c_s ds].
MonteCarloEstimate fundamental_value_subjective(const ValuationEnsemble& ens, std::size_t agent);

struct BubbleReport {
    std::string asset;
    std::size_t agent = 0;
    double market_price = 0.0;
    MonteCarloEstimate fundamental_reference;   // F
    MonteCarloEstimate fundamental_subjective;  // F^k
    MonteCarloEstimate tail_term;               // xi_0^{-1} E[int_{tau_k}^T xi c]
    MonteCarloEstimate bubble;                  // price - F^k, via the tail expectation
    MonteCarloEstimate decomposition_residual;  // F - F^k - tail, path by path
};

/// Time-zero bubble on the asset backing the ensemble's cash flow, as
/// perceived by the given agent, with the decomposition residual attached.
BubbleReport bubble_decomposition(const ValuationEnsemble& ens, std::size_t agent);

/// Riskless-asset bubble 1 - xi_0^{-1} E[xi_T S_0T 1{tau_k > T}]; the
/// deflated money-market terminal is exp(-sum theta.dX - 0.5 sum |theta|^2 dt).
MonteCarloEstimate riskless_bubble(const ValuationEnsemble& ens, std::size_t agent);

/// Deflated money-market terminal value along one path, from the pointwise
/// market price of risk (rows used as per-step loadings).
double deflated_money_market_terminal(const StepVectorPath& mpr, const BrownianPath& driver);

/// Standard normal distribution function.
double normal_cdf(double x);

/// Conditional probability, at grid point t_index, that a unit-volatility
/// coordinate currently at x_t (distance 1 + x_t above the barrier -1) hits
/// the barrier by time s: 2 N(-(1 + x_t) / sqrt(s - t)) for s > t.
double reflection_hitting_probability(double x_t, double t, double s);

/// Market-portfolio bubble perceived by agent k in the two-stock economy at
/// grid point t_index (strictly before tau_k):
///   B_t = w_other Z_other(t) / (xi_t eta(0)) *
///         int_t^T P(tau_k <= s | F_t) e^{-rho s} ds
/// with the hitting probability from the reflection principle and the time
/// integral by trapezoidal quadrature on the grid.
double conditional_bubble_ex4(double x_k_t, double z_other_t, double w_other, double xi_t,
                              double rho, const TimeGrid& grid, int t_index);

}  // namespace bubblesim
