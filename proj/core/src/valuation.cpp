#include "bubblesim/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bubblesim {

DeflatedIntegralSplit split_deflated_integral(std::span<const double> xi,
                                              std::span<const double> cash, double dt,
                                              int split_point, int cap_point) {
    if (xi.size() != cash.size())
        throw std::invalid_argument("split_deflated_integral: length mismatch");
    const int last = cap_point - 1;
    const int split = std::min(split_point, std::max(last, 0));
    DeflatedIntegralSplit out;
    for (int j = 0; j + 1 <= last; ++j) {
        const double seg = 0.5 *
                           (xi[static_cast<std::size_t>(j)] * cash[static_cast<std::size_t>(j)] +
                            xi[static_cast<std::size_t>(j) + 1] *
                                cash[static_cast<std::size_t>(j) + 1]) *
                           dt;
        if (j + 1 <= split)
            out.before += seg;
        else
            out.tail += seg;
    }
    out.full = out.before + out.tail;
    return out;
}

namespace {

std::vector<double> scaled(std::span<const double> samples, double scale) {
    std::vector<double> out(samples.begin(), samples.end());
    for (double& x : out) x *= scale;
    return out;
}

}  // namespace

MonteCarloEstimate fundamental_value_reference(const ValuationEnsemble& ens) {
    if (ens.full.empty()) throw std::invalid_argument("fundamental_value_reference: empty ensemble");
    return estimate_from_samples(scaled(ens.full, 1.0 / ens.xi0));
}

MonteCarloEstimate fundamental_value_subjective(const ValuationEnsemble& ens, std::size_t agent) {
    if (ens.truncated.at(agent).empty())
        throw std::invalid_argument("fundamental_value_subjective: empty ensemble");
    return estimate_from_samples(scaled(ens.truncated[agent], 1.0 / ens.xi0));
}

BubbleReport bubble_decomposition(const ValuationEnsemble& ens, std::size_t agent) {
    BubbleReport report;
    report.asset = "market";
    report.agent = agent;
    report.market_price = ens.market_price0;
    report.fundamental_reference = fundamental_value_reference(ens);
    report.fundamental_subjective = fundamental_value_subjective(ens, agent);
    report.tail_term = estimate_from_samples(scaled(ens.tail[agent], 1.0 / ens.xi0));

    // price - F^k equals the tail expectation, whose samples share paths
    // with F and F^k and vanish on paths without bankruptcy.
    report.bubble = report.tail_term;

    std::vector<double> residual(ens.n_paths());
    for (std::size_t i = 0; i < ens.n_paths(); ++i)
        residual[i] = (ens.full[i] - ens.truncated[agent][i] - ens.tail[agent][i]) / ens.xi0;
    report.decomposition_residual = estimate_from_samples(residual);
    return report;
}

MonteCarloEstimate riskless_bubble(const ValuationEnsemble& ens, std::size_t agent) {
    const auto& q = ens.deflated_terminal.at(agent);
    if (q.empty()) throw std::invalid_argument("riskless_bubble: empty ensemble");
    std::vector<double> samples(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) samples[i] = 1.0 - q[i];
    return estimate_from_samples(samples);
}

double deflated_money_market_terminal(const StepVectorPath& mpr, const BrownianPath& driver) {
    const int n = driver.grid.n_steps;
    double log_q = 0.0;
    for (int j = 0; j < n; ++j) {
        auto th = mpr.row(j);
        double shock = 0.0;
        double norm2 = 0.0;
        for (int c = 0; c < driver.dim; ++c) {
            shock += th[static_cast<std::size_t>(c)] * driver.increment(j, c);
            norm2 += th[static_cast<std::size_t>(c)] * th[static_cast<std::size_t>(c)];
        }
        log_q += -shock - 0.5 * norm2 * driver.grid.dt;
    }
    return std::exp(log_q);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double reflection_hitting_probability(double x_t, double t, double s) {
    if (!(s > t)) return 0.0;
    const double distance = 1.0 + x_t;
    if (distance <= 0.0) return 1.0;
    return 2.0 * normal_cdf(-distance / std::sqrt(s - t));
}

double conditional_bubble_ex4(double x_k_t, double z_other_t, double w_other, double xi_t,
                              double rho, const TimeGrid& grid, int t_index) {
    const double t = grid.time(t_index);
    const double eta0 = (1.0 - std::exp(-rho * grid.horizon)) / rho;
    // Trapezoid over s in [t, T]; integrand vanishes at s = t.
    double integral = 0.0;
    double prev = 0.0;
    for (int j = t_index + 1; j <= grid.n_steps; ++j) {
        const double s = grid.time(j);
        const double f = reflection_hitting_probability(x_k_t, t, s) * std::exp(-rho * s);
        integral += 0.5 * (prev + f) * grid.dt;
        prev = f;
    }
    return w_other * z_other_t / (xi_t * eta0) * integral;
}

}  // namespace bubblesim
