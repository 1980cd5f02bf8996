#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bubblesim/equilibrium.hpp"
#include "bubblesim/estimate.hpp"
#include "bubblesim/grid.hpp"
#include "bubblesim/valuation.hpp"

namespace bubblesim {

enum class ScenarioKind { optimist, pessimist, drawdown_pair, two_stock };

const char* to_string(ScenarioKind kind);
std::optional<ScenarioKind> scenario_kind_from_string(const std::string& name);

/// Declarative description of one economy. Defaults follow the library-wide
/// conventions: rho = 0.05, T = 1, n_steps = 2000, n_paths = 1e5.
struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::optimist;

    double d0 = 2.0;
    double drift = 0.0;
    std::vector<double> vol = {0.2};

    double kappa = 0.5;              // drawdown_pair
    double psi0 = 0.5;               // two_stock
    std::vector<double> v_psi;       // two_stock

    std::vector<double> wealth = {1.0, 1.0};

    double rho = 0.05;
    double horizon = 1.0;
    int n_steps = 2000;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    bool bridge = false;

    unsigned workers = 1;
    int n_bootstrap = 200;

    int driver_dim() const { return kind == ScenarioKind::two_stock ? 2 : 1; }
    TimeGrid grid() const { return make_time_grid(horizon, n_steps); }
    std::size_t n_agents() const { return wealth.size(); }

    /// Empty when valid; otherwise one message per violated constraint,
    /// naming the offending field.
    std::vector<std::string> validate() const;
};

struct QuantileSummary {
    double mean = 0.0;
    double p10 = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    std::size_t n = 0;
};

QuantileSummary quantile_summary(std::vector<double> values);

struct CheckpointSummary {
    double time = 0.0;
    int index = 0;
    std::size_t solvent_paths = 0;  // paths whose solvency horizon covers t
    QuantileSummary rate;
    std::vector<QuantileSummary> mpr;                     // per driver coordinate
    std::vector<std::vector<QuantileSummary>> agent_mpr;  // [agent][coordinate], alive paths
    std::vector<MonteCarloEstimate> density_mean;         // E[Z_kt] per agent
};

struct BankruptcyStats {
    std::size_t count = 0;       // effective detection (bridge-corrected if enabled)
    std::size_t grid_count = 0;  // plain grid detection, always reported
    double frequency = 0.0;
    double grid_frequency = 0.0;
};

/// Structural identities tracked on every grid point of every path.
struct InvariantStats {
    double max_rel_price_identity = 0.0;     // S = D eta(t)
    double max_rel_wealth_identity = 0.0;    // W_k = c_k eta(t)
    double max_rel_rate_identity = 0.0;      // r = rho + a - v.theta
    double max_rel_strategy_identity = 0.0;  // residual vs closed-form holdings
    double max_rel_rate_gap_identity = 0.0;  // r - (rho - v theta_1) = v^2 D/(D-1)
    std::size_t clearing_violations = 0;     // sum c = D etc., exact comparisons
    std::size_t no_resurrection_violations = 0;
    std::size_t nonpositive_xi = 0;
    std::size_t sign_law_violations = 0;        // optimist: theta_2 > 0 iff w1/w2 < D0-1
    bool sign_law_applicable = false;
    std::size_t drift_dominance_violations = 0;  // two_stock
    bool drift_dominance_applicable = false;
    std::size_t share_split_violations = 0;      // two_stock: D1 + D2 = D
};

struct LimitingHoldingsStats {
    std::size_t agent = 0;
    std::size_t count = 0;
    double median_rel_error = 0.0;
    double p90_rel_error = 0.0;
};

struct BurstStats {
    std::size_t sigma_count = 0;        // paths where D* reaches 1/kappa
    std::size_t eligible_count = 0;     // sigma strictly before tau_1 ^ tau_2
    std::size_t order_violations = 0;   // tau_2 <= tau_1 failures on that event
    MonteCarloEstimate post_sigma_bubble;  // agent-1 tail restricted to s >= sigma
};

struct LawEqualityStats {
    double t_star = 0.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    double ks_distance = 0.0;
    double p_value = 0.0;
    double swap_distance = 0.0;  // index-swap control, identically zero
    bool hypothesis_ok = false;  // symmetric volatility and equal wealths
};

struct ScenarioOutput {
    ScenarioConfig config;
    std::vector<CheckpointSummary> checkpoints;
    std::vector<BankruptcyStats> bankruptcy;           // per agent
    std::vector<BubbleReport> market_bubbles;          // per agent
    std::vector<MonteCarloEstimate> riskless_bubbles;  // per agent
    MonteCarloEstimate deflator_check;  // E[xi S stopped + int xi D] vs xi0 S0
    double deflator_target = 0.0;
    InvariantStats invariants;
    std::vector<LimitingHoldingsStats> limiting;
    std::optional<BurstStats> burst;
    std::optional<LawEqualityStats> law;

    struct Series {
        std::string name;
        std::vector<double> mean;
        std::vector<std::size_t> count;
    };
    std::vector<Series> series;

    double duration_seconds = 0.0;
};

ScenarioOutput run_scenario(const ScenarioConfig& config);

/// Weighted empirical two-sample Kolmogorov-Smirnov distance.
double weighted_ks_distance(std::span<const double> values_a, std::span<const double> weights_a,
                            std::span<const double> values_b, std::span<const double> weights_b);

/// Bootstrap p-value under the pooled null, resampling at the effective
/// sample sizes implied by the weights.
double weighted_ks_bootstrap_pvalue(std::span<const double> values_a,
                                    std::span<const double> weights_a,
                                    std::span<const double> values_b,
                                    std::span<const double> weights_b, double observed_distance,
                                    int n_bootstrap, std::uint64_t seed);

LimitingHoldingsStats limiting_holdings_stats(std::size_t agent,
                                              std::vector<double> relative_errors);

struct VerifyCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Runs the scenario and evaluates the library's invariant suite on it.
std::vector<VerifyCheck> verify_scenario(const ScenarioConfig& config,
                                         ScenarioOutput* output_out = nullptr);

}  // namespace bubblesim
