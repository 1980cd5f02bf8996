#pragma once

#include <cstdint>

#include "bubblesim/market.hpp"

namespace bubblesim {

/// Small two-agent log economy (optimist vs reference beliefs) on a binomial
/// tree. Up/down factors match the mean and variance of the exact GBM step
/// with equal branch probabilities.
struct LatticeEconomy {
    double d0 = 2.0;
    double vol = 0.2;
    double rho = 0.05;
    double horizon = 1.0;
    double w1 = 1.0;
    double w2 = 1.0;
    int n_steps = 10;
};

struct LatticeValues {
    double market_price = 0.0;            // D0 eta(0)
    double fundamental_reference = 0.0;   // F
    double fundamental_subjective = 0.0;  // F^1
    double tail = 0.0;                    // F - F^1, enumerated directly
    double bubble = 0.0;                  // the tail identity B = F - F^1
    double hit_probability = 0.0;         // P(tau_1 <= T) on the tree
};

/// Exhaustive enumeration of all 2^n tree paths (n <= 20). Deliberately
/// self-contained: the deflator, density, and quadrature are written out
/// inline so the oracle shares no code with the Monte Carlo pipeline.
LatticeValues lattice_oracle_value(const LatticeEconomy& econ);

/// Samples one dividend path with the tree's own two-point increments, so
/// Monte Carlo estimates target exactly the law the oracle enumerates.
DividendPath sample_lattice_dividend(const LatticeEconomy& econ, std::uint64_t seed);

}  // namespace bubblesim
