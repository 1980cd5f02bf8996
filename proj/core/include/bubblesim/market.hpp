#pragma once

#include <utility>
#include <vector>

#include "bubblesim/grid.hpp"
#include "bubblesim/paths.hpp"

namespace bubblesim {

/// Aggregate dividend rate path, strictly positive on every grid point.
struct DividendPath {
    TimeGrid grid;
    std::vector<double> values;
    double drift = 0.0;            // a
    std::vector<double> vol;       // v, one entry per driver coordinate

    double initial() const { return values.front(); }
};

/// Dividend share of stock 1 in the two-stock economy; valued in (0, 1),
/// share of stock 2 is 1 - psi by construction.
struct SharePath {
    TimeGrid grid;
    std::vector<double> values;
    std::vector<double> vol;       // v_psi
};

/// D_t = D0 exp(v.X_t + (a - |v|^2/2) t), exact on grid points.
DividendPath gbm_dividend(const TimeGrid& grid, const BrownianPath& x, double d0, double drift,
                          std::vector<double> vol);

/// Euler-Maruyama path of d psi = psi (1-psi) v_psi . dX, clamped to
/// [eps_psi, 1 - eps_psi] with eps_psi = 1e-12.
SharePath share_process(const TimeGrid& grid, const BrownianPath& x, double psi0,
                        std::vector<double> v_psi);

/// D_1 = psi D and D_2 = (1 - psi) D; the halves add back to D exactly.
std::pair<DividendPath, DividendPath> split_dividends(const DividendPath& d, const SharePath& psi);

}  // namespace bubblesim
