#include "bubblesim/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bubblesim {

namespace {
constexpr double kShareClamp = 1e-12;
}

DividendPath gbm_dividend(const TimeGrid& grid, const BrownianPath& x, double d0, double drift,
                          std::vector<double> vol) {
    if (!(d0 > 0.0)) throw std::invalid_argument("gbm_dividend: D0 must be positive");
    if (static_cast<int>(vol.size()) != x.dim)
        throw std::invalid_argument("gbm_dividend: vol dimension does not match driver");
    double v2 = 0.0;
    for (double c : vol) v2 += c * c;
    const double eff_drift = drift - 0.5 * v2;

    DividendPath d;
    d.grid = grid;
    d.drift = drift;
    d.vol = std::move(vol);
    d.values.resize(static_cast<std::size_t>(grid.n_points()));
    d.values[0] = d0;
    for (int j = 1; j <= grid.n_steps; ++j) {
        double vx = 0.0;
        for (int c = 0; c < x.dim; ++c) vx += d.vol[static_cast<std::size_t>(c)] * x.value(j, c);
        d.values[static_cast<std::size_t>(j)] = d0 * std::exp(vx + eff_drift * grid.time(j));
    }
    return d;
}

SharePath share_process(const TimeGrid& grid, const BrownianPath& x, double psi0,
                        std::vector<double> v_psi) {
    if (!(psi0 > 0.0 && psi0 < 1.0))
        throw std::invalid_argument("share_process: psi0 must lie in (0, 1)");
    if (static_cast<int>(v_psi.size()) != x.dim)
        throw std::invalid_argument("share_process: v_psi dimension does not match driver");

    SharePath s;
    s.grid = grid;
    s.vol = std::move(v_psi);
    s.values.resize(static_cast<std::size_t>(grid.n_points()));
    double psi = psi0;
    s.values[0] = psi;
    for (int j = 0; j < grid.n_steps; ++j) {
        double shock = 0.0;
        for (int c = 0; c < x.dim; ++c)
            shock += s.vol[static_cast<std::size_t>(c)] * x.increment(j, c);
        psi += psi * (1.0 - psi) * shock;
        psi = std::clamp(psi, kShareClamp, 1.0 - kShareClamp);
        s.values[static_cast<std::size_t>(j) + 1] = psi;
    }
    return s;
}

std::pair<DividendPath, DividendPath> split_dividends(const DividendPath& d, const SharePath& psi) {
    if (!same_grid(d.grid, psi.grid))
        throw std::invalid_argument("split_dividends: grid mismatch");
    DividendPath d1 = d;
    DividendPath d2 = d;
    for (std::size_t j = 0; j < d.values.size(); ++j) {
        // Multiply out the larger share and subtract for the smaller one: the
        // larger share is at least D/2, so the subtraction is exact
        // (Sterbenz) and the halves add back to D bit for bit.
        const double share = psi.values[j];
        if (share >= 0.5) {
            d1.values[j] = share * d.values[j];
            d2.values[j] = d.values[j] - d1.values[j];
        } else {
            d2.values[j] = (1.0 - share) * d.values[j];
            d1.values[j] = d.values[j] - d2.values[j];
        }
    }
    return {std::move(d1), std::move(d2)};
}

}  // namespace bubblesim
