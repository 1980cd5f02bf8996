#include <cmath>
#include <vector>

#include "bubblesim/market.hpp"
#include "bubblesim/paths.hpp"
#include "bubblesim/rng.hpp"
#include "doctest.h"

using namespace bubblesim;

TEST_CASE("gbm dividend degenerate cases") {
    const TimeGrid g = make_time_grid(1.0, 32);
    const BrownianPath x = sample_brownian(g, 1, 11);

    const DividendPath flat = gbm_dividend(g, x, 3.0, 0.0, {0.0});
    for (double v : flat.values) CHECK(v == doctest::Approx(3.0).epsilon(1e-15));

    // a = |v|^2 / 2 cancels the Ito drift
    const double vol = 0.4;
    const DividendPath pure = gbm_dividend(g, x, 2.0, 0.5 * vol * vol, {vol});
    for (int j = 0; j <= g.n_steps; ++j)
        CHECK(pure.values[static_cast<std::size_t>(j)] ==
              doctest::Approx(2.0 * std::exp(vol * x.value(j, 0))).epsilon(1e-13));

    CHECK_THROWS_AS(gbm_dividend(g, x, 0.0, 0.0, {vol}), std::invalid_argument);
    CHECK_THROWS_AS(gbm_dividend(g, x, -1.0, 0.0, {vol}), std::invalid_argument);
    CHECK_THROWS_AS(gbm_dividend(g, x, 1.0, 0.0, {vol, vol}), std::invalid_argument);
}

TEST_CASE("driftless gbm is a martingale (Monte Carlo)") {
    const TimeGrid g = make_time_grid(1.0, 16);
    const std::size_t n_paths = 100000;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        const BrownianPath x = sample_brownian(g, 1, path_seed(31, i));
        const DividendPath d = gbm_dividend(g, x, 2.0, 0.0, {0.3});
        const double v = d.values.back();
        const double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    const double se =
        std::sqrt(m2 / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths));
    CHECK(std::abs(mean - 2.0) <= 3.0 * se);
}

TEST_CASE("gbm restriction to a coarser grid is exact") {
    const TimeGrid fine = make_time_grid(1.0, 64);
    const BrownianPath x = sample_brownian(fine, 1, 5);
    const DividendPath d_fine = gbm_dividend(fine, x, 1.5, 0.02, {0.25});

    // Build the coarse driver from every 4th fine point.
    const TimeGrid coarse = make_time_grid(1.0, 16);
    BrownianPath x_coarse;
    x_coarse.grid = coarse;
    x_coarse.dim = 1;
    for (int j = 0; j <= coarse.n_steps; ++j) x_coarse.values.push_back(x.value(4 * j, 0));
    const DividendPath d_coarse = gbm_dividend(coarse, x_coarse, 1.5, 0.02, {0.25});
    for (int j = 0; j <= coarse.n_steps; ++j)
        CHECK(d_coarse.values[static_cast<std::size_t>(j)] ==
              doctest::Approx(d_fine.values[static_cast<std::size_t>(4 * j)]).epsilon(1e-13));
}

TEST_CASE("share process stays inside the unit interval") {
    const TimeGrid g = make_time_grid(1.0, 200);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 99ULL}) {
        const BrownianPath x = sample_brownian(g, 2, seed);
        const SharePath psi = share_process(g, x, 0.5, {3.0, -2.0});  // violent loading
        for (double v : psi.values) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }

    const BrownianPath x = sample_brownian(g, 2, 17);
    const SharePath frozen = share_process(g, x, 0.25, {0.0, 0.0});
    for (double v : frozen.values) CHECK(v == 0.25);

    CHECK_THROWS_AS(share_process(g, x, 0.0, {0.1, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(share_process(g, x, 1.0, {0.1, 0.1}), std::invalid_argument);
}

TEST_CASE("driftless share process is a martingale (Monte Carlo)") {
    const TimeGrid g = make_time_grid(1.0, 50);
    const std::size_t n_paths = 100000;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        const BrownianPath x = sample_brownian(g, 2, path_seed(41, i));
        const SharePath psi = share_process(g, x, 0.4, {0.3, -0.3});
        const double v = psi.values.back();
        const double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    const double se =
        std::sqrt(m2 / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths));
    CHECK(std::abs(mean - 0.4) <= 3.0 * se);
}

TEST_CASE("split dividends conserves the aggregate exactly") {
    const TimeGrid g = make_time_grid(1.0, 40);
    const BrownianPath x = sample_brownian(g, 2, 23);
    const DividendPath d = gbm_dividend(g, x, 2.0, 0.01, {1.0, 1.0});

    const SharePath half = share_process(g, x, 0.5, {0.0, 0.0});
    const auto [d1h, d2h] = split_dividends(d, half);
    for (int j = 0; j <= g.n_steps; ++j) {
        CHECK(d1h.values[static_cast<std::size_t>(j)] ==
              0.5 * d.values[static_cast<std::size_t>(j)]);
        CHECK(d2h.values[static_cast<std::size_t>(j)] ==
              d1h.values[static_cast<std::size_t>(j)]);
    }

    const SharePath psi = share_process(g, x, 0.3, {0.4, -0.2});
    const auto [d1, d2] = split_dividends(d, psi);
    for (int j = 0; j <= g.n_steps; ++j)
        CHECK(d1.values[static_cast<std::size_t>(j)] + d2.values[static_cast<std::size_t>(j)] ==
              d.values[static_cast<std::size_t>(j)]);

    const SharePath fixed = share_process(g, x, 0.3, {0.0, 0.0});
    const auto [a, b] = split_dividends(d, fixed);
    for (int j = 0; j <= g.n_steps; ++j)
        CHECK(a.values[static_cast<std::size_t>(j)] /
                  d.values[static_cast<std::size_t>(j)] ==
              doctest::Approx(0.3).epsilon(1e-15));

    const TimeGrid other = make_time_grid(2.0, 40);
    const SharePath wrong = share_process(other, sample_brownian(other, 2, 1), 0.5, {0.1, 0.1});
    CHECK_THROWS_AS(split_dividends(d, wrong), std::invalid_argument);
}
