#include <cmath>
#include <vector>

#include "bubblesim/grid.hpp"
#include "bubblesim/paths.hpp"
#include "bubblesim/rng.hpp"
#include "doctest.h"

using namespace bubblesim;

TEST_CASE("time grid basics") {
    const TimeGrid g = make_time_grid(1.0, 4);
    CHECK(g.n_points() == 5);
    CHECK(g.time(0) == 0.0);
    CHECK(g.time(1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.time(4) == doctest::Approx(1.0).epsilon(1e-15));

    const TimeGrid minimal = make_time_grid(1.0, 1);
    CHECK(minimal.n_points() == 2);
    CHECK(minimal.time(1) == doctest::Approx(1.0).epsilon(1e-15));

    CHECK(make_time_grid(2.0, 2000).dt == doctest::Approx(0.001).epsilon(1e-15));

    CHECK_THROWS_AS(make_time_grid(0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(make_time_grid(-1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(make_time_grid(1.0, 0), std::invalid_argument);
}

TEST_CASE("brownian path starts at zero and is reproducible") {
    const TimeGrid g = make_time_grid(1.0, 16);
    const BrownianPath a = sample_brownian(g, 3, 12345);
    for (int d = 0; d < 3; ++d) CHECK(a.value(0, d) == 0.0);

    const BrownianPath b = sample_brownian(g, 3, 12345);
    CHECK(a.values == b.values);

    const BrownianPath c = sample_brownian(g, 3, 54321);
    CHECK(a.values != c.values);

    CHECK_THROWS_AS(sample_brownian(g, 0, 1), std::invalid_argument);
}

TEST_CASE("brownian terminal mean obeys the CLT bound") {
    const TimeGrid g = make_time_grid(1.0, 8);
    const std::size_t n_paths = 100000;
    const int dim = 2;
    std::vector<double> mean(dim, 0.0);
    for (std::size_t i = 0; i < n_paths; ++i) {
        const BrownianPath x = sample_brownian(g, dim, path_seed(777, i));
        for (int d = 0; d < dim; ++d) mean[static_cast<std::size_t>(d)] += x.value(g.n_steps, d);
    }
    const double bound = 3.0 * std::sqrt(g.horizon) / std::sqrt(static_cast<double>(n_paths));
    for (int d = 0; d < dim; ++d)
        CHECK(std::abs(mean[static_cast<std::size_t>(d)] / static_cast<double>(n_paths)) <= bound);
}

TEST_CASE("running max") {
    PathStat p;
    p.values = {1.0, 3.0, 2.0};
    CHECK(running_max(p).values == std::vector<double>{1.0, 3.0, 3.0});

    PathStat constant;
    constant.values = {2.0, 2.0, 2.0, 2.0};
    CHECK(running_max(constant).values == constant.values);

    PathStat increasing;
    increasing.values = {0.0, 0.5, 1.5, 4.0};
    CHECK(running_max(increasing).values == increasing.values);

    // nondecreasing and dominating, on an arbitrary path
    PathStat wiggly;
    wiggly.values = {0.3, -1.0, 2.0, 1.9, 2.5, 0.0};
    const PathStat m = running_max(wiggly);
    for (std::size_t j = 0; j < wiggly.values.size(); ++j) {
        CHECK(m.values[j] >= wiggly.values[j]);
        if (j > 0) CHECK(m.values[j] >= m.values[j - 1]);
    }
}

TEST_CASE("first crossing index") {
    const std::vector<double> p = {2.0, 1.5, 0.9, 1.2};
    CHECK(first_crossing_index(p, 1.0, Crossing::at_or_below) == 2);
    CHECK(!first_crossing_index(p, 0.5, Crossing::at_or_below).has_value());
    const std::vector<double> touch = {2.0, 1.0, 2.0};
    CHECK(first_crossing_index(touch, 1.0, Crossing::at_or_below) == 1);
    CHECK(first_crossing_index(touch, 1.0, Crossing::below) == std::nullopt);
    CHECK(first_crossing_index(p, 1.9, Crossing::above) == 0);
    CHECK(first_crossing_index(p, 2.0, Crossing::at_or_above) == 0);
}

TEST_CASE("bridge crossing correction") {
    CHECK(bridge_crossing_correction(1.0, 1.2, 1.0, 0.01, 0.3) == 1.0);
    CHECK(bridge_crossing_correction(0.9, 1.2, 1.0, 0.01, 0.3) == 1.0);

    // both endpoints one sigma*sqrt(dt) above the barrier: exp(-2)
    const double dt = 0.004;
    const double vol = 0.25;
    const double gap = vol * std::sqrt(dt);
    CHECK(bridge_crossing_correction(gap, gap, 0.0, dt, vol) ==
          doctest::Approx(0.13533528323661270).epsilon(1e-12));

    // far from the barrier the correction vanishes
    CHECK(bridge_crossing_correction(2.0, 2.1, 0.0, dt, vol) < 1e-300);

    CHECK_THROWS_AS(bridge_crossing_correction(1.0, 1.0, 0.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(bridge_crossing_correction(1.0, 1.0, 0.0, 0.01, 0.0), std::invalid_argument);
}

namespace {

StepVectorPath constant_loading(const TimeGrid& g, std::vector<double> value) {
    StepVectorPath loading;
    loading.dim = static_cast<int>(value.size());
    loading.flat.resize(static_cast<std::size_t>(g.n_points()) * value.size());
    for (int j = 0; j < g.n_points(); ++j)
        for (std::size_t c = 0; c < value.size(); ++c)
            loading.row(j)[c] = value[c];
    return loading;
}

}  // namespace

TEST_CASE("discrete stochastic exponential: identity and closed form") {
    const TimeGrid g = make_time_grid(1.0, 64);
    const BrownianPath x = sample_brownian(g, 1, 99);

    const PathStat identity =
        discrete_stochastic_exponential(constant_loading(g, {0.0}), x);
    for (double v : identity.values) CHECK(v == 1.0);

    const double c = 0.7;
    const PathStat e = discrete_stochastic_exponential(constant_loading(g, {c}), x);
    for (int j = 0; j <= g.n_steps; ++j) {
        const double closed = std::exp(c * x.value(j, 0) - 0.5 * c * c * g.time(j));
        CHECK(e.values[static_cast<std::size_t>(j)] ==
              doctest::Approx(closed).epsilon(1e-12));
        CHECK(e.values[static_cast<std::size_t>(j)] > 0.0);
    }
}

TEST_CASE("discrete stochastic exponential is a martingale (Monte Carlo)") {
    const TimeGrid g = make_time_grid(1.0, 16);
    const std::vector<double> loading = {0.8, -0.5};
    const std::size_t n_paths = 100000;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        const BrownianPath x = sample_brownian(g, 2, path_seed(2024, i));
        const PathStat e = discrete_stochastic_exponential(constant_loading(g, loading), x);
        const double v = e.values.back();
        const double d = v - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (v - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(n_paths - 1) /
                                static_cast<double>(n_paths));
    CHECK(std::abs(mean - 1.0) <= 3.0 * se);
}

TEST_CASE("stochastic exponential freezes after its alive window") {
    const TimeGrid g = make_time_grid(1.0, 10);
    const BrownianPath x = sample_brownian(g, 1, 7);
    const PathStat e = discrete_stochastic_exponential(constant_loading(g, {1.0}), x, 4);
    for (int j = 4; j <= g.n_steps; ++j)
        CHECK(e.values[static_cast<std::size_t>(j)] == e.values[4]);
}

TEST_CASE("per-path seeds decorrelate") {
    CHECK(path_seed(1, 0) != path_seed(1, 1));
    CHECK(path_seed(1, 5) == path_seed(1, 5));
    CHECK(splitmix64(0) != splitmix64(1));
}
