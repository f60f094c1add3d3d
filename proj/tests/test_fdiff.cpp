#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vortexjet/fdiff.hpp"

using namespace vortexjet;

TEST_CASE("fornberg weights reproduce classic stencils") {
    // Central 3-point second derivative on a uniform grid.
    const auto w = fornberg_weights(0.0, {-1.0, 0.0, 1.0}, 2);
    CHECK(w[2][0] == doctest::Approx(1.0));
    CHECK(w[2][1] == doctest::Approx(-2.0));
    CHECK(w[2][2] == doctest::Approx(1.0));
    // One-sided first derivative, 2nd order: (-3/2, 2, -1/2).
    const auto w2 = fornberg_weights(0.0, {0.0, 1.0, 2.0}, 1);
    CHECK(w2[1][0] == doctest::Approx(-1.5));
    CHECK(w2[1][1] == doctest::Approx(2.0));
    CHECK(w2[1][2] == doctest::Approx(-0.5));
}

TEST_CASE("one-sided derivative with Richardson on a geometric grid") {
    auto ts = geometric_grid(1e-4, 1e-1, 12);
    ts.insert(ts.begin(), 0.0);
    auto f = [](double t) { return std::sin(2.5 * t) + 0.3 * std::exp(t); };
    std::vector<double> fs;
    for (double t : ts) fs.push_back(f(t));
    const auto d1 = deriv_at_zero(ts, fs, 1, 4, 3);
    CHECK(std::abs(d1.value - (2.5 + 0.3)) < 1e-7);
    CHECK(d1.uncertainty < 1e-5);
}

TEST_CASE("derivative estimates survive measurement-scale noise") {
    auto ts = geometric_grid(1e-4, 1e-1, 12);
    ts.insert(ts.begin(), 0.0);
    auto g = testutil::rng(3);
    auto f = [](double t) { return 2.0 * t - 0.7 * t * t + 0.05 * t * t * t; };
    std::vector<double> fs;
    for (double t : ts) fs.push_back(f(t) + testutil::uniform(g, -1e-11, 1e-11));
    const auto d1 = deriv_at_zero(ts, fs, 1, 4, 3);
    CHECK(std::abs(d1.value - 2.0) < 1e-6);
}

TEST_CASE("polynomial fit differentiates exactly through its degree") {
    auto ts = geometric_grid(1e-4, 1e-1, 13);
    ts.insert(ts.begin(), 0.0);
    auto f = [](double t) { return 1.0 + t - 2.0 * t * t + 3.0 * t * t * t - 0.5 * t * t * t * t; };
    std::vector<double> fs;
    for (double t : ts) fs.push_back(f(t));
    const PolyFit fit(ts, fs, 6);
    CHECK(fit.deriv_at_zero(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.deriv_at_zero(1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.deriv_at_zero(2) == doctest::Approx(-4.0).epsilon(1e-8));
    CHECK(fit.deriv_at_zero(3) == doctest::Approx(18.0).epsilon(1e-7));
    CHECK(fit.deriv_at_zero(4) == doctest::Approx(-12.0).epsilon(1e-6));
    // Node-interior derivatives too.
    CHECK(fit.deriv(0.05, 1) ==
          doctest::Approx(1.0 - 4.0 * 0.05 + 9.0 * 0.0025 - 2.0 * 0.000125).epsilon(1e-8));
}

TEST_CASE("fit derivative of a smooth non-polynomial with uncertainty") {
    auto ts = geometric_grid(1e-4, 1e-1, 13);
    ts.insert(ts.begin(), 0.0);
    auto f = [](double t) { return std::exp(1.7 * t); };
    std::vector<double> fs;
    for (double t : ts) fs.push_back(f(t));
    const auto d3 = fit_deriv_at_zero(ts, fs, 3, 7);
    const double truth = 1.7 * 1.7 * 1.7;
    CHECK(std::abs(d3.value - truth) < 5e-3 * truth);
    CHECK(d3.uncertainty < 0.05 * truth);
}

TEST_CASE("geometric grid endpoints") {
    const auto ts = geometric_grid(1e-4, 1e-1, 12);
    CHECK(ts.size() == 12);
    CHECK(ts.front() == doctest::Approx(1e-4));
    CHECK(ts.back() == doctest::Approx(1e-1));
}
