#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "earth/spline.hpp"
#include "oracles.hpp"

using namespace earth;

namespace {

// Direct 3-knot natural-spline oracle: with unit spacing the single interior
// equation is M1*(2/3) = (y2-y1) - (y1-y0), so M1 is available in closed form.
double three_knot_m1(double y0, double y1, double y2)
{
    return ((y2 - y1) - (y1 - y0)) * 3.0 / 2.0;
}

ControlPath fit1(const std::vector<double>& t, const std::vector<double>& y)
{
    std::vector<std::vector<double>> obs;
    for (double v : y)
        obs.push_back({v});
    return ControlPath::fit(t, obs);
}

}  // namespace

TEST_CASE("spline reproduces linear data exactly")
{
    ControlPath p = fit1({0, 1, 2}, {0, 1, 2});
    CHECK(p.evaluate(0.5)[1] == doctest::Approx(0.5).epsilon(1e-12));
    for (double t : {0.1, 0.7, 1.3, 1.9})
        CHECK(p.derivative(t)[1] == doctest::Approx(1.0).epsilon(1e-12));

    ControlPath q = fit1({0, 1, 2, 3}, {0, 3, 6, 9});
    for (double t : {0.4, 1.5, 2.7})
        CHECK(q.derivative(t)[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("tent case: interior second derivative and midpoint value")
{
    // tridiagonal oracle: M1 = -3 for knots (0,0),(1,1),(2,0)
    CHECK(three_knot_m1(0, 1, 0) == doctest::Approx(-3.0));

    ControlPath p = fit1({0, 1, 2}, {0, 1, 0});
    CHECK(p.evaluate(0.5)[1] == doctest::Approx(0.6875).epsilon(1e-12));

    // apex: left/right derivative agree and vanish by symmetry
    const double dl = p.derivative(1.0 - 1e-12)[1];
    const double dr = p.derivative(1.0 + 1e-12)[1];
    CHECK(std::fabs(dl - dr) < 1e-9);
    CHECK(std::fabs(p.derivative(1.0)[1]) < 1e-12);
}

TEST_CASE("time channel is the identity")
{
    ControlPath p = fit1({0, 1, 2}, {5, -1, 2});
    for (double t : {0.0, 0.25, 1.0, 1.75, 2.0}) {
        CHECK(p.evaluate(t)[0] == t);
        CHECK(p.derivative(t)[0] == 1.0);
    }
}

TEST_CASE("interpolation exact at knots; C1/C2 continuity inside")
{
    std::mt19937_64 rng(31);
    std::vector<double> t{0, 1, 2.5, 3, 4.25, 5, 6};
    auto y = oracles::random_values(rng, (long)t.size(), -3.0, 3.0);
    ControlPath p = fit1(t, y);

    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(std::fabs(p.evaluate(t[i])[1] - y[i]) < 1e-10);

    // The derivative is quadratic per segment, so one-sided limits at a knot
    // can be taken with quadratic-exact finite-difference stencils.
    const double h = 1e-5;
    auto deriv = [&](double x) { return p.derivative(x)[1]; };
    auto left_deriv_limit = [&](double x) {
        return 3 * deriv(x - h) - 3 * deriv(x - 2 * h) + deriv(x - 3 * h);
    };
    auto left_second = [&](double x) {
        return (3 * deriv(x) - 4 * deriv(x - h) + deriv(x - 2 * h)) / (2 * h);
    };
    auto right_second = [&](double x) {
        return -(3 * deriv(x) - 4 * deriv(x + h) + deriv(x + 2 * h)) / (2 * h);
    };

    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        CHECK(std::fabs(left_deriv_limit(t[i]) - deriv(t[i])) < 1e-6);  // C1
        CHECK(std::fabs(left_second(t[i]) - right_second(t[i])) < 1e-6);  // C2
    }

    // natural boundary: second derivative vanishes at both ends
    CHECK(std::fabs(right_second(t.front())) < 1e-6);
    CHECK(std::fabs(left_second(t.back())) < 1e-6);
}

TEST_CASE("derivative matches finite differences of evaluate")
{
    std::mt19937_64 rng(77);
    std::vector<double> t{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    auto y = oracles::random_values(rng, (long)t.size(), -2.0, 2.0);
    ControlPath p = fit1(t, y);

    std::uniform_real_distribution<double> dist(t.front() + 0.01, t.back() - 0.01);
    const double h = 1e-6;
    for (int i = 0; i < 100; ++i) {
        const double x  = dist(rng);
        const double fd = (p.evaluate(x + h)[1] - p.evaluate(x - h)[1]) / (2 * h);
        CHECK(std::fabs(p.derivative(x)[1] - fd) < 1e-6);
    }
}

TEST_CASE("fit rejects bad input")
{
    CHECK_THROWS_AS(fit1({0}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(fit1({0, 0, 1}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(fit1({1, 0}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(fit1({0, 1}, {1, std::nan("")}), std::invalid_argument);
}

TEST_CASE("no extrapolation outside knot range")
{
    ControlPath p = fit1({0, 1, 2}, {0, 1, 0});
    CHECK_THROWS_AS(p.evaluate(-0.5), std::domain_error);
    CHECK_THROWS_AS(p.derivative(2.5), std::domain_error);
}

TEST_CASE("drop_observations")
{
    std::vector<double> t(22);
    for (int i = 0; i < 22; ++i)
        t[i] = i;
    std::vector<std::vector<double>> obs(3, std::vector<double>(22));
    std::mt19937_64 rng(5);
    for (auto& row : obs)
        row = oracles::random_values(rng, 22);

    SUBCASE("rate 0 is the identity")
    {
        auto thin = drop_observations(t, obs, 0.0, 123);
        CHECK(thin.times == t);
        CHECK(thin.observations == obs);
    }

    SUBCASE("rate 0.4 on 20 interior knots removes exactly 8")
    {
        auto thin = drop_observations(t, obs, 0.4, 123);
        CHECK(thin.times.size() == 22 - 8);
        CHECK(thin.observations[0].size() == 22 - 8);
    }

    SUBCASE("endpoints survive for any seed")
    {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            auto thin = drop_observations(t, obs, 0.9, seed);
            CHECK(thin.times.front() == t.front());
            CHECK(thin.times.back() == t.back());
            CHECK(thin.times.size() >= 2);
        }
    }

    SUBCASE("refit after rate-0 drop gives identical spline values")
    {
        auto thin = drop_observations(t, obs, 0.0, 9);
        std::vector<std::vector<double>> knotobs_a, knotobs_b;
        for (std::size_t i = 0; i < t.size(); ++i) {
            knotobs_a.push_back({obs[0][i]});
            knotobs_b.push_back({thin.observations[0][i]});
        }
        ControlPath a = ControlPath::fit(t, knotobs_a);
        ControlPath b = ControlPath::fit(thin.times, knotobs_b);
        for (double x : {0.3, 5.5, 11.0, 20.9})
            CHECK(a.evaluate(x)[1] == b.evaluate(x)[1]);
    }

    SUBCASE("invalid rate")
    {
        CHECK_THROWS_AS(drop_observations(t, obs, 1.0, 1), std::invalid_argument);
        CHECK_THROWS_AS(drop_observations(t, obs, -0.1, 1), std::invalid_argument);
    }
}
