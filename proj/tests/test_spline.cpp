#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "bikevhc/spline.hpp"

using bikevhc::PeriodicCubicSpline;

namespace {

PeriodicCubicSpline fit(const std::function<double(double)>& f, int n, double T) {
    std::vector<double> knots(n), vals(n);
    for (int i = 0; i < n; ++i) {
        knots[i] = T * i / n;
        vals[i] = f(knots[i]);
    }
    return PeriodicCubicSpline(knots, vals, T);
}

}  // namespace

TEST_CASE("periodic spline interpolates knots exactly") {
    auto f = [](double t) { return std::sin(t) + 0.3 * std::cos(3 * t); };
    const auto sp = fit(f, 64, 2 * M_PI);
    for (double k : sp.knots()) CHECK(sp.value(k) == doctest::Approx(f(k)).epsilon(1e-14));
}

TEST_CASE("periodic spline approximates a smooth signal and its derivatives") {
    auto f = [](double t) { return std::sin(t); };
    const auto sp = fit(f, 256, 2 * M_PI);
    for (double t = -7.0; t < 14.0; t += 0.0371) {
        CHECK(sp.value(t) == doctest::Approx(std::sin(t)).epsilon(1e-9));
        CHECK(sp.deriv(t) == doctest::Approx(std::cos(t)).epsilon(1e-6));
        CHECK(sp.deriv2(t) == doctest::Approx(-std::sin(t)).scale(1.0).epsilon(1e-4));
    }
}

TEST_CASE("periodic spline wraps seamlessly across the seam") {
    auto f = [](double t) { return std::cos(2 * t) + std::sin(t); };
    const auto sp = fit(f, 128, 2 * M_PI);
    const double eps = 1e-9;
    CHECK(sp.value(2 * M_PI - eps) == doctest::Approx(sp.value(-eps)).epsilon(1e-12));
    CHECK(sp.deriv(2 * M_PI - eps) == doctest::Approx(sp.deriv(-eps)).epsilon(1e-9));
    CHECK(sp.value(0.5 + 4 * M_PI) == doctest::Approx(sp.value(0.5)).epsilon(1e-13));
}

TEST_CASE("periodic spline convergence is fourth order") {
    auto f = [](double t) { return std::sin(t) * std::exp(std::cos(t)); };
    auto max_err = [&](int n) {
        const auto sp = fit(f, n, 2 * M_PI);
        double e = 0.0;
        for (double t = 0.0; t < 2 * M_PI; t += 0.013)
            e = std::max(e, std::abs(sp.value(t) - f(t)));
        return e;
    };
    const double e1 = max_err(64);
    const double e2 = max_err(128);
    const double order = std::log2(e1 / e2);
    CHECK(order > 3.5);
    CHECK(order < 4.5);
}

TEST_CASE("periodic spline rejects malformed input") {
    CHECK_THROWS(PeriodicCubicSpline({0.0, 1.0}, {1.0, 2.0}, 3.0));
    CHECK_THROWS(PeriodicCubicSpline({0.0, 2.0, 1.0}, {1.0, 2.0, 3.0}, 3.0));
    CHECK_THROWS(PeriodicCubicSpline({0.0, 1.0, 2.0}, {1.0, 2.0, 3.0}, 1.5));
}
