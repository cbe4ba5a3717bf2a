#include "bikevhc/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bikevhc {

namespace {

// Thomas solve of a strictly tridiagonal system; diagonals are copied so the
// caller's arrays stay intact.
std::vector<double> solve_tridiagonal(std::vector<double> sub, std::vector<double> diag,
                                      std::vector<double> sup, std::vector<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
    return x;
}

}  // namespace

PeriodicCubicSpline::PeriodicCubicSpline(std::vector<double> knots, std::vector<double> values,
                                         double period)
    : knots_(std::move(knots)), values_(std::move(values)), period_(period) {
    const std::size_t n = knots_.size();
    if (n < 3) throw std::invalid_argument("PeriodicCubicSpline: need at least 3 knots");
    if (values_.size() != n)
        throw std::invalid_argument("PeriodicCubicSpline: knots/values size mismatch");
    if (!(period_ > 0.0)) throw std::invalid_argument("PeriodicCubicSpline: period must be > 0");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(knots_[i] < knots_[i + 1]))
            throw std::invalid_argument("PeriodicCubicSpline: knots must be strictly ascending");
    if (!(knots_.back() - knots_.front() < period_))
        throw std::invalid_argument("PeriodicCubicSpline: knots must span less than one period");

    // Interval widths, with the wrap interval closing the period.
    std::vector<double> h(n);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = knots_[i + 1] - knots_[i];
    h[n - 1] = knots_[0] + period_ - knots_[n - 1];

    auto yv = [&](std::size_t i) { return values_[i % n]; };
    std::vector<double> sub(n), diag(n), sup(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hm = h[(i + n - 1) % n];
        const double hi = h[i];
        sub[i] = hm / 6.0;
        diag[i] = (hm + hi) / 3.0;
        sup[i] = hi / 6.0;
        rhs[i] = (yv(i + 1) - yv(i)) / hi - (yv(i) - yv(i + n - 1)) / hm;
    }

    // Cyclic closure via Sherman-Morrison: A = T + u v^T with the corner
    // couplings A[0][n-1] = sub[0] and A[n-1][0] = sup[n-1].
    const double cu = sub[0];
    const double cl = sup[n - 1];
    const double gamma = -diag[0];
    std::vector<double> diag_mod = diag;
    diag_mod[0] -= gamma;
    diag_mod[n - 1] -= cl * cu / gamma;

    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = cl;

    std::vector<double> y = solve_tridiagonal(sub, diag_mod, sup, rhs);
    std::vector<double> z = solve_tridiagonal(sub, diag_mod, sup, u);

    const double vy = y[0] + (cu / gamma) * y[n - 1];
    const double vz = z[0] + (cu / gamma) * z[n - 1];
    const double factor = vy / (1.0 + vz);

    moments_.resize(n);
    for (std::size_t i = 0; i < n; ++i) moments_[i] = y[i] - factor * z[i];
}

void PeriodicCubicSpline::locate(double t, std::size_t& i, double& u, double& h) const {
    const std::size_t n = knots_.size();
    const double t0 = knots_.front();
    double w = std::fmod(t - t0, period_);
    if (w < 0.0) w += period_;
    w += t0;  // wrapped into [t0, t0 + period)

    auto it = std::upper_bound(knots_.begin(), knots_.end(), w);
    i = static_cast<std::size_t>(it - knots_.begin());
    i = (i == 0) ? n - 1 : i - 1;  // i == 0 only from rounding at the seam
    h = (i + 1 < n) ? knots_[i + 1] - knots_[i] : knots_[0] + period_ - knots_[n - 1];
    u = w - knots_[i];
}

double PeriodicCubicSpline::value(double t) const {
    std::size_t i;
    double u, h;
    locate(t, i, u, h);
    const std::size_t n = knots_.size();
    const std::size_t j = (i + 1) % n;
    const double d = h - u;
    return moments_[i] * d * d * d / (6.0 * h) + moments_[j] * u * u * u / (6.0 * h) +
           (values_[i] / h - moments_[i] * h / 6.0) * d +
           (values_[j] / h - moments_[j] * h / 6.0) * u;
}

double PeriodicCubicSpline::deriv(double t) const {
    std::size_t i;
    double u, h;
    locate(t, i, u, h);
    const std::size_t n = knots_.size();
    const std::size_t j = (i + 1) % n;
    const double d = h - u;
    return -moments_[i] * d * d / (2.0 * h) + moments_[j] * u * u / (2.0 * h) +
           (values_[j] - values_[i]) / h - (moments_[j] - moments_[i]) * h / 6.0;
}

double PeriodicCubicSpline::deriv2(double t) const {
    std::size_t i;
    double u, h;
    locate(t, i, u, h);
    const std::size_t n = knots_.size();
    const std::size_t j = (i + 1) % n;
    return moments_[i] * (h - u) / h + moments_[j] * u / h;
}

}  // namespace bikevhc
