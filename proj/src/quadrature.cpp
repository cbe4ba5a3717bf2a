#include "bikevhc/quadrature.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bikevhc {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, int n_start, int max_doublings) {
    if (!(b > a)) throw std::invalid_argument("adaptive_simpson: b must exceed a");

    int n = n_start;  // number of subintervals, kept even
    if (n % 2) ++n;
    std::vector<double> vals(static_cast<std::size_t>(n) + 1);
    const double len = b - a;
    for (int i = 0; i <= n; ++i) vals[i] = f(a + len * i / n);

    auto simpson = [&](const std::vector<double>& v, int m) {
        const double h = len / m;
        double s = v[0] + v[m];
        for (int i = 1; i < m; i += 2) s += 4.0 * v[i];
        for (int i = 2; i < m; i += 2) s += 2.0 * v[i];
        return s * h / 3.0;
    };

    double prev = simpson(vals, n);
    for (int d = 0; d < max_doublings; ++d) {
        std::vector<double> next(static_cast<std::size_t>(2 * n) + 1);
        for (int i = 0; i <= n; ++i) next[2 * i] = vals[i];
        for (int i = 0; i < n; ++i) next[2 * i + 1] = f(a + len * (2 * i + 1) / (2 * n));
        n *= 2;
        vals = std::move(next);
        const double cur = simpson(vals, n);
        if (std::abs(cur - prev) <= rel_tol * std::max(std::abs(cur), 1e-30) + 1e-300)
            return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace bikevhc
