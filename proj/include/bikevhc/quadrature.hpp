#pragma once

#include <functional>

namespace bikevhc {

/// Composite Simpson quadrature of f over [a, b] with interval doubling until
/// two successive estimates agree to rel_tol (with a small absolute floor).
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-9, int n_start = 16, int max_doublings = 22);

}  // namespace bikevhc
