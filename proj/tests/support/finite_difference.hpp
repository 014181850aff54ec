#pragma once

// Test-only oracles: central finite differences over flattened parameters.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "etank/neural.hpp"

namespace etank::testing {

// d f / d theta_i by central differences, where f reads `net` after each
// perturbation. The network's version is bumped so stale caches are rejected.
inline std::vector<double> numeric_gradient(NetworkParams& net, const std::function<double()>& f,
                                            double h = 1e-5) {
  std::vector<double> theta = flatten(net.layers);
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + h;
    unflatten(net.layers, theta);
    ++net.version;
    const double up = f();
    theta[i] = orig - h;
    unflatten(net.layers, theta);
    ++net.version;
    const double down = f();
    theta[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  unflatten(net.layers, theta);
  ++net.version;
  return grad;
}

inline double numeric_derivative(const std::function<double(double)>& f, double x,
                                 double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Largest per-entry relative error, with an absolute floor for entries whose
// true value is ~0 (finite differences then only carry rounding noise).
inline double max_relative_error(const std::vector<double>& analytic,
                                 const std::vector<double>& numeric, double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double diff = std::abs(analytic[i] - numeric[i]);
    if (diff <= floor) continue;
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    worst = std::max(worst, diff / scale);
  }
  return worst;
}

}  // namespace etank::testing
