#pragma once

#include <cmath>

#include "momentum/sampler.hpp"

namespace momentum::test {

inline sampler::Target standard_normal(std::size_t dim) {
  sampler::Target t;
  t.dim = dim;
  t.log_density = [](std::span<const double> q, std::span<double> g) {
    double lp = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      lp -= 0.5 * q[i] * q[i];
      g[i] = -q[i];
    }
    return lp;
  };
  return t;
}

/// Unit-variance bivariate normal with correlation rho.
inline sampler::Target correlated_normal(double rho) {
  sampler::Target t;
  t.dim = 2;
  t.names = {"x", "y"};
  t.log_density = [rho](std::span<const double> q, std::span<double> g) {
    const double c = 1.0 / (1.0 - rho * rho);
    g[0] = -c * (q[0] - rho * q[1]);
    g[1] = -c * (q[1] - rho * q[0]);
    return -0.5 * c * (q[0] * q[0] - 2.0 * rho * q[0] * q[1] + q[1] * q[1]);
  };
  return t;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic against N(0, 1).
inline double ks_statistic_normal(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = 0.5 * std::erfc(-v[i] / std::sqrt(2.0));
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

/// Asymptotic critical value of the Kolmogorov distribution at alpha = 0.01.
inline constexpr double kKsCritical01 = 1.6276;

}  // namespace momentum::test
