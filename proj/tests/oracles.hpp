#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls the closed-form kernel integrals of the library.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

namespace detail {

// Bisection on the GK31 error estimate. The absolute floor stops refinement
// of pieces whose mass is already below round-off of the total.
inline double adaptive_gk(const std::function<double(double)>& f, double a, double b, int depth) {
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &error);
  // Boost reports the error on the reference interval [-1, 1].
  error *= 0.5 * (b - a);
  if (error <= std::max(1e-16, 1e-12 * std::abs(value)) || depth == 0) return value;
  const double mid = 0.5 * (a + b);
  return adaptive_gk(f, a, mid, depth - 1) + adaptive_gk(f, mid, b, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return detail::adaptive_gk(f, a, b, 15);
}

/// Integrates f over [a, b] split at every interior breakpoint.
inline double integrate_split(const std::function<double(double)>& f, double a, double b,
                              std::vector<double> breaks) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = std::clamp(breaks[i], a, b);
    const double hi = std::clamp(breaks[i + 1], a, b);
    total += integrate(f, lo, hi);
  }
  return total;
}

inline double gauss(double x, double y, double l) { return std::exp(-(x - y) * (x - y) / (l * l)); }

inline double line(double a, double b, double x, double l) {
  return integrate_split([&](double y) { return gauss(x, y, l); }, a, b, {x});
}

inline double rect(double a, double b, double c, double d, double l) {
  return integrate([&](double x) { return line(c, d, x, l); }, a, b);
}

/// J as the double integral of K against (Lebesgue - h_{u,delta}) in each
/// argument: absolutely continuous part g plus an atom of mass -delta at u.
inline double j_kernel(double u, bool delta, double v, bool eps, double l) {
  auto density = [](double x, double at, bool event) {
    if (!event && x > at) return 1.0 - 1.0 / (1.0 - at);
    return 1.0;
  };
  const std::vector<double> breaks{u, v};
  auto inner = [&](double x) {
    return integrate_split([&](double y) { return gauss(x, y, l) * density(y, v, eps); }, 0.0, 1.0, breaks);
  };
  double total = integrate_split([&](double x) { return density(x, u, delta) * inner(x); }, 0.0, 1.0, breaks);
  if (eps) total -= integrate_split([&](double x) { return density(x, u, delta) * gauss(x, v, l); }, 0.0, 1.0, breaks);
  if (delta) total -= integrate_split([&](double y) { return density(y, v, eps) * gauss(u, y, l); }, 0.0, 1.0, breaks);
  if (delta && eps) total += gauss(u, v, l);
  return total;
}

struct TimedEvent {
  double time;
  bool event;
};

/// Product-limit F(x) = 1 - prod_{t_i <= x, event} (1 - d_i / Y_i), by direct
/// enumeration of distinct event times.
inline double product_limit_cdf(const std::vector<TimedEvent>& data, double x) {
  std::vector<double> times;
  for (const auto& o : data) {
    if (o.event && o.time <= x) times.push_back(o.time);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  double survival = 1.0;
  for (double t : times) {
    double at_risk = 0.0;
    double deaths = 0.0;
    for (const auto& o : data) {
      if (o.time >= t) at_risk += 1.0;
      if (o.time == t && o.event) deaths += 1.0;
    }
    survival *= 1.0 - deaths / at_risk;
  }
  return 1.0 - survival;
}

/// Joint law of (U, Delta) for X ~ Exp(1), C ~ Exp(gamma), U = 1 - exp(-T).
inline double null_joint_event(double u, double gamma) {
  return (1.0 - std::pow(1.0 - u, 1.0 + gamma)) / (1.0 + gamma);
}

inline double null_joint_censored(double u, double gamma) {
  return gamma / (1.0 + gamma) * (1.0 - std::pow(1.0 - u, 1.0 + gamma));
}

/// Asymptotic 99% Kolmogorov-Smirnov band half-width for n draws.
inline double ks_band_99(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

/// Sup over the sample of |empirical - model| for a sub-distribution: the
/// empirical process counts points with u_i <= x and flag set.
template <class Model>
inline double sup_distance(std::vector<double> values, std::size_t total, Model model) {
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(total);
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = model(values[i]);
    worst = std::max(worst, std::abs(static_cast<double>(i + 1) / n - f));
    worst = std::max(worst, std::abs(static_cast<double>(i) / n - f));
  }
  return std::max(worst, std::abs(static_cast<double>(values.size()) / n - model(1.0)));
}

}  // namespace oracle
