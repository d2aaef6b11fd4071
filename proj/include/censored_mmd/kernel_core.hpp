#pragma once

// Gaussian kernel K(x, y) = exp(-(x - y)^2 / l^2) on [0, 1]^2 and the
// distribution-free kernel J between two censored points,
//
//   J((u,d),(u',d')) = \int\int K(x,y) (dx - dh_{u,d}(x)) (dy - dh_{u',d'}(y)),
//
// where h_{u,d} puts unit mass at u when d = 1 and spreads it uniformly over
// (u, 1) when d = 0. Expanding the product gives
//
//   J = A - B(u,d) - B(u',d') + C((u,d),(u',d'))
//
// with every term an average of K over a point, an interval or a rectangle.
// Those averages have closed forms through erf; for intervals much narrower
// than the length-scale the closed forms cancel catastrophically, so they are
// evaluated with a 10-point Gauss-Legendre rule instead (exact to rounding at
// that width, since K is entire).

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "censored_mmd/censored_data.hpp"
#include "censored_mmd/errors.hpp"
#include "censored_mmd/kernel_spec.hpp"

namespace censored_mmd {

inline double k_eval(double x, double y, const KernelSpec& k) noexcept {
  const double r = (x - y) / k.lengthscale();
  return std::exp(-r * r);
}

namespace detail {

// Widths below this multiple of the length-scale use Gauss-Legendre.
inline constexpr double kNarrowWidth = 0.25;

// Second antiderivative of exp(-t^2/l^2).
inline double second_antiderivative(double t, double l) noexcept {
  const double r = t / l;
  return 0.5 * std::sqrt(std::numbers::pi) * l * t * std::erf(r) + 0.5 * l * l * std::exp(-r * r);
}

template <class F>
double gauss_legendre_mean(F&& f, double a, double b) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const auto& nodes = Rule::abscissa();
  const auto& weights = Rule::weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == 0.0) {
      sum += weights[i] * f(mid);
    } else {
      sum += weights[i] * (f(mid - half * nodes[i]) + f(mid + half * nodes[i]));
    }
  }
  return 0.5 * sum;
}

inline bool is_narrow(double width, const KernelSpec& k) noexcept {
  return width < kNarrowWidth * k.lengthscale();
}

}  // namespace detail

/// Mean of K(x, .) over [a, b]; K(x, a) when a == b.
inline double line_mean(double a, double b, double x, const KernelSpec& k) {
  const double width = b - a;
  if (detail::is_narrow(width, k)) {
    return detail::gauss_legendre_mean([&](double y) { return k_eval(x, y, k); }, a, b);
  }
  const double l = k.lengthscale();
  const double integral =
      0.5 * std::sqrt(std::numbers::pi) * l * (std::erf((b - x) / l) + std::erf((x - a) / l));
  return integral / width;
}

/// Mean of K over [a, b] x [c, d].
inline double rect_mean(double a, double b, double c, double d, const KernelSpec& k) {
  const double wx = b - a;
  const double wy = d - c;
  if (detail::is_narrow(wx, k)) {
    return detail::gauss_legendre_mean([&](double x) { return line_mean(c, d, x, k); }, a, b);
  }
  if (detail::is_narrow(wy, k)) {
    return detail::gauss_legendre_mean([&](double y) { return line_mean(a, b, y, k); }, c, d);
  }
  const double l = k.lengthscale();
  using detail::second_antiderivative;
  const double integral = second_antiderivative(b - c, l) - second_antiderivative(a - c, l) -
                          second_antiderivative(b - d, l) + second_antiderivative(a - d, l);
  return integral / (wx * wy);
}

/// \int_a^b K(x, y) dy.
inline double line_integral(double a, double b, double x, const KernelSpec& k) {
  if (b < a) throw std::invalid_argument("line_integral: a > b");
  if (a == b) return 0.0;
  return (b - a) * line_mean(a, b, x, k);
}

/// \int_a^b \int_c^d K(x, y) dy dx.
inline double rect_integral(double a, double b, double c, double d, const KernelSpec& k) {
  if (b < a || d < c) throw std::invalid_argument("rect_integral: empty orientation");
  if (a == b || c == d) return 0.0;
  return (b - a) * (d - c) * rect_mean(a, b, c, d, k);
}

namespace detail {

inline void check_point(double u, bool delta) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw std::domain_error("J: u = " + std::to_string(u) + " is outside [0, 1]");
  }
  if (!delta && u > kMaxTransformed) {
    throw DegenerateCensoring("J: censored point at u = " + std::to_string(u) +
                              " leaves no room to spread its mass");
  }
}

/// A = \int\int K(x,y) dx dy over the unit square.
inline double uniform_term(const KernelSpec& k) { return rect_mean(0.0, 1.0, 0.0, 1.0, k); }

/// B(u, d) = \int\int K(x,y) dx dh_{u,d}(y).
inline double cross_term(const TransformedPoint& p, const KernelSpec& k) {
  return p.delta ? line_mean(0.0, 1.0, p.u, k) : rect_mean(0.0, 1.0, p.u, 1.0, k);
}

/// C = \int\int K(x,y) dh_{u,d}(x) dh_{u',d'}(y).
inline double pair_term(const TransformedPoint& a, const TransformedPoint& b, const KernelSpec& k) {
  if (a.delta && b.delta) return k_eval(a.u, b.u, k);
  if (a.delta) return line_mean(b.u, 1.0, a.u, k);
  if (b.delta) return line_mean(a.u, 1.0, b.u, k);
  return rect_mean(a.u, 1.0, b.u, 1.0, k);
}

inline bool canonical_before(const TransformedPoint& a, const TransformedPoint& b) noexcept {
  return a.u < b.u || (a.u == b.u && a.delta && !b.delta);
}

// Arguments are put in a fixed order first so that J(a, b) and J(b, a) run
// the identical sequence of floating-point operations.
inline double assemble_j(double uniform, TransformedPoint a, double cross_a, TransformedPoint b,
                         double cross_b, const KernelSpec& k) {
  if (canonical_before(b, a)) {
    std::swap(a, b);
    std::swap(cross_a, cross_b);
  }
  return uniform - cross_a - cross_b + pair_term(a, b, k);
}

}  // namespace detail

inline double j_eval(double u, bool delta, double u2, bool delta2, const KernelSpec& k) {
  detail::check_point(u, delta);
  detail::check_point(u2, delta2);
  const TransformedPoint a{u, delta};
  const TransformedPoint b{u2, delta2};
  return detail::assemble_j(detail::uniform_term(k), a, detail::cross_term(a, k), b,
                            detail::cross_term(b, k), k);
}

inline double j_eval(const TransformedPoint& a, const TransformedPoint& b, const KernelSpec& k) {
  return j_eval(a.u, a.delta, b.u, b.delta, k);
}

/// Symmetric n x n matrix of J values, stored row-major.
/// Neumaier compensated sum. Sums of J entries cancel heavily, so plain
/// accumulation loses several digits at n = 200.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    compensation_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

class JGram {
 public:
  JGram(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
    if (values_.size() != n_ * n_) {
      throw DimensionMismatch("JGram: expected " + std::to_string(n_ * n_) + " values, got " +
                              std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        if ((*this)(i, j) != (*this)(j, i)) throw std::invalid_argument("JGram: matrix is not symmetric");
      }
    }
  }

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }
  const double* row(std::size_t i) const noexcept { return values_.data() + i * n_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double trace() const noexcept {
    CompensatedSum t;
    for (std::size_t i = 0; i < n_; ++i) t.add((*this)(i, i));
    return t.value();
  }

 private:
  JGram(std::size_t n, std::vector<double> values, std::nullptr_t) : n_(n), values_(std::move(values)) {}
  friend JGram j_gram(const TransformedDataset&, const KernelSpec&);

  std::size_t n_;
  std::vector<double> values_;
};

/// J over every pair of the dataset; each unordered pair is evaluated once
/// and mirrored.
inline JGram j_gram(const TransformedDataset& data, const KernelSpec& k) {
  const std::size_t n = data.size();
  if (n < 2) throw std::invalid_argument("j_gram needs at least two points");
  std::vector<double> cross(n);
  for (std::size_t i = 0; i < n; ++i) {
    detail::check_point(data[i].u, data[i].delta);
    cross[i] = detail::cross_term(data[i], k);
  }
  const double uniform = detail::uniform_term(k);
  std::vector<double> values(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = detail::assemble_j(uniform, data[i], cross[i], data[j], cross[j], k);
      values[i * n + j] = v;
      values[j * n + i] = v;
    }
  }
  return JGram(n, std::move(values), nullptr);
}

}  // namespace censored_mmd
