#pragma once

// Hazard families used in the experiments, inverse-cumulative-hazard
// sampling, and exponential censoring calibrated to a target fraction.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "censored_mmd/censored_data.hpp"
#include "censored_mmd/errors.hpp"
#include "censored_mmd/rng.hpp"

namespace censored_mmd {

/// lambda(t) = rate.
struct ConstantHazard {
  double rate = 1.0;
  friend bool operator==(const ConstantHazard&, const ConstantHazard&) = default;
};

/// lambda(t) = 1 - amplitude * cos(frequency * pi * t).
struct PeriodicHazard {
  double frequency = 1.0;
  double amplitude = 1.0;
  friend bool operator==(const PeriodicHazard&, const PeriodicHazard&) = default;
};

/// lambda(t) = shape/scale * (t/scale)^(shape-1).
struct WeibullHazard {
  double shape = 1.0;
  double scale = 1.0;
  friend bool operator==(const WeibullHazard&, const WeibullHazard&) = default;
};

using HazardModel = std::variant<ConstantHazard, PeriodicHazard, WeibullHazard>;

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

inline void validate(const HazardModel& model) {
  std::visit(overloaded{
                 [](const ConstantHazard& m) {
                   if (!(m.rate > 0.0) || !std::isfinite(m.rate)) {
                     throw std::invalid_argument("constant hazard: rate must be positive");
                   }
                 },
                 [](const PeriodicHazard& m) {
                   if (!(m.frequency > 0.0) || !std::isfinite(m.frequency)) {
                     throw std::invalid_argument("periodic hazard: frequency must be positive");
                   }
                   if (!(m.amplitude >= 0.0 && m.amplitude <= 1.0)) {
                     throw std::invalid_argument("periodic hazard: amplitude must lie in [0, 1]");
                   }
                 },
                 [](const WeibullHazard& m) {
                   if (!(m.shape > 0.0) || !(m.scale > 0.0) || !std::isfinite(m.shape) ||
                       !std::isfinite(m.scale)) {
                     throw std::invalid_argument("weibull hazard: shape and scale must be positive");
                   }
                 },
             },
             model);
}

inline double hazard(const HazardModel& model, double t) {
  return std::visit(overloaded{
                        [](const ConstantHazard& m) { return m.rate; },
                        [t](const PeriodicHazard& m) {
                          return 1.0 - m.amplitude * std::cos(m.frequency * std::numbers::pi * t);
                        },
                        [t](const WeibullHazard& m) {
                          return m.shape / m.scale * std::pow(t / m.scale, m.shape - 1.0);
                        },
                    },
                    model);
}

inline double cumulative_hazard(const HazardModel& model, double t) {
  if (t < 0.0) throw std::invalid_argument("cumulative_hazard: t must be nonnegative");
  return std::visit(overloaded{
                        [t](const ConstantHazard& m) { return m.rate * t; },
                        [t](const PeriodicHazard& m) {
                          const double w = m.frequency * std::numbers::pi;
                          return t - m.amplitude * std::sin(w * t) / w;
                        },
                        [t](const WeibullHazard& m) { return std::pow(t / m.scale, m.shape); },
                    },
                    model);
}

inline double survival_function(const HazardModel& model, double t) {
  return std::exp(-cumulative_hazard(model, t));
}

namespace detail {

// Safeguarded Newton on Lambda(t) = target, falling back to bisection when
// the step leaves the bracket.
inline double invert_periodic(const PeriodicHazard& m, double target) {
  const HazardModel model = m;
  auto f = [&](double t) { return cumulative_hazard(model, t) - target; };
  double lo = target / 2.0;
  double hi = 2.0 * target + 2.0;
  for (int i = 0; f(lo) > 0.0; ++i) {
    if (i > 64) {
      lo = 0.0;
      break;
    }
    lo /= 2.0;
  }
  for (int i = 0; f(hi) < 0.0; ++i) {
    if (i > 64) throw RootNotBracketed("periodic inversion: no upper bracket");
    hi *= 2.0;
  }
  constexpr double tolerance = 1e-10;
  double t = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double value = f(t);
    if (value == 0.0) return t;
    if (value < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    const double slope = hazard(model, t);
    double next = 0.5 * (lo + hi);
    if (slope > 0.0) {
      const double newton = t - value / slope;
      if (newton > lo && newton < hi) next = newton;
    }
    if (std::abs(next - t) < tolerance || hi - lo < tolerance) return next;
    t = next;
  }
  throw RootNotBracketed("periodic inversion did not converge");
}

}  // namespace detail

inline double inverse_cumulative_hazard(const HazardModel& model, double e) {
  if (!(e >= 0.0)) throw std::invalid_argument("inverse_cumulative_hazard: target must be nonnegative");
  if (e == 0.0) return 0.0;
  return std::visit(overloaded{
                        [e](const ConstantHazard& m) { return e / m.rate; },
                        [e](const PeriodicHazard& m) { return detail::invert_periodic(m, e); },
                        [e](const WeibullHazard& m) { return m.scale * std::pow(e, 1.0 / m.shape); },
                    },
                    model);
}

/// Lambda^{-1}(E) for E ~ Exp(1).
inline double sample_survival(const HazardModel& model, RandomStream& stream) {
  return inverse_cumulative_hazard(model, stream.exponential());
}

// ---------------------------------------------------------------------------
// Censoring

/// C ~ Exp(gamma).
struct CensoringRate {
  double gamma = 1.0;
  friend bool operator==(const CensoringRate&, const CensoringRate&) = default;
};

/// gamma chosen so that P(Delta = 0) = fraction.
struct CensoringFraction {
  double fraction = 0.3;
  friend bool operator==(const CensoringFraction&, const CensoringFraction&) = default;
};

using CensoringSpec = std::variant<CensoringRate, CensoringFraction>;

/// P(C < X) = \int_0^inf S_X(t) gamma e^{-gamma t} dt, truncated where the
/// remaining mass (at most S_X(T) e^{-gamma T}) drops below 1e-10.
inline double censored_fraction(const HazardModel& model, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("censored_fraction: gamma must be positive");
  const double tail = -std::log(1e-10);
  double horizon = 1e-9;
  while (cumulative_hazard(model, horizon) + gamma * horizon < tail) horizon *= 2.0;
  auto integrand = [&](double t) { return survival_function(model, t) * gamma * std::exp(-gamma * t); };
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  // Absolute-error bisection: the relative criterion of the adaptive rule
  // keeps refining pieces that carry negligible mass.
  auto adaptive = [&](auto& self, double a, double b, double tol, int depth) -> double {
    double error = 0.0;
    const double value = Rule::integrate(integrand, a, b, 0, 0.0, &error);
    error *= 0.5 * (b - a);  // reported on the reference interval [-1, 1]
    // Floor at the round-off level of the piece itself.
    if (error <= std::max(tol, 1e-12 * std::abs(value)) || depth == 0) return value;
    const double mid = 0.5 * (a + b);
    return self(self, a, mid, 0.5 * tol, depth - 1) + self(self, mid, b, 0.5 * tol, depth - 1);
  };
  // Fixed subintervals so no mass concentrated near zero is missed when the
  // horizon is long.
  double total = 0.0;
  double start = 0.0;
  const double piece = horizon / 64.0;
  while (start < horizon) {
    const double stop = std::min(horizon, start + piece);
    total += adaptive(adaptive, start, stop, 1e-13, 12);
    start = stop;
  }
  return total;
}

/// Bisection on log(gamma) over [1e-6, 1e6].
inline double calibrate_censoring(const HazardModel& model, double target) {
  if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("calibrate_censoring: target must be in (0, 1)");
  validate(model);
  double lo = std::log(1e-6);
  double hi = std::log(1e6);
  const double f_lo = censored_fraction(model, std::exp(lo)) - target;
  const double f_hi = censored_fraction(model, std::exp(hi)) - target;
  if (f_lo > 0.0 || f_hi < 0.0) {
    throw NoSolution("calibrate_censoring: target " + std::to_string(target) +
                     " is not reachable with gamma in [1e-6, 1e6]");
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-14; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (censored_fraction(model, std::exp(mid)) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double gamma = std::exp(0.5 * (lo + hi));
  if (std::abs(censored_fraction(model, gamma) - target) > 1e-6) {
    throw NoSolution("calibrate_censoring: bisection did not reach the target");
  }
  return gamma;
}

inline double resolve_censoring_rate(const HazardModel& model, const CensoringSpec& spec) {
  return std::visit(overloaded{
                        [](const CensoringRate& c) {
                          if (!(c.gamma > 0.0)) throw std::invalid_argument("censoring rate must be positive");
                          return c.gamma;
                        },
                        [&](const CensoringFraction& c) { return calibrate_censoring(model, c.fraction); },
                    },
                    spec);
}

/// n pairs (min(X, C), [X <= C]) with C ~ Exp(gamma). X is drawn before C
/// for each observation.
inline Dataset sample_dataset(const HazardModel& model, double gamma, std::size_t n, RandomStream& stream) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be at least 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("sample_dataset: gamma must be positive");
  std::vector<CensoredObservation> out(n);
  for (auto& obs : out) {
    const double x = sample_survival(model, stream);
    const double c = stream.exponential() / gamma;
    obs = x <= c ? CensoredObservation{x, true} : CensoredObservation{c, false};
  }
  return Dataset(std::move(out));
}

inline Dataset sample_dataset(const HazardModel& model, const CensoringSpec& censoring, std::size_t n,
                              RandomStream& stream) {
  validate(model);
  return sample_dataset(model, resolve_censoring_rate(model, censoring), n, stream);
}

// ---------------------------------------------------------------------------
// Text forms: `constant:2`, `periodic:1:1`, `weibull:3:1`, `rate:0.5`,
// `fraction:0.3`. Parameters may be separated by ':' or ','.

namespace detail {

inline std::string format_number(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

inline std::vector<double> parse_parameters(std::string_view text, std::string_view what) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find_first_of(":,", pos);
    const auto field = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
      throw std::invalid_argument(std::string(what) + ": cannot parse number `" + std::string(field) + "`");
    }
    values.push_back(v);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return values;
}

inline std::pair<std::string_view, std::vector<double>> split_spec(std::string_view text, std::string_view what) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument(std::string(what) + ": expected `kind:parameters`, got `" + std::string(text) + "`");
  }
  return {text.substr(0, colon), parse_parameters(text.substr(colon + 1), what)};
}

}  // namespace detail

inline std::string to_string(const HazardModel& model) {
  using detail::format_number;
  return std::visit(overloaded{
                        [](const ConstantHazard& m) { return "constant:" + format_number(m.rate); },
                        [](const PeriodicHazard& m) {
                          return "periodic:" + format_number(m.frequency) + ":" + format_number(m.amplitude);
                        },
                        [](const WeibullHazard& m) {
                          return "weibull:" + format_number(m.shape) + ":" + format_number(m.scale);
                        },
                    },
                    model);
}

inline HazardModel parse_hazard_model(std::string_view text) {
  const auto [kind, p] = detail::split_spec(text, "hazard model");
  auto expect = [&](std::size_t count) {
    if (p.size() != count) {
      throw std::invalid_argument("hazard model `" + std::string(text) + "`: expected " + std::to_string(count) +
                                  " parameter(s)");
    }
  };
  HazardModel model;
  if (kind == "constant" || kind == "exponential") {
    expect(1);
    model = ConstantHazard{p[0]};
  } else if (kind == "periodic") {
    expect(2);
    model = PeriodicHazard{p[0], p[1]};
  } else if (kind == "weibull") {
    expect(2);
    model = WeibullHazard{p[0], p[1]};
  } else {
    throw std::invalid_argument("unknown hazard model kind `" + std::string(kind) + "`");
  }
  validate(model);
  return model;
}

inline std::string to_string(const CensoringSpec& spec) {
  using detail::format_number;
  return std::visit(overloaded{
                        [](const CensoringRate& c) { return "rate:" + format_number(c.gamma); },
                        [](const CensoringFraction& c) { return "fraction:" + format_number(c.fraction); },
                    },
                    spec);
}

inline CensoringSpec parse_censoring(std::string_view text) {
  const auto [kind, p] = detail::split_spec(text, "censoring");
  if (p.size() != 1) throw std::invalid_argument("censoring `" + std::string(text) + "`: expected one parameter");
  if (kind == "rate") {
    if (!(p[0] > 0.0)) throw std::invalid_argument("censoring rate must be positive");
    return CensoringRate{p[0]};
  }
  if (kind == "fraction") {
    if (!(p[0] > 0.0 && p[0] < 1.0)) throw std::invalid_argument("censoring fraction must lie in (0, 1)");
    return CensoringFraction{p[0]};
  }
  throw std::invalid_argument("unknown censoring kind `" + std::string(kind) + "`");
}

inline NullModel null_from_hazard(const HazardModel& model) {
  validate(model);
  return NullModel{[model](double t) { return -std::expm1(-cumulative_hazard(model, t)); }, to_string(model)};
}

}  // namespace censored_mmd
