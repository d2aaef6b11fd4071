#pragma once

// Right-censored samples, the probability-integral transform onto [0, 1],
// the censoring-aware distribution estimate F~ and a few risk-set helpers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "censored_mmd/errors.hpp"
#include "censored_mmd/kernel_spec.hpp"

namespace censored_mmd {

/// Largest transformed value. Keeps 1/(1-u) <= 1e12 for censored points.
inline constexpr double kMaxTransformed = 1.0 - 1e-12;

inline double clamp_transformed(double u) noexcept { return std::min(u, kMaxTransformed); }

struct CensoredObservation {
  double time = 0.0;
  bool event = true;  ///< true when the failure time was observed

  friend bool operator==(const CensoredObservation&, const CensoredObservation&) = default;
};

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<CensoredObservation> observations)
      : observations_(std::move(observations)) {
    for (std::size_t i = 0; i < observations_.size(); ++i) {
      const double t = observations_[i].time;
      if (!std::isfinite(t) || t < 0.0) {
        throw std::invalid_argument("observation " + std::to_string(i) +
                                    ": time must be finite and nonnegative");
      }
    }
  }

  const std::vector<CensoredObservation>& observations() const noexcept { return observations_; }
  std::size_t size() const noexcept { return observations_.size(); }
  const CensoredObservation& operator[](std::size_t i) const { return observations_[i]; }
  auto begin() const noexcept { return observations_.begin(); }
  auto end() const noexcept { return observations_.end(); }

  std::size_t event_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        observations_.begin(), observations_.end(), [](const auto& o) { return o.event; }));
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<CensoredObservation> observations_;
};

/// Hypothesised distribution F0 of the failure times.
struct NullModel {
  std::function<double(double)> cdf;
  std::string description;
};

inline NullModel exponential_null(double rate = 1.0) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("exponential rate must be positive");
  return NullModel{[rate](double t) { return -std::expm1(-rate * t); },
                   "exponential(rate=" + std::to_string(rate) + ")"};
}

struct TransformedPoint {
  double u = 0.0;
  bool delta = true;

  friend bool operator==(const TransformedPoint&, const TransformedPoint&) = default;
};

/// Pairs (U_i, Delta_i) with U_i = F0(T_i) clamped to [0, kMaxTransformed].
class TransformedDataset {
 public:
  TransformedDataset() = default;
  explicit TransformedDataset(std::vector<TransformedPoint> points) : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      auto& p = points_[i];
      if (!(p.u >= 0.0 && p.u <= 1.0)) {
        throw std::invalid_argument("point " + std::to_string(i) + ": u must lie in [0, 1]");
      }
      p.u = clamp_transformed(p.u);
    }
  }

  const std::vector<TransformedPoint>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  const TransformedPoint& operator[](std::size_t i) const { return points_[i]; }
  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  std::size_t event_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(points_.begin(), points_.end(), [](const auto& p) { return p.delta; }));
  }

 private:
  std::vector<TransformedPoint> points_;
};

/// Maps every time through F0. Fails if F0 leaves [0, 1] or decreases along
/// the sorted observed times.
inline TransformedDataset transform(const Dataset& data, const NullModel& model) {
  const std::size_t n = data.size();
  std::vector<TransformedPoint> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = model.cdf(data[i].time);
    if (!(u >= 0.0 && u <= 1.0)) {
      throw InvalidModel("cdf(" + std::to_string(data[i].time) + ") = " + std::to_string(u) +
                         " is outside [0, 1]");
    }
    points[i] = {u, data[i].event};
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data[a].time < data[b].time; });
  for (std::size_t k = 1; k < n; ++k) {
    if (points[order[k]].u < points[order[k - 1]].u) {
      throw InvalidModel("cdf decreases between times " + std::to_string(data[order[k - 1]].time) +
                         " and " + std::to_string(data[order[k]].time));
    }
  }
  return TransformedDataset(std::move(points));
}

/// Null cumulative hazard in transformed coordinates, -ln(1 - u).
inline double transform_cumhaz(double u) { return -std::log1p(-u); }

/// F~(x): events put mass 1/n at u_i, censored points spread 1/n uniformly
/// over (u_i, 1).
inline double ftilde_eval(const TransformedDataset& data, double x) {
  double total = 0.0;
  for (const auto& p : data) {
    if (p.u > x) continue;
    total += p.delta ? 1.0 : (x - p.u) / (1.0 - p.u);
  }
  return total / static_cast<double>(data.size());
}

/// Right-continuous step function given by its jump locations and the value
/// reached at each jump.
struct StepFunction {
  std::vector<double> times;
  std::vector<double> values;

  double operator()(double x) const {
    const auto it = std::upper_bound(times.begin(), times.end(), x);
    if (it == times.begin()) return 0.0;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }
};

/// Observation order used by the product-limit estimator: by time, events
/// before censorings at equal times.
template <class Range, class TimeOf, class EventOf>
std::vector<std::size_t> survival_order(const Range& items, TimeOf time_of, EventOf event_of) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ta = time_of(items[a]);
    const double tb = time_of(items[b]);
    if (ta != tb) return ta < tb;
    return event_of(items[a]) && !event_of(items[b]);
  });
  return order;
}

/// Kaplan-Meier estimate of F in the weight form
/// W_i = Delta_[i]/n * prod_{j<i} (1 + (1 - Delta_[j]) / (n - j)).
inline StepFunction kaplan_meier(const Dataset& data) {
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("kaplan_meier needs at least one observation");
  const auto order = survival_order(
      data.observations(), [](const auto& o) { return o.time; }, [](const auto& o) { return o.event; });

  StepFunction f;
  double inflation = 1.0;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& obs = data[order[i]];
    if (obs.event) {
      cumulative += inflation / static_cast<double>(n);
      if (!f.times.empty() && f.times.back() == obs.time) {
        f.values.back() = cumulative;
      } else {
        f.times.push_back(obs.time);
        f.values.push_back(cumulative);
      }
    } else if (i + 1 < n) {
      inflation *= 1.0 + 1.0 / static_cast<double>(n - i - 1);
    }
  }
  for (double& v : f.values) v = std::min(v, 1.0);
  return f;
}

/// Y(t) = #{i : u_i >= t}.
inline std::size_t risk_function(const TransformedDataset& data, double t) {
  return static_cast<std::size_t>(
      std::count_if(data.begin(), data.end(), [t](const auto& p) { return p.u >= t; }));
}

/// Median of |u_i - u_j| over unordered pairs, censored or not. Falls back to
/// 1 when the median is zero.
inline KernelSpec median_heuristic(const TransformedDataset& data) {
  const std::size_t n = data.size();
  if (n < 2) throw std::invalid_argument("median_heuristic needs at least two points");
  std::vector<double> gaps;
  gaps.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) gaps.push_back(std::abs(data[i].u - data[j].u));
  }
  const std::size_t mid = gaps.size() / 2;
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(mid), gaps.end());
  double median = gaps[mid];
  if (gaps.size() % 2 == 0) {
    const double below = *std::max_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + below);
  }
  return KernelSpec(median > 0.0 ? median : 1.0);
}

// ---------------------------------------------------------------------------
// CSV dataset format: header `time,event`, one row per observation.

inline Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) throw ParseError(row, "empty input, expected header `time,event`");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time,event") throw ParseError(row, "expected header `time,event`, got `" + line + "`");

  std::vector<CensoredObservation> observations;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError(row, "expected two comma-separated fields");
    }
    const std::string time_text = line.substr(0, comma);
    const std::string event_text = line.substr(comma + 1);
    double time = 0.0;
    std::size_t used = 0;
    try {
      time = std::stod(time_text, &used);
    } catch (const std::exception&) {
      throw ParseError(row, "time `" + time_text + "` is not a number");
    }
    if (used != time_text.size()) throw ParseError(row, "time `" + time_text + "` is not a number");
    if (!std::isfinite(time) || time < 0.0) {
      throw ParseError(row, "time must be finite and nonnegative, got `" + time_text + "`");
    }
    if (event_text != "0" && event_text != "1") {
      throw ParseError(row, "event must be 0 or 1, got `" + event_text + "`");
    }
    observations.push_back({time, event_text == "1"});
  }
  return Dataset(std::move(observations));
}

inline void write_dataset_csv(std::ostream& out, const Dataset& data) {
  std::ostringstream buffer;
  buffer.precision(17);
  buffer << "time,event\n";
  for (const auto& o : data) buffer << o.time << ',' << (o.event ? 1 : 0) << '\n';
  out << buffer.str();
}

}  // namespace censored_mmd
