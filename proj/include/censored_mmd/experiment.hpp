#pragma once

// Monte-Carlo rejection-rate tables. An experiment is a grid of cells
// (alternative x censoring x sample size); each cell runs independent
// replications and counts, per test and level, how often the null is
// rejected.
//
// Every random stream is keyed by (base_seed, cell descriptor, replication,
// purpose), so results do not depend on thread count, on cell order, or on
// which other cells are configured.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "censored_mmd/censored_data.hpp"
#include "censored_mmd/classical_tests.hpp"
#include "censored_mmd/errors.hpp"
#include "censored_mmd/kernel_core.hpp"
#include "censored_mmd/mmd_test.hpp"
#include "censored_mmd/rng.hpp"
#include "censored_mmd/survival_sim.hpp"

namespace censored_mmd {

enum class TestName : std::uint8_t { MW1, MW2, MW3, Pearson, LR1, LR2, WLR };

inline constexpr std::array<TestName, 7> kAllTests{TestName::MW1,     TestName::MW2, TestName::MW3,
                                                   TestName::Pearson, TestName::LR1, TestName::LR2,
                                                   TestName::WLR};

inline std::string_view to_string(TestName t) noexcept {
  switch (t) {
    case TestName::MW1: return "MW1";
    case TestName::MW2: return "MW2";
    case TestName::MW3: return "MW3";
    case TestName::Pearson: return "Pearson";
    case TestName::LR1: return "LR1";
    case TestName::LR2: return "LR2";
    case TestName::WLR: return "WLR";
  }
  return "?";
}

inline TestName parse_test_name(std::string_view text) {
  for (auto t : kAllTests) {
    if (to_string(t) == text) return t;
  }
  throw std::invalid_argument("unknown test `" + std::string(text) + "` (expected MW1, MW2, MW3, Pearson, LR1, LR2 or WLR)");
}

inline std::vector<TestName> parse_test_list(std::string_view text) {
  std::vector<TestName> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find(',', pos);
    const auto item = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    if (!item.empty()) out.push_back(parse_test_name(item));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty test list");
  return out;
}

/// MW1, MW2 and MW3 are the wild bootstrap with gaussian, multinomial and
/// rademacher multipliers.
inline std::optional<WeightScheme> bootstrap_scheme_of(TestName t) noexcept {
  switch (t) {
    case TestName::MW1: return WeightScheme::gaussian;
    case TestName::MW2: return WeightScheme::multinomial;
    case TestName::MW3: return WeightScheme::rademacher;
    default: return std::nullopt;
  }
}

inline std::string to_string(const LengthscaleChoice& choice) {
  if (const auto* fixed = std::get_if<KernelSpec>(&choice)) {
    return "fixed:" + detail::format_number(fixed->lengthscale());
  }
  return "median";
}

inline LengthscaleChoice parse_lengthscale(std::string_view text) {
  if (text == "median") return MedianHeuristic{};
  if (text.starts_with("fixed:")) {
    const auto p = detail::parse_parameters(text.substr(6), "lengthscale");
    if (p.size() != 1) throw std::invalid_argument("lengthscale: expected `fixed:<l>`");
    return KernelSpec(p[0]);
  }
  throw std::invalid_argument("lengthscale must be `median` or `fixed:<l>`, got `" + std::string(text) + "`");
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  HazardModel null_model = ConstantHazard{1.0};
  std::vector<HazardModel> alternatives{ConstantHazard{1.0}};
  std::vector<CensoringSpec> censoring{CensoringFraction{0.3}};
  std::vector<std::size_t> sample_sizes{30, 50, 100, 200};
  std::vector<double> levels{0.01, 0.05, 0.10};
  int replications = 1000;
  int n_boot = kDefaultBootstrapSize;
  LengthscaleChoice lengthscale = KernelSpec(1.0);
  std::vector<TestName> tests{kAllTests.begin(), kAllTests.end()};
  std::uint64_t base_seed = 1;

  void validate() const {
    censored_mmd::validate(null_model);
    for (const auto& m : alternatives) censored_mmd::validate(m);
    if (alternatives.empty()) throw std::invalid_argument("config: no alternatives");
    if (censoring.empty()) throw std::invalid_argument("config: no censoring specification");
    if (sample_sizes.empty()) throw std::invalid_argument("config: no sample sizes");
    for (auto n : sample_sizes) {
      if (n < 2) throw std::invalid_argument("config: sample sizes must be at least 2");
    }
    if (levels.empty()) throw std::invalid_argument("config: no levels");
    for (double a : levels) {
      if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("config: levels must lie in (0, 1)");
    }
    if (replications < 1) throw std::invalid_argument("config: replications must be at least 1");
    if (n_boot < 1) throw std::invalid_argument("config: n_boot must be at least 1");
    if (tests.empty()) throw std::invalid_argument("config: no tests");
  }
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "null_model") {
      cfg.null_model = parse_hazard_model(value.get<std::string>());
    } else if (key == "alternatives") {
      cfg.alternatives.clear();
      for (const auto& m : value) cfg.alternatives.push_back(parse_hazard_model(m.get<std::string>()));
    } else if (key == "censoring") {
      cfg.censoring.clear();
      for (const auto& c : value) cfg.censoring.push_back(parse_censoring(c.get<std::string>()));
    } else if (key == "sample_sizes") {
      cfg.sample_sizes = value.get<std::vector<std::size_t>>();
    } else if (key == "levels") {
      cfg.levels = value.get<std::vector<double>>();
    } else if (key == "replications") {
      cfg.replications = value.get<int>();
    } else if (key == "n_boot") {
      cfg.n_boot = value.get<int>();
    } else if (key == "lengthscale") {
      cfg.lengthscale = value.is_number() ? LengthscaleChoice{KernelSpec(value.get<double>())}
                                          : parse_lengthscale(value.get<std::string>());
    } else if (key == "tests") {
      cfg.tests.clear();
      for (const auto& t : value) cfg.tests.push_back(parse_test_name(t.get<std::string>()));
    } else if (key == "base_seed") {
      cfg.base_seed = value.get<std::uint64_t>();
    } else {
      throw std::invalid_argument("config: unknown field `" + key + "`");
    }
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["null_model"] = to_string(cfg.null_model);
  j["alternatives"] = nlohmann::json::array();
  for (const auto& m : cfg.alternatives) j["alternatives"].push_back(to_string(m));
  j["censoring"] = nlohmann::json::array();
  for (const auto& c : cfg.censoring) j["censoring"].push_back(to_string(c));
  j["sample_sizes"] = cfg.sample_sizes;
  j["levels"] = cfg.levels;
  j["replications"] = cfg.replications;
  j["n_boot"] = cfg.n_boot;
  j["lengthscale"] = to_string(cfg.lengthscale);
  j["tests"] = nlohmann::json::array();
  for (auto t : cfg.tests) j["tests"].push_back(std::string(to_string(t)));
  j["base_seed"] = cfg.base_seed;
  return j;
}

// ---------------------------------------------------------------------------
// Results

struct ResultRow {
  std::string test;
  std::string model;
  std::size_t n = 0;
  std::string censoring;
  double level = 0.05;
  std::size_t rejections = 0;
  std::size_t replications = 0;

  double rejection_rate() const noexcept {
    return static_cast<double>(rejections) / static_cast<double>(replications);
  }
  double monte_carlo_se() const noexcept {
    const double r = rejection_rate();
    return std::sqrt(r * (1.0 - r) / static_cast<double>(replications));
  }

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

enum class Grouping { by_cell, by_test };

namespace detail {

inline std::size_t test_rank(const std::string& name) {
  for (std::size_t i = 0; i < kAllTests.size(); ++i) {
    if (to_string(kAllTests[i]) == name) return i;
  }
  return kAllTests.size();
}

inline std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
  return buf;
}

}  // namespace detail

inline constexpr std::string_view kTableHeader = "test,model,n,censoring,level,rejection_rate,se,replications";

/// Rows sorted by the grouping, rates and standard errors as percentages
/// with two decimals.
inline std::string emit_table(std::vector<ResultRow> rows, Grouping grouping = Grouping::by_cell) {
  std::stable_sort(rows.begin(), rows.end(), [grouping](const ResultRow& a, const ResultRow& b) {
    if (grouping == Grouping::by_cell) {
      return std::tie(a.model, a.censoring, a.n, a.level) < std::tie(b.model, b.censoring, b.n, b.level) ||
             (std::tie(a.model, a.censoring, a.n, a.level) == std::tie(b.model, b.censoring, b.n, b.level) &&
              std::make_pair(detail::test_rank(a.test), a.test) < std::make_pair(detail::test_rank(b.test), b.test));
    }
    return std::make_tuple(detail::test_rank(a.test), a.test, a.model, a.censoring, a.n, a.level) <
           std::make_tuple(detail::test_rank(b.test), b.test, b.model, b.censoring, b.n, b.level);
  });
  std::ostringstream out;
  out << kTableHeader << '\n';
  for (const auto& r : rows) {
    out << r.test << ',' << r.model << ',' << r.n << ',' << r.censoring << ',' << detail::format_number(r.level)
        << ',' << detail::percent(r.rejection_rate()) << ',' << detail::percent(r.monte_carlo_se()) << ','
        << r.replications << '\n';
  }
  return out.str();
}

/// Inverse of emit_table. Rejection counts are recovered from the rounded
/// percentages, which is exact for up to 10^4 replications.
inline std::vector<ResultRow> parse_table(std::string_view text) {
  std::vector<ResultRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line) || line != kTableHeader) throw ParseError(row, "expected result table header");
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const auto end = line.find(',', pos);
      fields.push_back(line.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
      if (end == std::string::npos) break;
      pos = end + 1;
    }
    if (fields.size() != 8) throw ParseError(row, "expected 8 fields, got " + std::to_string(fields.size()));
    try {
      ResultRow r;
      r.test = fields[0];
      r.model = fields[1];
      r.n = std::stoul(fields[2]);
      r.censoring = fields[3];
      r.level = std::stod(fields[4]);
      r.replications = std::stoul(fields[7]);
      const double rate = std::stod(fields[5]) / 100.0;
      r.rejections = static_cast<std::size_t>(std::llround(rate * static_cast<double>(r.replications)));
      rows.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw ParseError(row, std::string("malformed number: ") + e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Execution

/// Worker count: CENSORED_MMD_THREADS if set, otherwise the hardware count.
inline unsigned thread_count() {
  if (const char* env = std::getenv("CENSORED_MMD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any call is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

struct Cell {
  HazardModel model;
  CensoringSpec censoring;
  std::size_t n = 0;

  std::string descriptor() const {
    return to_string(model) + "|" + to_string(censoring) + "|n=" + std::to_string(n);
  }
};

/// Stream purposes within a replication.
enum class StreamPurpose : std::uint64_t { data = 0, bootstrap_base = 1 };

inline std::uint64_t cell_key(std::uint64_t base_seed, const Cell& cell) {
  return derive_key(base_seed, fnv1a64(cell.descriptor()));
}

inline std::uint64_t replication_data_key(std::uint64_t cell, std::uint64_t replication) {
  return derive_key(cell, replication, static_cast<std::uint64_t>(StreamPurpose::data));
}

inline std::uint64_t replication_bootstrap_key(std::uint64_t cell, std::uint64_t replication, WeightScheme s) {
  return derive_key(cell, replication,
                    static_cast<std::uint64_t>(StreamPurpose::bootstrap_base) + static_cast<std::uint64_t>(s));
}

/// p-values of every configured test on one transformed dataset. A test that
/// cannot be computed on the sample (empty Pearson cell, no events, zero
/// variance) yields no p-value.
struct ReplicationOutcome {
  std::vector<std::optional<double>> p_values;  ///< parallel to the test list
  std::optional<double> v_statistic;
  std::optional<double> u_statistic;
  std::optional<double> gram_trace;
};

inline ReplicationOutcome run_tests_on(const TransformedDataset& data, const ExperimentConfig& cfg,
                                       std::uint64_t cell, std::uint64_t replication) {
  ReplicationOutcome out;
  out.p_values.resize(cfg.tests.size());
  std::optional<JGram> gram;
  for (std::size_t t = 0; t < cfg.tests.size(); ++t) {
    const TestName test = cfg.tests[t];
    try {
      if (const auto scheme = bootstrap_scheme_of(test)) {
        if (!gram) {
          gram.emplace(j_gram(data, resolve_lengthscale(cfg.lengthscale, data)));
          out.gram_trace = gram->trace();
        }
        const BootstrapScheme bs{*scheme, cfg.n_boot, replication_bootstrap_key(cell, replication, *scheme)};
        const auto outcome = calibrate_statistic(*gram, bs, {});
        out.p_values[t] = outcome.p_value;
        out.v_statistic = outcome.statistic;
        out.u_statistic = outcome.u_statistic;
      } else if (test == TestName::Pearson) {
        out.p_values[t] = pearson_test(data).p_value;
      } else if (test == TestName::LR1) {
        out.p_values[t] = logrank_test(data, LogrankWeight::constant).p_value;
      } else if (test == TestName::LR2) {
        out.p_values[t] = logrank_test(data, LogrankWeight::risk).p_value;
      } else if (test == TestName::WLR) {
        out.p_values[t] = combined_wlr_test(data).p_value;
      }
    } catch (const EmptyCell&) {
    } catch (const ZeroVariance&) {
    } catch (const std::invalid_argument&) {
      // Raised for samples without events; data-dependent, not a config error.
      if (data.event_count() != 0) throw;
    }
  }
  return out;
}

struct ExperimentReport {
  std::vector<ResultRow> rows;
  std::size_t failed_tests = 0;  ///< (replication, test) pairs without a p-value
};

inline ExperimentReport run_experiment_report(const ExperimentConfig& cfg, unsigned threads = thread_count()) {
  cfg.validate();
  const NullModel null = null_from_hazard(cfg.null_model);
  ExperimentReport report;

  std::map<std::string, double> gamma_cache;
  for (const auto& model : cfg.alternatives) {
    for (const auto& censoring : cfg.censoring) {
      for (const auto n : cfg.sample_sizes) {
        const Cell cell{model, censoring, n};
        const std::string descriptor = cell.descriptor();
        try {
          const std::string gamma_id = to_string(model) + "|" + to_string(censoring);
          auto cached = gamma_cache.find(gamma_id);
          if (cached == gamma_cache.end()) {
            cached = gamma_cache.emplace(gamma_id, resolve_censoring_rate(model, censoring)).first;
          }
          const double gamma = cached->second;
          const std::uint64_t key = cell_key(cfg.base_seed, cell);

          const auto reps = static_cast<std::size_t>(cfg.replications);
          const std::size_t n_tests = cfg.tests.size();
          const std::size_t n_levels = cfg.levels.size();
          // rejected[(rep * n_tests + t) * n_levels + l]
          std::vector<std::uint8_t> rejected(reps * n_tests * n_levels, 0);
          std::vector<std::uint8_t> missing(reps * n_tests, 0);
          parallel_for(reps, threads, [&](std::size_t r) {
            RandomStream stream(replication_data_key(key, r));
            const auto data = transform(sample_dataset(model, gamma, n, stream), null);
            const auto outcome = run_tests_on(data, cfg, key, r);
            for (std::size_t t = 0; t < n_tests; ++t) {
              if (!outcome.p_values[t]) {
                missing[r * n_tests + t] = 1;
                continue;
              }
              for (std::size_t l = 0; l < n_levels; ++l) {
                rejected[(r * n_tests + t) * n_levels + l] = *outcome.p_values[t] <= cfg.levels[l] ? 1 : 0;
              }
            }
          });

          for (std::size_t t = 0; t < n_tests; ++t) {
            for (std::size_t l = 0; l < n_levels; ++l) {
              ResultRow row{std::string(to_string(cfg.tests[t])), to_string(model), n, to_string(censoring),
                            cfg.levels[l], 0, reps};
              for (std::size_t r = 0; r < reps; ++r) row.rejections += rejected[(r * n_tests + t) * n_levels + l];
              report.rows.push_back(std::move(row));
            }
            for (std::size_t r = 0; r < reps; ++r) report.failed_tests += missing[r * n_tests + t];
          }
        } catch (const std::exception& e) {
          throw std::runtime_error("cell " + descriptor + ": " + e.what());
        }
      }
    }
  }
  return report;
}

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, unsigned threads = thread_count()) {
  return run_experiment_report(cfg, threads).rows;
}

}  // namespace censored_mmd
