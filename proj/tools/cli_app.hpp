#pragma once

// Command-line front end: `test`, `simulate`, `calibrate`, `experiment`.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "censored_mmd/censored_mmd.hpp"

namespace censored_mmd::cli {

inline constexpr int kExitRejected = 2;

namespace detail {

inline std::vector<double> parse_levels(const std::string& text) {
  auto values = censored_mmd::detail::parse_parameters(text, "levels");
  for (double a : values) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("levels must lie in (0, 1)");
  }
  return values;
}

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open `" + path + "` for writing");
  file << text;
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

struct TestOptions {
  std::string dataset;
  std::string null_spec = "constant:1";
  std::string test = "MW1";
  std::uint64_t seed = 1;
  int n_boot = kDefaultBootstrapSize;
  std::string lengthscale = "fixed:1";
  std::string levels = "0.05";
  bool exit_code_signal = false;
};

inline int run_single_test(const TestOptions& opt, std::ostream& out) {
  std::ifstream file(opt.dataset);
  if (!file) throw std::runtime_error("cannot open dataset `" + opt.dataset + "`");
  const Dataset data = read_dataset_csv(file);
  if (data.size() < 2) throw std::invalid_argument("dataset needs at least two observations");
  const NullModel null = null_from_hazard(parse_hazard_model(opt.null_spec));
  const TransformedDataset transformed = transform(data, null);
  const TestName test = parse_test_name(opt.test);
  const auto levels = parse_levels(opt.levels);

  std::ostringstream report;
  report << "test: " << to_string(test) << '\n';
  report << "null: " << null.description << '\n';
  report << "n: " << data.size() << '\n';
  report << "events: " << data.event_count() << '\n';

  double p_value = 1.0;
  if (const auto scheme = bootstrap_scheme_of(test)) {
    const BootstrapScheme bs{*scheme, opt.n_boot, opt.seed};
    const auto outcome = run_test(transformed, parse_lengthscale(opt.lengthscale), bs, levels);
    report << "lengthscale: " << format_double(outcome.lengthscale_used) << '\n';
    report << "statistic: " << format_double(outcome.statistic) << '\n';
    report << "u_statistic: " << format_double(outcome.u_statistic) << '\n';
    report << "n_boot: " << outcome.n_boot << '\n';
    p_value = outcome.p_value;
  } else if (test == TestName::Pearson) {
    const auto outcome = pearson_test(transformed);
    report << "statistic: " << format_double(outcome.statistic) << '\n' << "dof: " << outcome.dof << '\n';
    p_value = outcome.p_value;
  } else if (test == TestName::WLR) {
    const auto outcome = combined_wlr_test(transformed);
    report << "statistic: " << format_double(outcome.statistic) << '\n' << "dof: " << outcome.dof << '\n';
    p_value = outcome.p_value;
  } else {
    const auto weight = test == TestName::LR1 ? LogrankWeight::constant : LogrankWeight::risk;
    const auto outcome = logrank_test(transformed, weight);
    report << "statistic: " << format_double(outcome.statistic) << '\n';
    p_value = outcome.p_value;
  }
  report << "p_value: " << format_double(p_value) << '\n';
  for (double a : levels) {
    report << "reject@" << censored_mmd::detail::format_number(a) << ": " << (p_value <= a ? "yes" : "no") << '\n';
  }
  out << report.str();
  return opt.exit_code_signal && p_value <= levels.front() ? kExitRejected : 0;
}

}  // namespace detail

/// Runs the CLI; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel goodness-of-fit test for right-censored survival data"};
  app.require_subcommand(1);

  detail::TestOptions test_opt;
  auto* test_cmd = app.add_subcommand("test", "Run one test on a CSV dataset (header `time,event`)");
  test_cmd->add_option("dataset", test_opt.dataset, "Dataset CSV file")->required();
  test_cmd->add_option("--null", test_opt.null_spec, "Null model, e.g. constant:1 or weibull:1.5:1")
      ->capture_default_str();
  test_cmd->add_option("--test", test_opt.test, "MW1, MW2, MW3, Pearson, LR1, LR2 or WLR")->capture_default_str();
  test_cmd->add_option("--seed", test_opt.seed, "Bootstrap seed")->capture_default_str();
  test_cmd->add_option("--boot", test_opt.n_boot, "Bootstrap replicates")->capture_default_str();
  test_cmd->add_option("--lengthscale", test_opt.lengthscale, "fixed:<l> or median")->capture_default_str();
  test_cmd->add_option("--levels", test_opt.levels, "Comma-separated levels; the first is primary")
      ->capture_default_str();
  test_cmd->add_flag("--exit-code-signal", test_opt.exit_code_signal,
                     "Exit with status 2 when the null is rejected at the primary level");

  std::string sim_model = "constant:1";
  std::string sim_censoring = "fraction:0.3";
  std::size_t sim_n = 100;
  std::uint64_t sim_seed = 1;
  std::uint64_t sim_replicate = 0;
  std::string sim_out;
  auto* sim_cmd = app.add_subcommand("simulate", "Draw one censored dataset and write it as CSV");
  sim_cmd->add_option("--model", sim_model, "Hazard model: constant:<r>, periodic:<f>:<a>, weibull:<k>:<s>")
      ->capture_default_str();
  sim_cmd->add_option("--censoring", sim_censoring, "rate:<gamma> or fraction:<q>")->capture_default_str();
  sim_cmd->add_option("--n", sim_n, "Sample size")->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim_seed, "Base seed")->capture_default_str();
  sim_cmd->add_option("--replicate", sim_replicate, "Replicate index within the seed")->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "Output path (stdout if omitted)");

  std::string cal_model = "constant:1";
  double cal_target = 0.3;
  auto* cal_cmd = app.add_subcommand("calibrate", "Print the censoring rate giving a target censored fraction");
  cal_cmd->add_option("--model", cal_model, "Hazard model")->capture_default_str();
  cal_cmd->add_option("--target", cal_target, "Target censored fraction in (0, 1)")->capture_default_str();

  std::string exp_config;
  std::optional<std::uint64_t> exp_seed;
  std::optional<int> exp_reps;
  std::optional<int> exp_boot;
  std::optional<std::string> exp_lengthscale;
  std::optional<std::string> exp_tests;
  std::string exp_out;
  bool exp_by_test = false;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a rejection-rate experiment and emit a CSV table");
  exp_cmd->add_option("--config", exp_config, "JSON experiment configuration")->check(CLI::ExistingFile);
  exp_cmd->add_option("--seed", exp_seed, "Override base_seed");
  exp_cmd->add_option("--reps", exp_reps, "Override replications");
  exp_cmd->add_option("--boot", exp_boot, "Override n_boot");
  exp_cmd->add_option("--lengthscale", exp_lengthscale, "Override lengthscale (fixed:<l> or median)");
  exp_cmd->add_option("--tests", exp_tests, "Override tests, comma-separated");
  exp_cmd->add_option("--out", exp_out, "Output path (stdout if omitted)");
  exp_cmd->add_flag("--by-test", exp_by_test, "Group rows by test instead of by cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*test_cmd) return detail::run_single_test(test_opt, out);

    if (*sim_cmd) {
      const HazardModel model = parse_hazard_model(sim_model);
      const CensoringSpec censoring = parse_censoring(sim_censoring);
      RandomStream stream(derive_key(sim_seed, sim_replicate));
      std::ostringstream csv;
      write_dataset_csv(csv, sample_dataset(model, censoring, sim_n, stream));
      detail::write_output(sim_out, csv.str(), out);
      return 0;
    }

    if (*cal_cmd) {
      const HazardModel model = parse_hazard_model(cal_model);
      out << detail::format_double(calibrate_censoring(model, cal_target)) << '\n';
      return 0;
    }

    if (*exp_cmd) {
      ExperimentConfig cfg;
      if (!exp_config.empty()) {
        std::ifstream file(exp_config);
        cfg = config_from_json(nlohmann::json::parse(file));
      }
      if (exp_seed) cfg.base_seed = *exp_seed;
      if (exp_reps) cfg.replications = *exp_reps;
      if (exp_boot) cfg.n_boot = *exp_boot;
      if (exp_lengthscale) cfg.lengthscale = parse_lengthscale(*exp_lengthscale);
      if (exp_tests) cfg.tests = parse_test_list(*exp_tests);
      const auto report = run_experiment_report(cfg);
      if (report.failed_tests > 0) {
        err << "note: " << report.failed_tests
            << " test evaluations had no p-value (degenerate sample) and were counted as non-rejections\n";
      }
      detail::write_output(exp_out, emit_table(report.rows, exp_by_test ? Grouping::by_test : Grouping::by_cell),
                           out);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace censored_mmd::cli
