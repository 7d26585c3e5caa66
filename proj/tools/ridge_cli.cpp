// Command-line front end for the ridge regression simulation harness.
//
// Subcommands:
//   simulate  run a trial ensemble and print aggregate statistics (JSON)
//   compare   run named analytic checks and print their reports (JSON)
//   fe-curve  write the asymptotic free-energy sweep as CSV
//   spectrum  write an eigenvalue histogram with its limiting density as CSV
//   bounds    write one tail bound next to its empirical frequency as CSV
//
// Exit codes: 0 success, 1 at least one check failed, 2 usage or config
// error, 3 numeric failure inside a computation.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ridge/errors.hpp"
#include "ridge/harness.hpp"

namespace {

using nlohmann::json;

std::vector<double> parse_csv_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw ridge::ConfigError("not a number in list: '" + item + "'");
    }
    if (pos != item.size())
      throw ridge::ConfigError("trailing characters in list entry: '" + item +
                               "'");
    out.push_back(v);
  }
  if (out.empty()) throw ridge::ConfigError("empty number list");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ridge::ConfigError("cannot open " + path);
  out << text;
  out.flush();
  if (!out) throw ridge::ConfigError("write failed for " + path);
}

int run_simulate(const std::string& config_path, long trials_override,
                 bool seed_set, std::uint64_t seed_override,
                 const std::string& out_path) {
  ridge::ExperimentConfig config = ridge::load_config(config_path);
  if (trials_override > 0) config.trials = trials_override;
  if (seed_set) config.master_seed = seed_override;
  const ridge::TrialStatistics stats = ridge::run_trials(config);
  const std::string text = ridge::stats_to_json(stats, config).dump(2) + "\n";
  std::cout << text;
  if (!out_path.empty()) write_text(out_path, text);
  else if (!config.output.path.empty()) write_text(config.output.path, text);
  return 0;
}

int run_compare(const std::string& config_path, const std::string& checks) {
  ridge::ExperimentConfig config = ridge::load_config(config_path);
  if (checks == "all") {
    config.checks = ridge::check_registry();
  } else {
    config.checks.clear();
    std::stringstream ss(checks);
    std::string name;
    while (std::getline(ss, name, ','))
      if (!name.empty()) config.checks.push_back(name);
    if (config.checks.empty())
      throw ridge::ConfigError("no checks requested");
  }
  const std::vector<ridge::AnalyticReport> reports =
      ridge::compare_report(config);
  json out = json::array();
  bool all_passed = true;
  for (const auto& report : reports) {
    out.push_back(ridge::report_to_json(report));
    all_passed = all_passed && report.passed;
  }
  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!config.output.path.empty()) write_text(config.output.path, text);
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teacher-student ridge regression: simulation and analytics"};
  app.require_subcommand(1);

  std::string sim_config, sim_out;
  long sim_trials = 0;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand(
      "simulate", "Run a trial ensemble and print aggregate statistics");
  sim->add_option("--config", sim_config, "JSON config file")->required();
  sim->add_option("--trials", sim_trials, "override trial count");
  auto* seed_opt = sim->add_option("--seed", sim_seed, "override master seed");
  sim->add_option("--out", sim_out, "also write the JSON report here");

  std::string cmp_config, cmp_checks;
  auto* cmp = app.add_subcommand(
      "compare", "Check empirical aggregates against analytic values");
  cmp->add_option("--config", cmp_config, "JSON config file")->required();
  cmp->add_option("--checks", cmp_checks,
                  "comma-separated check names, or 'all'")
      ->required();

  std::string fe_zetas, fe_out;
  double fe_tmin = 0.0, fe_tmax = 0.0, fe_sigma0_sq = 1.0;
  long fe_steps = 0;
  auto* fec = app.add_subcommand(
      "fe-curve", "Write the asymptotic free-energy temperature sweep");
  fec->add_option("--zeta", fe_zetas, "comma-separated aspect ratios")
      ->required();
  fec->add_option("--tmin", fe_tmin, "lowest temperature")->required();
  fec->add_option("--tmax", fe_tmax, "highest temperature")->required();
  fec->add_option("--steps", fe_steps, "number of grid points")->required();
  fec->add_option("--sigma0-sq", fe_sigma0_sq, "teacher noise variance");
  fec->add_option("--out", fe_out, "output CSV path")->required();

  std::string spec_config, spec_out;
  auto* spec = app.add_subcommand(
      "spectrum", "Write a sampled eigenvalue histogram with the MP overlay");
  spec->add_option("--config", spec_config, "JSON config file")->required();
  spec->add_option("--out", spec_out, "output CSV path")->required();

  std::string bnd_config, bnd_kind, bnd_out;
  double bnd_delta = 0.0;
  auto* bnd = app.add_subcommand(
      "bounds", "Write a tail bound next to its empirical frequency");
  bnd->add_option("--config", bnd_config, "JSON config file")->required();
  bnd->add_option("--kind", bnd_kind, "'noise' or 'mse'")->required();
  bnd->add_option("--delta", bnd_delta, "deviation threshold")->required();
  bnd->add_option("--out", bnd_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return run_simulate(sim_config, sim_trials, seed_opt->count() > 0,
                          sim_seed, sim_out);
    if (cmp->parsed()) return run_compare(cmp_config, cmp_checks);
    if (fec->parsed()) {
      const std::vector<double> zetas = parse_csv_doubles(fe_zetas);
      if (fe_steps < 1)
        throw ridge::ConfigError("--steps must be at least 1");
      if (!(fe_tmin > 0.0))
        throw ridge::ConfigError("--tmin must be positive");
      if (fe_tmax < fe_tmin)
        throw ridge::ConfigError("--tmax must be at least --tmin");
      std::vector<double> grid;
      grid.reserve(static_cast<std::size_t>(fe_steps));
      for (long i = 0; i < fe_steps; ++i) {
        const double frac =
            fe_steps == 1 ? 0.0
                          : static_cast<double>(i) /
                                static_cast<double>(fe_steps - 1);
        grid.push_back(fe_tmin + frac * (fe_tmax - fe_tmin));
      }
      ridge::emit_fe_curve(zetas, grid, fe_sigma0_sq, fe_out);
      return 0;
    }
    if (spec->parsed()) {
      ridge::emit_spectrum_csv(ridge::load_config(spec_config), spec_out);
      return 0;
    }
    if (bnd->parsed()) {
      ridge::emit_bounds_csv(ridge::load_config(bnd_config), bnd_kind,
                             bnd_delta, bnd_out);
      return 0;
    }
  } catch (const ridge::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ridge::UnsupportedCheck& e) {
    std::cerr << "unsupported check: " << e.what() << "\n";
    return 2;
  } catch (const ridge::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
