#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ridge/model.hpp"
#include "ridge/numerics.hpp"

namespace ridge {

// Population covariance specification: identity, an explicit diagonal, or a
// whitespace-separated dense matrix loaded from a file.
struct SigmaPopSpec {
  enum class Kind { Identity, Diagonal, DenseFile };

  Kind kind = Kind::Identity;
  std::vector<double> diagonal;
  std::string file;

  Eigen::MatrixXd materialize(Eigen::Index d) const;
  // Ascending eigenvalues of the materialized matrix.
  std::vector<double> eigenvalues(Eigen::Index d) const;
};

struct OutputSpec {
  std::string path;            // empty = stdout only
  std::string format = "json"; // "json" or "csv"
};

// One experiment: sizes, teacher/noise parameters, hyperparameters, seed,
// and the named formula checks to run.  sigma^2 is always evaluated at the
// matched value sigma0_sq.  beta serializes as the string "infinity" in JSON.
struct ExperimentConfig {
  long n = 100;
  long d = 50;
  long trials = 100;
  double sigma0_sq = 1.0;
  double theta_prior_var = 1.0;
  double eta = 0.0;
  double beta = std::numeric_limits<double>::infinity();
  bool scaled = false; // design convention used by run_trials
  SigmaPopSpec sigma_pop;
  NoisePrior prior = NoisePrior::flat();
  std::uint64_t master_seed = 1729;
  std::vector<std::string> checks;
  OutputSpec output;
  long failure_budget = 0;
  double z_threshold = 3.0;

  double zeta() const { return static_cast<double>(d) / static_cast<double>(n); }
};

// Strict parse: unknown fields anywhere in the document are ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);
// FNV-1a over the canonical JSON dump, as fixed-width hex.
std::string config_hash(const ExperimentConfig& config);

// Streaming aggregates over trials.  Scalar streams always run; the
// free-energy streams stay empty at beta = infinity, and the per-trial
// vectors fill only when requested.
struct TrialStatistics {
  StreamingMoments noise_estimate;       // residual mean square at eta = 0
  StreamingMoments mse;                  // (1/d)||theta0 - theta_hat||^2
  StreamingMoments residual_ss;          // ||t - Z theta_hat||^2
  StreamingMoments free_energy_density;  // F/N at sigma^2 = sigma0^2
  StreamingMoments energy_density;       // E/N
  StreamingMoments entropy_density;      // S/N
  StreamingCovariance energy_entropy;    // (E/N, S/N)
  std::vector<double> first_coordinate;  // theta_hat[0] per trial
  std::vector<std::vector<double>> spectra;  // sample-covariance eigenvalues
  long failures = 0;
};

struct TrialCollect {
  bool spectra = false;
  bool first_coordinate = false;
};

// Runs config.trials independent teacher draws.  Trial k derives its streams
// from (master_seed, 8k + purpose), so aggregates are bit-identical for any
// worker count: partials are reduced leaf-by-leaf in fixed index order.
TrialStatistics run_trials(const ExperimentConfig& config,
                           TrialCollect collect = {}, int workers = 0);

nlohmann::json stats_to_json(const TrialStatistics& stats,
                             const ExperimentConfig& config);

// One analytic-vs-empirical comparison.  passed is decided by |z_score| <=
// threshold for standard-error checks, by dedicated rules for bound and
// identity checks; metadata carries the check-specific numbers plus the
// config hash and seed needed to reproduce the run.
struct AnalyticReport {
  std::string check_name;
  double analytic = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;
  double z_score = 0.0;
  bool passed = false;
  std::map<std::string, std::string> metadata;
};

// The named checks understood by compare_report.
const std::vector<std::string>& check_registry();

std::vector<AnalyticReport> compare_report(const ExperimentConfig& config);

nlohmann::json report_to_json(const AnalyticReport& report);

// Free-energy curve CSV: header `zeta,temperature,f_beta,divergent`, rows
// sorted by (zeta, temperature), 17-significant-digit floats, f_beta empty
// on divergent rows.
void emit_fe_curve(const std::vector<double>& zeta_list,
                   const std::vector<double>& temperature_grid,
                   double sigma0_sq, const std::string& path);

// Eigenvalue histogram of one sampled design with the limiting density
// overlay: columns `lambda,empirical_density,mp_density`.
void emit_spectrum_csv(const ExperimentConfig& config, const std::string& path);

// Deviation bound vs empirical frequency at one radius: columns
// `kind,delta,bound,empirical_frequency`.
void emit_bounds_csv(const ExperimentConfig& config, const std::string& kind,
                     double delta, const std::string& path);

}  // namespace ridge
