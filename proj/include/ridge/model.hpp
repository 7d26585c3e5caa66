#pragma once

#include <Eigen/Dense>
#include <limits>
#include <utility>
#include <vector>

#include "ridge/errors.hpp"

namespace ridge {

// Prior over the noise variance sigma^2.  Delta pins sigma^2 exactly and its
// density derivative is never consulted; Flat has derivative zero.
struct NoisePrior {
  enum class Kind { Flat, Delta, InverseGamma };

  Kind kind = Kind::Flat;
  double sigma_sq_0 = 0.0;  // Delta location
  double shape = 0.0;       // InverseGamma(shape, rate)
  double rate = 0.0;

  static NoisePrior flat() { return {}; }
  static NoisePrior delta(double sigma_sq_0);
  static NoisePrior inverse_gamma(double shape, double rate);

  // d/d(sigma^2) log P(sigma^2)
  double log_density_derivative(double sigma_sq) const;
  // log P(sigma^2) up to an additive constant (Flat contributes 0)
  double log_density(double sigma_sq) const;
};

// One teacher draw: t = Z theta0 + eps with eps ~ N(0, sigma0^2 I).
// `scaled` records whether the stored design entries carry the 1/sqrt(d)
// convention used by all asymptotic formulas.  Immutable.
class RegressionInstance {
 public:
  RegressionInstance(Eigen::MatrixXd design, Eigen::VectorXd targets,
                     Eigen::VectorXd theta0, double sigma0_sq, bool scaled);

  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const Eigen::VectorXd& theta0() const { return theta0_; }
  double sigma0_sq() const { return sigma0_sq_; }
  bool scaled() const { return scaled_; }

  Eigen::Index n() const { return design_.rows(); }
  Eigen::Index d() const { return design_.cols(); }
  double zeta() const { return static_cast<double>(d()) / static_cast<double>(n()); }

 private:
  Eigen::MatrixXd design_;
  Eigen::VectorXd targets_;
  Eigen::VectorXd theta0_;
  double sigma0_sq_;
  bool scaled_;
};

// Inverse temperature, ridge strength and noise prior.  beta = +infinity is
// the exact zero-temperature (MAP/ML) limit, not a large float.
struct HyperParams {
  double beta = 1.0;
  double eta = 0.0;
  NoisePrior noise_prior;

  HyperParams() = default;
  HyperParams(double beta_, double eta_, NoisePrior prior = NoisePrior::flat());

  bool zero_temperature() const {
    return beta == std::numeric_limits<double>::infinity();
  }
  double temperature() const { return zero_temperature() ? 0.0 : 1.0 / beta; }
};

// Population-level description: row covariance Sigma, teacher prior variance
// S^2 (S^2 = 0 means a fixed teacher), and aspect ratio zeta = d/N.
class PopulationModel {
 public:
  PopulationModel(Eigen::MatrixXd sigma_pop, double theta_prior_var, double zeta);

  const Eigen::MatrixXd& sigma_pop() const { return sigma_pop_; }
  double theta_prior_var() const { return theta_prior_var_; }
  double zeta() const { return zeta_; }
  Eigen::Index d() const { return sigma_pop_.rows(); }

 private:
  Eigen::MatrixXd sigma_pop_;
  double theta_prior_var_;
  double zeta_;
};

// Eigenvalue density of the sample covariance C = Z^T Z / N: either raw
// samples, the analytic Marchenko-Pastur limit, or a histogram.
class SpectralDensity {
 public:
  enum class Kind { Samples, MarchenkoPastur, Histogram };

  static SpectralDensity from_samples(std::vector<double> eigenvalues);
  static SpectralDensity marchenko_pastur(double zeta);
  static SpectralDensity histogram(std::vector<double> bin_edges,
                                   std::vector<double> masses);

  Kind kind() const { return kind_; }
  const std::vector<double>& samples() const { return samples_; }
  double zeta() const { return zeta_; }
  const std::vector<double>& bin_edges() const { return bin_edges_; }
  const std::vector<double>& masses() const { return masses_; }

 private:
  SpectralDensity() = default;
  Kind kind_ = Kind::Samples;
  std::vector<double> samples_;   // Samples: ascending
  double zeta_ = 0.0;             // MarchenkoPastur
  std::vector<double> bin_edges_; // Histogram: size m+1, ascending
  std::vector<double> masses_;    // Histogram: size m, sums to 1
};

// Helmholtz split F = E - T S, validated at construction.
struct FreeEnergyBreakdown {
  double free_energy;
  double avg_energy;
  double entropy;
  double temperature;

  FreeEnergyBreakdown(double f, double e, double s, double t);
};

// One evaluated large-deviation rate branch: the saddle omega0 and the rate
// value at a given alpha, plus the alpha interval on which the branch exists.
struct RateFunctionEval {
  double alpha;
  double saddle;
  double rate;
  std::pair<double, double> valid_alpha_range;

  RateFunctionEval(double alpha_, double saddle_, double rate_,
                   std::pair<double, double> range);
};

}  // namespace ridge
