#pragma once

#include <Eigen/Dense>

#include "ridge/model.hpp"
#include "ridge/rng.hpp"

namespace ridge {

// Posterior conditional law of theta given sigma^2: mean J^{-1}_{s2 eta} Z^T t,
// covariance (sigma^2/beta) J^{-1}_{s2 eta}.
struct GaussianLaw {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Eigen::VectorXd sample(RngStream& stream) const;
  // Draws as columns; one Cholesky factorization shared across the batch.
  Eigen::MatrixXd sample_many(Eigen::Index count, RngStream& stream) const;
};

struct SigmaSolve {
  double sigma_sq = 0.0;
  int iterations = 0;
  double residual = 0.0;  // fixed-point defect |psi(v) - v| at the returned v
};

struct MmseEstimate {
  Eigen::VectorXd theta;
  double sigma_sq = 0.0;
};

// Ridge minimizer (J + sigma_sq*eta I)^{-1} Z^T t on the stored design.
Eigen::VectorXd map_estimate(const RegressionInstance& instance, double sigma_sq,
                             double eta);

// Least-squares solution J^{-1} Z^T t; requires full column rank.
Eigen::VectorXd ml_estimate(const RegressionInstance& instance);

// Residual mean square (1/N) ||t - Z theta_ml||^2.
double ml_noise_estimate(const RegressionInstance& instance);

GaussianLaw gibbs_conditional(const RegressionInstance& instance, double sigma_sq,
                              double eta, double beta);

// Damped iteration of the joint noise-level fixed point (theta re-solved each
// step through the spectral path).  Finite beta must exceed zeta = d/N and the
// instance must use the scaled design convention; beta = +infinity accepts
// either convention.  A Delta prior short-circuits to its location.
SigmaSolve solve_sigma(const RegressionInstance& instance, double eta, double beta,
                       const NoisePrior& prior, double tol = 1e-10,
                       int max_iter = 500);

// Posterior means of theta and sigma^2 at beta = 1, by adaptive quadrature of
// the sigma^2 marginal over (0, 10 * initial residual mean square) with the
// log-weight shifted by its maximum.
MmseEstimate mmse_estimate(const RegressionInstance& instance, double eta,
                           const NoisePrior& prior);

// One exact evaluation of the stochastic update map at noise level v.
double sigma_recursion_step(double v, const RegressionInstance& instance,
                            double eta, double beta, const NoisePrior& prior);

// Disorder-averaged update map evaluated against a spectral density; n only
// enters through the O(1/n) prior term.
double deterministic_sigma_map(double v, double zeta, double eta, double beta,
                               double sigma0_sq, double theta_prior_var,
                               const SpectralDensity& rho, const NoisePrior& prior,
                               long n);

}  // namespace ridge
