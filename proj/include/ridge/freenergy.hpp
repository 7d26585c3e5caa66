#pragma once

#include <optional>
#include <vector>

#include "ridge/model.hpp"
#include "ridge/spectra.hpp"

namespace ridge {

// One point of the temperature sweep; an empty value marks the divergent
// phase (beta < zeta), kept distinct from any floating-point number so
// serialization and comparisons stay exact.
struct FreeEnergyCurvePoint {
  double temperature = 0.0;
  double zeta = 0.0;
  std::optional<double> value;
};

// F, E and S of the theta-posterior at fixed sigma^2, with F = E - T S.
FreeEnergyBreakdown conditional_free_energy(const RegressionInstance& instance,
                                            double sigma_sq, double eta,
                                            double beta);

// Free energy with sigma^2 integrated out.  Finite beta returns the extensive
// value via adaptive quadrature of the sigma^2 integral in shifted log-space;
// beta = +infinity returns the per-observation density obtained by minimizing
// the Laplace bracket over sigma^2 (golden section, tol 1e-10).
double full_free_energy(const RegressionInstance& instance, double eta,
                        double beta, const NoisePrior& prior);

// Normalized posterior density of sigma^2 on the supplied grid (trapezoid
// normalization, weights computed in shifted log-space).
std::vector<double> marginal_sigma_density(const RegressionInstance& instance,
                                           double eta, double beta,
                                           const NoisePrior& prior,
                                           const std::vector<double>& grid);

// Disorder average of F/N for eta = 0 against a spectral density.
double ml_avg_fe_density(double zeta, double beta, double sigma_sq,
                         double sigma0_sq, const SpectralDensity& rho);

// Var(F/N) for eta = 0: log-log double integral against the spectral
// correlation kernel plus the explicit order-1/n term.
double ml_fe_density_variance(double zeta, double beta, double sigma_sq,
                              double sigma0_sq, long n,
                              const CorrelationKernel& corr);

// Large-(N,d) limit of the ML free energy density for identity population
// covariance; empty for beta < zeta where the density is unbounded below.
std::optional<double> asymptotic_ml_fe(double zeta, double beta,
                                       double sigma0_sq);

// Disorder and teacher average of F/N at ridge strength eta, teacher prior
// variance theta_prior_var.
double map_avg_fe_density(double zeta, double beta, double sigma_sq,
                          double sigma0_sq, double eta, double theta_prior_var,
                          const SpectralDensity& rho);

// Kernel part of Var(F/N) at ridge strength eta: the three-group bracket
// integrated against the spectral correlation kernel.  The order-1/n
// remainder has no closed form and must be estimated by simulation; n is
// accepted for signature symmetry and does not enter the returned value.
double map_fe_density_variance(double zeta, double beta, double sigma_sq,
                               double sigma0_sq, double eta,
                               double theta_prior_var,
                               const CorrelationKernel& corr, long n);

// Temperature sweep of asymptotic_ml_fe, zeta-major in input order.
std::vector<FreeEnergyCurvePoint> fe_curve(
    const std::vector<double>& zeta_list,
    const std::vector<double>& temperature_grid, double sigma0_sq);

}  // namespace ridge
