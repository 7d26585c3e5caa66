#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ridge/model.hpp"

namespace ridge {

// Ensemble covariance of the binned empirical spectral density, estimated on
// a common grid.  Self-averaging shows up as this matrix shrinking with d.
struct CorrelationKernel {
  std::vector<double> grid;  // bin centers, increasing
  Eigen::MatrixXd matrix;    // symmetric, one row/col per bin
  int ensemble_size = 0;
  double bin_width = 0.0;
};

// Eigenvalues of the sample covariance, ascending.  For a scaled design
// (entries carrying 1/sqrt(d)) this is C = Z^T Z / N in the original unscaled
// entries, i.e. zeta times the stored Gram; for an unscaled design the raw
// Gram Z^T Z is eigensolved as-is.  Tiny negative values (>= -1e-12 relative)
// are clamped to zero.
std::vector<double> covariance_eigenvalues(const Eigen::MatrixXd& design,
                                           bool scaled);

// Marchenko-Pastur density on [(1-sqrt(zeta))^2, (1+sqrt(zeta))^2].
double mp_pdf(double lambda, double zeta);
std::pair<double, double> mp_edges(double zeta);
// CDF by edge-aware quadrature (exact 0/1 outside the support).
double mp_cdf(double x, double zeta);

// Integral of f against a spectral density.  Samples -> average over
// eigenvalues; MP -> quadrature with a sin^2 substitution that removes the
// square-root edge singularity; histogram -> midpoint mass sum.
double spectral_integral(const SpectralDensity& rho,
                         const std::function<double(double)>& f);

// Binned-density ensemble covariance on a shared grid over the pooled
// support; bins = 0 selects the Freedman-Diaconis count, always capped at 64.
CorrelationKernel estimate_correlation_kernel(
    const std::vector<std::vector<double>>& ensemble, int bins);

// sum_{ij} K(i,j) f(grid_i) g(grid_j) dlambda^2, the double integral every
// spectral variance formula consumes.
double kernel_double_integral(const CorrelationKernel& kernel,
                              const std::function<double(double)>& f,
                              const std::function<double(double)>& g);

}  // namespace ridge
