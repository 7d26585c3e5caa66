#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "ridge/estimators.hpp"
#include "ridge/model.hpp"

namespace ridge {

// Two-sided Chernoff bound on the residual noise estimate.  lower_rate and
// upper_rate are the optimized exponents for the two tails; bound is
// exp(-N*lower_rate/2) + exp(-N*upper_rate/2) capped at 2.
struct TailBound {
  double delta = 0.0;
  double bound = 0.0;
  double lower_rate = 0.0;
  double upper_rate = 0.0;
};

// Log-density of the least-squares estimator under a Gaussian population with
// covariance sigma_pop: a multivariate Student-t with N+1-d degrees of
// freedom centered at theta0.
double student_t_logpdf(const Eigen::VectorXd& theta_hat,
                        const Eigen::VectorXd& theta0,
                        const Eigen::MatrixXd& sigma_pop, double zeta,
                        double sigma0_sq, long n);

// Law of the ridge estimator conditional on a fixed sample covariance c_hat:
// Gaussian with mean C_s^{-1} C theta0 and covariance
// zeta*sigma0_sq * C_s^{-1} C C_s^{-1}, where C_s = C + zeta*sigma_sq*eta*I.
GaussianLaw map_conditional_gaussian(const Eigen::MatrixXd& c_hat,
                                     const Eigen::VectorXd& theta0, double zeta,
                                     double sigma_sq, double eta,
                                     double sigma0_sq);

// Moment-generating function of the residual sum of squares,
// exp(-(N/2)(1-zeta) log(1 - alpha*sigma0_sq)); poles at alpha >= 1/sigma0_sq.
double noise_mgf(double alpha, long n, double zeta, double sigma0_sq);

// Characteristic function of the residual sum of squares,
// (1 - 2i a sigma0_sq)^{-N(1-zeta)/2}, principal branch.
std::complex<double> noise_cf(double a, long n, double zeta, double sigma0_sq);

// Two-sided deviation bound for the residual noise estimate at radius delta;
// valid for delta in (0, sigma0_sq*(1-zeta)).
TailBound noise_tail_bound(double delta, long n, double zeta, double sigma0_sq);

// Density of the mean-one gamma law with nu degrees of freedom,
// nu^{nu/2} / (2^{nu/2} Gamma(nu/2)) * omega^{(nu-2)/2} exp(-nu*omega/2).
double gamma_density(double nu, double omega);

// Mean and variance of the per-component squared estimation error
// (1/d)||theta0 - theta_hat||^2 from the population eigenvalues.  The mean is
// exact at finite N; the variance is the leading large-(N,d) form.
std::pair<double, double> mse_mean_var(long n, long d, double sigma0_sq,
                                       const std::vector<double>& sigma_pop_eigs);

// Characteristic function of ||theta0 - theta_hat||^2: a gamma-mixture
// integral over the residual scale omega, evaluated by adaptive quadrature
// with the product over eigenvalues accumulated as a sum of complex logs.
std::complex<double> mse_cf(double a, long n, long d, double sigma0_sq,
                            const std::vector<double>& sigma_pop_eigs);

// Saddle points and large-deviation rates for the squared-error tails at
// location scale mu.  Returns the upper-deviation (minus) branch first and
// the lower-deviation (plus) branch second; each .rate is the exponent at
// delta = 0 and grows by alpha*zeta*delta/2 with the deviation radius.
std::pair<RateFunctionEval, RateFunctionEval> mse_rate_functions(double alpha,
                                                                 double mu,
                                                                 double zeta);

// Two-exponential upper bound on the probability that (1/d)||theta0 -
// theta_hat||^2 deviates from its mean by more than delta.  Exponent-order
// bound: both prefactors are set to 1.  The upper-deviation exponent is
// evaluated at mu(lambda_max) and the lower-deviation exponent at
// mu(lambda_min), with mu(lambda) = zeta*sigma0_sq/((1-zeta)*lambda).
double mse_deviation_bound(double delta, double alpha, long n, long d,
                           double sigma0_sq, double lambda_min,
                           double lambda_max, double zeta);

// Same bound with the Chernoff parameter chosen by a golden-section search
// over the admissible range.
double mse_deviation_bound(double delta, long n, long d, double sigma0_sq,
                           double lambda_min, double lambda_max, double zeta);

}  // namespace ridge
