#include "ridge/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ridge/errors.hpp"
#include "ridge/numerics.hpp"

#include <boost/math/distributions/gamma.hpp>

namespace ridge {

namespace {

void check_population(long n, double zeta, double sigma0_sq) {
  if (n <= 0) throw DomainError("sample count must be positive");
  if (!(zeta > 0.0) || !(zeta < 1.0))
    throw DomainError("aspect ratio must lie in (0, 1)");
  if (!(sigma0_sq > 0.0)) throw DomainError("noise variance must be positive");
}

double spd_log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  double log_det = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  return log_det;
}

double log_gamma_density(double nu, double omega) {
  return 0.5 * nu * std::log(0.5 * nu) - std::lgamma(0.5 * nu) +
         (0.5 * nu - 1.0) * std::log(omega) - 0.5 * nu * omega;
}

// Tilted spectral potentials behind the squared-error deviation rates.  The
// minus branch carries the pole at omega = a and controls upward deviations;
// the plus branch is entire in omega > 0 and controls downward ones.
double phi_minus(double omega, double a, double zeta) {
  return (1.0 - zeta) * (std::log(omega) - omega) +
         zeta * std::log(omega / (omega - a));
}

double phi_plus(double omega, double a, double zeta) {
  return (1.0 - zeta) * (std::log(omega) - omega) +
         zeta * std::log(omega / (omega + a));
}

double minus_branch_alpha_limit(double mu, double zeta) {
  return (1.0 + zeta - 2.0 * std::sqrt(zeta)) / ((1.0 - zeta) * mu);
}

double plus_branch_rate(double alpha, double mu, double zeta) {
  const double a = alpha * mu;
  const double s = 0.5 * (1.0 - a);
  const double omega = s + std::sqrt(s * s + a / (1.0 - zeta));
  return 0.5 * (zeta - 1.0 - phi_plus(omega, a, zeta) - alpha * zeta * mu);
}

}  // namespace

double student_t_logpdf(const Eigen::VectorXd& theta_hat,
                        const Eigen::VectorXd& theta0,
                        const Eigen::MatrixXd& sigma_pop, double zeta,
                        double sigma0_sq, long n) {
  const Eigen::Index d = theta0.size();
  if (d == 0) throw ShapeError("parameter vectors must be non-empty");
  if (theta_hat.size() != d)
    throw ShapeError("estimate and reference dimensions differ");
  if (sigma_pop.rows() != d || sigma_pop.cols() != d)
    throw ShapeError("population covariance has the wrong shape");
  check_population(n, zeta, sigma0_sq);
  if (d > n)
    throw DegreesOfFreedomError("estimator law needs at least d observations");

  const double nu = static_cast<double>(n + 1 - d);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_pop);
  if (llt.info() != Eigen::Success)
    throw CovarianceNotPD("population covariance is not positive definite");

  // Scale prefactor of the quadratic form; the density needs Sigma itself,
  // never its inverse.
  const double c = (1.0 - zeta + 1.0 / static_cast<double>(n)) /
                   (zeta * sigma0_sq);
  const Eigen::VectorXd r = theta_hat - theta0;
  const double quad = c * r.dot(sigma_pop * r);
  const double dd = static_cast<double>(d);
  const double log_norm =
      std::lgamma(0.5 * (nu + dd)) - std::lgamma(0.5 * nu) +
      0.5 * (dd * std::log(c / (std::numbers::pi * nu)) + spd_log_det(llt));
  return log_norm - 0.5 * (nu + dd) * std::log1p(quad / nu);
}

GaussianLaw map_conditional_gaussian(const Eigen::MatrixXd& c_hat,
                                     const Eigen::VectorXd& theta0, double zeta,
                                     double sigma_sq, double eta,
                                     double sigma0_sq) {
  const Eigen::Index d = c_hat.rows();
  if (d == 0 || c_hat.cols() != d)
    throw ShapeError("sample covariance must be square and non-empty");
  if (theta0.size() != d)
    throw ShapeError("reference parameter dimension mismatch");
  if (!(zeta > 0.0)) throw DomainError("aspect ratio must be positive");
  if (!(sigma_sq > 0.0)) throw DomainError("noise variance must be positive");
  if (!(eta >= 0.0) || !std::isfinite(eta))
    throw DomainError("ridge strength must be finite and non-negative");
  if (!(sigma0_sq > 0.0))
    throw DomainError("true noise variance must be positive");

  const double shift = zeta * sigma_sq * eta;
  Eigen::MatrixXd shifted = c_hat;
  shifted.diagonal().array() += shift;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success) {
    if (eta == 0.0)
      throw SingularSystem("sample covariance is singular and no ridge is applied");
    throw CovarianceNotPD("shifted sample covariance is not positive definite");
  }

  GaussianLaw law;
  law.mean = llt.solve(c_hat * theta0);
  const Eigen::MatrixXd half = llt.solve(c_hat);  // C_s^{-1} C
  Eigen::MatrixXd cov = zeta * sigma0_sq * llt.solve(half.transpose());
  law.covariance = 0.5 * (cov + cov.transpose());
  return law;
}

double noise_mgf(double alpha, long n, double zeta, double sigma0_sq) {
  check_population(n, zeta, sigma0_sq);
  if (!std::isfinite(alpha)) throw DomainError("mgf argument must be finite");
  if (!(alpha < 1.0 / sigma0_sq))
    throw MGFPole("mgf diverges at alpha >= 1/sigma0_sq");
  return std::exp(-0.5 * static_cast<double>(n) * (1.0 - zeta) *
                  std::log1p(-alpha * sigma0_sq));
}

std::complex<double> noise_cf(double a, long n, double zeta, double sigma0_sq) {
  check_population(n, zeta, sigma0_sq);
  if (!std::isfinite(a)) throw DomainError("cf argument must be finite");
  const std::complex<double> w(1.0, -2.0 * a * sigma0_sq);
  return std::exp(-0.5 * static_cast<double>(n) * (1.0 - zeta) * std::log(w));
}

TailBound noise_tail_bound(double delta, long n, double zeta,
                           double sigma0_sq) {
  check_population(n, zeta, sigma0_sq);
  const double limit = 1.0 - zeta;
  const double u = delta / sigma0_sq;
  if (!(delta > 0.0) || !(u < limit))
    throw DeltaOutOfRange(
        "deviation radius must lie in (0, sigma0_sq*(1-zeta))");

  TailBound tail;
  tail.delta = delta;
  tail.lower_rate = limit * std::log(limit / (limit - u)) - u;
  tail.upper_rate = limit * std::log(limit / (limit + u)) + u;
  const double half_n = 0.5 * static_cast<double>(n);
  tail.bound = std::min(2.0, std::exp(-half_n * tail.lower_rate) +
                                 std::exp(-half_n * tail.upper_rate));
  return tail;
}

double gamma_density(double nu, double omega) {
  if (!(nu > 0.0)) throw DomainError("gamma law needs positive degrees of freedom");
  if (!(omega > 0.0)) throw DomainError("gamma density argument must be positive");
  return std::exp(log_gamma_density(nu, omega));
}

std::pair<double, double> mse_mean_var(
    long n, long d, double sigma0_sq,
    const std::vector<double>& sigma_pop_eigs) {
  if (d <= 0) throw DomainError("parameter dimension must be positive");
  if (n <= 0) throw DomainError("sample count must be positive");
  if (!(sigma0_sq > 0.0)) throw DomainError("noise variance must be positive");
  if (static_cast<long>(sigma_pop_eigs.size()) != d)
    throw ShapeError("eigenvalue list does not match the dimension");
  for (double lam : sigma_pop_eigs)
    if (!(lam > 0.0))
      throw DomainError("population eigenvalues must be positive");
  if (n <= d + 1)
    throw DegreesOfFreedomError("squared-error mean needs N > d + 1");

  const double nn = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  const double zeta = dd / nn;
  double tr_inv = 0.0, tr_inv_sq = 0.0;
  for (double lam : sigma_pop_eigs) {
    tr_inv += 1.0 / lam;
    tr_inv_sq += 1.0 / (lam * lam);
  }
  const double mean =
      zeta * sigma0_sq / (1.0 - zeta - 1.0 / nn) * (tr_inv / dd);
  const double var = 2.0 * zeta * zeta * sigma0_sq * sigma0_sq /
                     ((1.0 - zeta) * (1.0 - zeta)) * (tr_inv_sq / (dd * dd));
  return {mean, var};
}

std::complex<double> mse_cf(double a, long n, long d, double sigma0_sq,
                            const std::vector<double>& sigma_pop_eigs) {
  if (d <= 0) throw DomainError("parameter dimension must be positive");
  if (n <= 0) throw DomainError("sample count must be positive");
  if (!(sigma0_sq > 0.0)) throw DomainError("noise variance must be positive");
  if (!std::isfinite(a)) throw DomainError("cf argument must be finite");
  if (static_cast<long>(sigma_pop_eigs.size()) != d)
    throw ShapeError("eigenvalue list does not match the dimension");
  for (double lam : sigma_pop_eigs)
    if (!(lam > 0.0))
      throw DomainError("population eigenvalues must be positive");
  if (n + 1 - d < 1)
    throw DegreesOfFreedomError("squared-error law needs at least d observations");

  const double nn = static_cast<double>(n);
  const double zeta = static_cast<double>(d) / nn;
  const double nu = static_cast<double>(n + 1 - d);
  const double coef = 2.0 * a * zeta * sigma0_sq / (1.0 - zeta + 1.0 / nn);

  // Integration window from extreme quantiles of the mixing gamma law
  // (shape nu/2, scale 2/nu, mean one).
  const boost::math::gamma_distribution<double> mixing(0.5 * nu, 2.0 / nu);
  const double lo = boost::math::quantile(mixing, 1e-12);
  const double hi = boost::math::quantile(mixing, 1.0 - 1e-12);

  auto integrand = [&](double omega) {
    std::complex<double> log_f(log_gamma_density(nu, omega), 0.0);
    for (double lam : sigma_pop_eigs)
      log_f -= 0.5 * std::log(std::complex<double>(1.0, -coef / (omega * lam)));
    return std::exp(log_f);
  };
  return integrate_complex(integrand, lo, hi, 1e-10);
}

std::pair<RateFunctionEval, RateFunctionEval> mse_rate_functions(double alpha,
                                                                 double mu,
                                                                 double zeta) {
  if (!(mu > 0.0)) throw DomainError("location scale must be positive");
  if (!(zeta > 0.0) || !(zeta < 1.0))
    throw DomainError("aspect ratio must lie in (0, 1)");
  if (!(alpha > 0.0)) throw AlphaOutOfRange("tilt parameter must be positive");
  const double alpha_limit = minus_branch_alpha_limit(mu, zeta);
  if (!(alpha < alpha_limit))
    throw AlphaOutOfRange(
        "tilt parameter exceeds the upper-deviation validity range");

  const double a = alpha * mu;
  const double half = 0.5 * (1.0 + a);
  const double omega_minus =
      half + std::sqrt(half * half - a / (1.0 - zeta));
  const double rate_minus =
      0.5 * (zeta - 1.0 - phi_minus(omega_minus, a, zeta) + alpha * zeta * mu);

  const double s = 0.5 * (1.0 - a);
  const double omega_plus = s + std::sqrt(s * s + a / (1.0 - zeta));
  const double rate_plus = plus_branch_rate(alpha, mu, zeta);

  return {RateFunctionEval(alpha, omega_minus, rate_minus, {0.0, alpha_limit}),
          RateFunctionEval(alpha, omega_plus, rate_plus,
                           {0.0, std::numeric_limits<double>::infinity()})};
}

double mse_deviation_bound(double delta, double alpha, long n, long d,
                           double sigma0_sq, double lambda_min,
                           double lambda_max, double zeta) {
  if (n <= 0 || d <= 0) throw DomainError("counts must be positive");
  if (!(sigma0_sq > 0.0)) throw DomainError("noise variance must be positive");
  if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min))
    throw DomainError("population eigenvalue range is invalid");
  if (!(zeta > 0.0) || !(zeta < 1.0))
    throw DomainError("aspect ratio must lie in (0, 1)");
  if (!(delta > 0.0)) throw DeltaOutOfRange("deviation radius must be positive");

  // Upward deviations are driven by the smallest location scale (largest
  // eigenvalue), downward ones by the largest.
  const double mu_upper = zeta * sigma0_sq / ((1.0 - zeta) * lambda_max);
  const double mu_lower = zeta * sigma0_sq / ((1.0 - zeta) * lambda_min);
  if (mu_upper < 1.0 && !(delta > 1.0 - mu_upper))
    throw DeltaOutOfRange(
        "upper-deviation rate cannot be positive; radius must exceed "
        "1 - mu(lambda_max)");

  const auto rates = mse_rate_functions(alpha, mu_upper, zeta);
  const double shift = 0.5 * alpha * zeta * delta;
  const double exponent_minus = rates.first.rate + shift;
  const double exponent_plus = plus_branch_rate(alpha, mu_lower, zeta) + shift;
  const double nn = static_cast<double>(n);
  return std::exp(-nn * exponent_minus) + std::exp(-nn * exponent_plus);
}

double mse_deviation_bound(double delta, long n, long d, double sigma0_sq,
                           double lambda_min, double lambda_max, double zeta) {
  if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min))
    throw DomainError("population eigenvalue range is invalid");
  if (!(zeta > 0.0) || !(zeta < 1.0))
    throw DomainError("aspect ratio must lie in (0, 1)");
  if (!(sigma0_sq > 0.0)) throw DomainError("noise variance must be positive");

  const double mu_upper = zeta * sigma0_sq / ((1.0 - zeta) * lambda_max);
  const double alpha_limit = minus_branch_alpha_limit(mu_upper, zeta);
  auto objective = [&](double alpha) {
    return mse_deviation_bound(delta, alpha, n, d, sigma0_sq, lambda_min,
                               lambda_max, zeta);
  };
  const double margin = 1e-8 * alpha_limit;
  const double alpha_star =
      golden_section_min(objective, margin, alpha_limit - margin, 1e-8);
  return objective(alpha_star);
}

}  // namespace ridge
