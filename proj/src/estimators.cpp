#include "ridge/estimators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ridge/detail/gram_path.hpp"
#include "ridge/errors.hpp"
#include "ridge/numerics.hpp"
#include "ridge/spectra.hpp"

namespace ridge {

namespace {

using detail::GramPath;

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_sigma_eta(double sigma_sq, double eta) {
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) {
    throw DomainError("sigma_sq must be a positive finite real");
  }
  if (eta < 0.0 || !std::isfinite(eta)) {
    throw DomainError("eta must be a nonnegative finite real");
  }
}

Eigen::VectorXd ridge_solve(const RegressionInstance& instance, double shift) {
  const Eigen::MatrixXd& z = instance.design();
  Eigen::MatrixXd gram = z.transpose() * z;
  if (shift == 0.0 && instance.n() < instance.d()) {
    throw SingularSystem("least squares needs N >= d");
  }
  if (shift > 0.0) gram.diagonal().array() += shift;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw SingularSystem("gram matrix (plus shift) is not positive definite");
  }
  return llt.solve(z.transpose() * instance.targets());
}

// The update map psi(v) behind solve_sigma / sigma_recursion_step.
class SigmaPsi {
 public:
  SigmaPsi(const RegressionInstance& instance, double eta, double beta,
           const NoisePrior& prior)
      : path_(instance),
        n_(static_cast<double>(instance.n())),
        zeta_(instance.zeta()),
        eta_(eta),
        beta_(beta),
        prior_(prior) {}

  double operator()(double v) const {
    double shift = v * eta_;
    if (beta_ == kInf) {
      double value = path_.rss(shift) / n_;
      if (prior_.kind != NoisePrior::Kind::Flat) {
        value += 2.0 * v * v / n_ * prior_.log_density_derivative(v);
      }
      return value;
    }
    double gap = beta_ - zeta_;
    double value = beta_ / (gap * n_) * path_.rss(shift) -
                   v * v * eta_ / (gap * n_) * path_.trace_inverse(shift);
    if (prior_.kind != NoisePrior::Kind::Flat) {
      value += 2.0 * v * v * beta_ / (gap * n_) * prior_.log_density_derivative(v);
    }
    return value;
  }

  double initial_guess() const { return path_.rss(eta_) / n_; }

 private:
  GramPath path_;
  double n_;
  double zeta_;
  double eta_;
  double beta_;
  NoisePrior prior_;
};

void check_recursion_inputs(const RegressionInstance& instance, double eta,
                            double beta) {
  if (eta < 0.0 || !std::isfinite(eta)) {
    throw DomainError("eta must be a nonnegative finite real");
  }
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (beta != kInf) {
    if (beta <= instance.zeta()) {
      throw TemperatureOutOfRange(
          "finite beta must exceed zeta = d/N for the noise fixed point");
    }
    if (!instance.scaled()) {
      throw DomainError(
          "finite-temperature noise solves expect the scaled design convention");
    }
  }
}

}  // namespace

Eigen::VectorXd GaussianLaw::sample(RngStream& stream) const {
  return sample_many(1, stream).col(0);
}

Eigen::MatrixXd GaussianLaw::sample_many(Eigen::Index count,
                                         RngStream& stream) const {
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw CovarianceNotPD("law covariance is not positive definite");
  }
  Eigen::MatrixXd l = llt.matrixL();
  Eigen::Index d = mean.size();
  Eigen::MatrixXd out(d, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    Eigen::VectorXd g(d);
    for (Eigen::Index i = 0; i < d; ++i) g[i] = stream.normal();
    out.col(k) = mean + l * g;
  }
  return out;
}

Eigen::VectorXd map_estimate(const RegressionInstance& instance, double sigma_sq,
                             double eta) {
  check_sigma_eta(sigma_sq, eta);
  return ridge_solve(instance, sigma_sq * eta);
}

Eigen::VectorXd ml_estimate(const RegressionInstance& instance) {
  return ridge_solve(instance, 0.0);
}

double ml_noise_estimate(const RegressionInstance& instance) {
  Eigen::VectorXd theta = ml_estimate(instance);
  double rss = (instance.targets() - instance.design() * theta).squaredNorm();
  return rss / static_cast<double>(instance.n());
}

GaussianLaw gibbs_conditional(const RegressionInstance& instance, double sigma_sq,
                              double eta, double beta) {
  check_sigma_eta(sigma_sq, eta);
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("gibbs_conditional needs finite beta > 0");
  }
  const Eigen::MatrixXd& z = instance.design();
  Eigen::MatrixXd gram = z.transpose() * z;
  double shift = sigma_sq * eta;
  if (shift == 0.0 && instance.n() < instance.d()) {
    throw SingularSystem("least squares needs N >= d");
  }
  if (shift > 0.0) gram.diagonal().array() += shift;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw SingularSystem("gram matrix (plus shift) is not positive definite");
  }
  GaussianLaw law;
  law.mean = llt.solve(z.transpose() * instance.targets());
  Eigen::MatrixXd inv =
      llt.solve(Eigen::MatrixXd::Identity(instance.d(), instance.d()));
  law.covariance = (sigma_sq / beta) * 0.5 * (inv + inv.transpose());
  return law;
}

SigmaSolve solve_sigma(const RegressionInstance& instance, double eta, double beta,
                       const NoisePrior& prior, double tol, int max_iter) {
  check_recursion_inputs(instance, eta, beta);
  if (prior.kind == NoisePrior::Kind::Delta) {
    return SigmaSolve{prior.sigma_sq_0, 0, 0.0};
  }
  if (eta == 0.0 && prior.kind == NoisePrior::Kind::Flat) {
    // Without a ridge the update map does not depend on v, so one evaluation
    // is the exact fixed point.
    double x = ml_noise_estimate(instance);
    if (beta != kInf) x *= beta / (beta - instance.zeta());
    return SigmaSolve{x, 1, 0.0};
  }
  SigmaPsi psi(instance, eta, beta, prior);
  auto map = [&psi](double v) { return psi(v); };
  FixedPointResult res =
      damped_fixed_point(map, psi.initial_guess(), 0.5, tol, max_iter);
  if (!res.converged) {
    double defect = std::abs(psi(res.x) - res.x);
    throw NoConvergence("noise fixed point did not converge", res.x, defect);
  }
  return SigmaSolve{res.x, res.iterations, res.residual};
}

double sigma_recursion_step(double v, const RegressionInstance& instance,
                            double eta, double beta, const NoisePrior& prior) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError("noise level v must be positive");
  }
  check_recursion_inputs(instance, eta, beta);
  if (prior.kind == NoisePrior::Kind::Delta) return prior.sigma_sq_0;
  SigmaPsi psi(instance, eta, beta, prior);
  return psi(v);
}

MmseEstimate mmse_estimate(const RegressionInstance& instance, double eta,
                           const NoisePrior& prior) {
  if (eta < 0.0 || !std::isfinite(eta)) {
    throw DomainError("eta must be a nonnegative finite real");
  }
  if (prior.kind == NoisePrior::Kind::Delta) {
    MmseEstimate est;
    est.sigma_sq = prior.sigma_sq_0;
    est.theta = map_estimate(instance, prior.sigma_sq_0, eta);
    return est;
  }
  GramPath path(instance);
  const double n = static_cast<double>(instance.n());
  const double d = static_cast<double>(instance.d());
  if (eta == 0.0 && path.s[0] <= 0.0) {
    throw SingularSystem("least squares needs a positive definite gram matrix");
  }
  const double v0 = path.rss(eta) / n;
  const double v_max = 10.0 * v0;

  // Shifted log-weight of the sigma^2 marginal at beta = 1.
  auto log_weight = [&](double v) {
    double shift = v * eta;
    double f1 = 0.5 * d + path.quad(shift) / (2.0 * v) -
                0.5 * (d * std::log(2.0 * M_PI * M_E * v) - path.log_det(shift));
    double g = -(f1 + 0.5 * n * std::log(2.0 * M_PI * v));
    if (prior.kind != NoisePrior::Kind::Flat) g += prior.log_density(v);
    return g;
  };

  double peak = -kInf;
  const int scan = 400;
  for (int i = 0; i < scan; ++i) {
    double v = v_max * std::pow(1e-9, 1.0 - (i + 0.5) / scan);
    double g = log_weight(v);
    if (std::isfinite(g) && g > peak) peak = g;
  }
  if (!std::isfinite(peak)) {
    throw QuadratureError("sigma^2 marginal underflows on the whole interval");
  }

  auto weight = [&](double v) {
    if (!(v > 0.0)) return 0.0;
    double g = log_weight(v) - peak;
    if (!std::isfinite(g) || g < -745.0) return 0.0;
    return std::exp(g);
  };

  const double tol = 1e-8;
  double denom = integrate(weight, 0.0, v_max, tol);
  if (!(denom > 0.0)) {
    throw QuadratureError("sigma^2 marginal has vanishing mass");
  }
  double num_sigma =
      integrate([&](double v) { return weight(v) * v; }, 0.0, v_max, tol);

  Eigen::VectorXd coef(path.s.size());
  for (Eigen::Index i = 0; i < path.s.size(); ++i) {
    double si = path.s[i];
    double ci = path.c[i];
    coef[i] = integrate(
        [&](double v) { return weight(v) * ci / (si + v * eta); }, 0.0, v_max,
        tol);
  }

  MmseEstimate est;
  est.sigma_sq = num_sigma / denom;
  est.theta = path.q * (coef / denom);
  return est;
}

double deterministic_sigma_map(double v, double zeta, double eta, double beta,
                               double sigma0_sq, double theta_prior_var,
                               const SpectralDensity& rho, const NoisePrior& prior,
                               long n) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError("noise level v must be positive");
  }
  if (!(zeta > 0.0) || !(zeta < 1.0)) throw DomainError("zeta must lie in (0,1)");
  if (eta < 0.0 || !std::isfinite(eta)) {
    throw DomainError("eta must be a nonnegative finite real");
  }
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (beta != kInf && beta <= zeta) {
    throw TemperatureOutOfRange(
        "finite beta must exceed zeta for the noise fixed point");
  }
  if (prior.kind == NoisePrior::Kind::Delta) return prior.sigma_sq_0;

  const double shift = zeta * v * eta;
  double ratio_sq = 0.0;       // integral of (zeta v eta / (lambda + shift))^2
  double ratio_sq_lam = 0.0;   // same weight times lambda
  if (shift > 0.0) {
    ratio_sq = spectral_integral(rho, [shift](double lam) {
      double r = shift / (lam + shift);
      return r * r;
    });
    ratio_sq_lam = spectral_integral(rho, [shift](double lam) {
      double r = shift / (lam + shift);
      return r * r * lam;
    });
  }

  double value;
  if (beta == kInf) {
    value = sigma0_sq * (1.0 - zeta + zeta * ratio_sq) +
            theta_prior_var * ratio_sq_lam;
    if (prior.kind != NoisePrior::Kind::Flat) {
      value += 2.0 * v * v / static_cast<double>(n) *
               prior.log_density_derivative(v);
    }
    return value;
  }

  const double gap = beta - zeta;
  value = beta * sigma0_sq / gap * (1.0 - zeta + zeta * ratio_sq) +
          beta * theta_prior_var / gap * ratio_sq_lam;
  if (shift > 0.0) {
    double resolvent =
        spectral_integral(rho, [shift](double lam) { return 1.0 / (lam + shift); });
    value -= v * v * eta * zeta * zeta / gap * resolvent;
  }
  if (prior.kind != NoisePrior::Kind::Flat) {
    value += 2.0 * v * v * beta / (gap * static_cast<double>(n)) *
             prior.log_density_derivative(v);
  }
  return value;
}

}  // namespace ridge
