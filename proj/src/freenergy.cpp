#include "ridge/freenergy.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <functional>
#include <limits>

#include "ridge/detail/gram_path.hpp"
#include "ridge/errors.hpp"
#include "ridge/numerics.hpp"

namespace ridge {

namespace {

using detail::GramPath;

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_basic(double sigma_sq, double eta) {
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) {
    throw DomainError("sigma_sq must be a positive finite real");
  }
  if (eta < 0.0 || !std::isfinite(eta)) {
    throw DomainError("eta must be a nonnegative finite real");
  }
}

void check_zeta_beta(double zeta, double beta) {
  if (!(zeta > 0.0) || !(zeta < 1.0)) throw DomainError("zeta must lie in (0,1)");
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("beta must be a positive finite real");
  }
}

// log lambda (and friends) need the density to live on lambda > 0.
void require_positive_support(const SpectralDensity& rho) {
  switch (rho.kind()) {
    case SpectralDensity::Kind::Samples:
      if (!rho.samples().empty() && rho.samples().front() <= 0.0) {
        throw SpectrumDomainError("spectral density has mass at lambda <= 0");
      }
      break;
    case SpectralDensity::Kind::Histogram:
      for (std::size_t i = 0; i < rho.masses().size(); ++i) {
        double mid = 0.5 * (rho.bin_edges()[i] + rho.bin_edges()[i + 1]);
        if (rho.masses()[i] > 0.0 && mid <= 0.0) {
          throw SpectrumDomainError("spectral density has mass at lambda <= 0");
        }
      }
      break;
    case SpectralDensity::Kind::MarchenkoPastur:
      break;  // support is [(1-sqrt(zeta))^2, (1+sqrt(zeta))^2], positive
  }
}

void require_positive_grid(const CorrelationKernel& corr) {
  for (double lam : corr.grid) {
    if (lam <= 0.0) {
      throw SpectrumDomainError("correlation kernel grid must be positive");
    }
  }
}

// Conditional free energy at sigma^2 = v through the spectral path; O(d) per
// evaluation after the one-off eigensolve.
double conditional_fe_on_path(const GramPath& path, double n, double d, double v,
                              double eta, double beta) {
  double shift = v * eta;
  double entropy =
      0.5 * (d * std::log(2.0 * M_PI * M_E * v / beta) - path.log_det(shift));
  (void)n;
  return 0.5 * d / beta + path.quad(shift) / (2.0 * v) - entropy / beta;
}

struct LogWeight {
  const GramPath& path;
  double n, d, eta, beta;
  const NoisePrior& prior;

  double operator()(double v) const {
    double g = -beta * (conditional_fe_on_path(path, n, d, v, eta, beta) +
                        0.5 * n * std::log(2.0 * M_PI * v));
    if (prior.kind != NoisePrior::Kind::Flat) g += beta * prior.log_density(v);
    return g;
  }
};

}  // namespace

FreeEnergyBreakdown conditional_free_energy(const RegressionInstance& instance,
                                            double sigma_sq, double eta,
                                            double beta) {
  check_basic(sigma_sq, eta);
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("conditional free energy needs finite beta > 0");
  }
  const Eigen::MatrixXd& z = instance.design();
  const Eigen::VectorXd& t = instance.targets();
  const double d = static_cast<double>(instance.d());
  double shift = sigma_sq * eta;
  if (shift == 0.0 && instance.n() < instance.d()) {
    throw SingularSystem("least squares needs N >= d");
  }
  Eigen::MatrixXd gram = z.transpose() * z;
  if (shift > 0.0) gram.diagonal().array() += shift;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw SingularSystem("gram matrix (plus shift) is not positive definite");
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < instance.d(); ++i) {
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  }
  Eigen::VectorXd rhs = z.transpose() * t;
  Eigen::VectorXd theta = llt.solve(rhs);

  double quad = t.squaredNorm() - rhs.dot(theta);
  double energy_min = (t - z * theta).squaredNorm() / (2.0 * sigma_sq) +
                      0.5 * eta * theta.squaredNorm();
  double temperature = 1.0 / beta;
  double entropy =
      0.5 * (d * std::log(2.0 * M_PI * M_E * sigma_sq / beta) - log_det);
  double free_energy =
      0.5 * d / beta + quad / (2.0 * sigma_sq) - temperature * entropy;
  double avg_energy = 0.5 * d / beta + energy_min;
  return FreeEnergyBreakdown(free_energy, avg_energy, entropy, temperature);
}

double full_free_energy(const RegressionInstance& instance, double eta,
                        double beta, const NoisePrior& prior) {
  if (eta < 0.0 || !std::isfinite(eta)) {
    throw DomainError("eta must be a nonnegative finite real");
  }
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  const double n = static_cast<double>(instance.n());
  const double d = static_cast<double>(instance.d());

  if (beta != kInf && prior.kind == NoisePrior::Kind::Delta) {
    double s0 = prior.sigma_sq_0;
    return conditional_free_energy(instance, s0, eta, beta).free_energy -
           n / (2.0 * beta) * std::log(2.0 * M_PI * s0);
  }

  GramPath path(instance);
  if (eta == 0.0 && path.s[0] <= 0.0) {
    throw SingularSystem("least squares needs a positive definite gram matrix");
  }
  const double v0 = path.rss(eta) / n;
  const double v_max = 10.0 * v0;

  if (beta == kInf) {
    // Ground-state bracket per observation; the minimum over theta at fixed
    // sigma^2 equals the single-power quadratic form over 2 sigma^2.
    auto bracket = [&](double v) {
      double value =
          path.quad(v * eta) / (2.0 * v * n) + 0.5 * std::log(2.0 * M_PI * v);
      if (prior.kind != NoisePrior::Kind::Flat &&
          prior.kind != NoisePrior::Kind::Delta) {
        value -= prior.log_density(v) / n;
      }
      return value;
    };
    if (prior.kind == NoisePrior::Kind::Delta) return bracket(prior.sigma_sq_0);

    const int scan = 200;
    std::vector<double> vs(scan), fs(scan);
    for (int i = 0; i < scan; ++i) {
      vs[i] = v_max * std::pow(1e-9, 1.0 - (i + 0.5) / scan);
      fs[i] = bracket(vs[i]);
    }
    int best = 0;
    for (int i = 1; i < scan; ++i) {
      if (fs[i] < fs[best]) best = i;
    }
    if (best == 0 || best == scan - 1) {
      throw OptimizerNoBracket(
          "sigma^2 bracket is monotone over the search interval");
    }
    double v_star = golden_section_min(bracket, vs[best - 1], vs[best + 1], 1e-10);
    return bracket(v_star);
  }

  LogWeight logw{path, n, d, eta, beta, prior};
  double peak = -kInf;
  const int scan = 400;
  for (int i = 0; i < scan; ++i) {
    double v = v_max * std::pow(1e-9, 1.0 - (i + 0.5) / scan);
    double g = logw(v);
    if (std::isfinite(g) && g > peak) peak = g;
  }
  if (!std::isfinite(peak)) {
    throw QuadratureError("sigma^2 integrand underflows everywhere");
  }
  auto integrand = [&](double v) {
    if (!(v > 0.0)) return 0.0;
    double g = logw(v) - peak;
    if (!std::isfinite(g) || g < -745.0) return 0.0;
    return std::exp(g);
  };
  double mass = integrate(integrand, 0.0, v_max, 1e-10);
  if (!(mass > 0.0)) throw QuadratureError("sigma^2 integral vanished");
  return -(peak + std::log(mass)) / beta;
}

std::vector<double> marginal_sigma_density(const RegressionInstance& instance,
                                           double eta, double beta,
                                           const NoisePrior& prior,
                                           const std::vector<double>& grid) {
  if (eta < 0.0 || !std::isfinite(eta)) {
    throw DomainError("eta must be a nonnegative finite real");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("marginal density needs finite beta > 0");
  }
  if (grid.size() < 2) throw DomainError("grid needs at least two points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw DomainError("grid values must be positive");
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw DomainError("grid must be strictly increasing");
    }
  }
  GramPath path(instance);
  if (eta == 0.0 && path.s[0] <= 0.0) {
    throw SingularSystem("least squares needs a positive definite gram matrix");
  }
  const double n = static_cast<double>(instance.n());
  const double d = static_cast<double>(instance.d());
  LogWeight logw{path, n, d, eta, beta, prior};

  std::vector<double> g(grid.size());
  double peak = -kInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    g[i] = logw(grid[i]);
    if (std::isfinite(g[i]) && g[i] > peak) peak = g[i];
  }
  if (!std::isfinite(peak)) {
    throw EmptySupport("sigma^2 weights underflow on the whole grid");
  }
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double shifted = g[i] - peak;
    w[i] = (std::isfinite(shifted) && shifted > -745.0) ? std::exp(shifted) : 0.0;
  }
  double norm = trapezoid(grid, w);
  if (!(norm > 0.0)) {
    throw EmptySupport("sigma^2 weights have vanishing trapezoid mass");
  }
  for (double& wi : w) wi /= norm;
  return w;
}

double ml_avg_fe_density(double zeta, double beta, double sigma_sq,
                         double sigma0_sq, const SpectralDensity& rho) {
  check_zeta_beta(zeta, beta);
  check_basic(sigma_sq, 0.0);
  if (!(sigma0_sq > 0.0)) throw DomainError("sigma0_sq must be positive");
  require_positive_support(rho);
  double log_term = spectral_integral(rho, [](double lam) { return std::log(lam); });
  return 0.5 * (sigma0_sq / sigma_sq) * (1.0 - zeta) +
         zeta / (2.0 * beta) *
             std::log(beta / (2.0 * M_PI * sigma_sq * zeta)) +
         zeta / (2.0 * beta) * log_term;
}

double ml_fe_density_variance(double zeta, double beta, double sigma_sq,
                              double sigma0_sq, long n,
                              const CorrelationKernel& corr) {
  check_zeta_beta(zeta, beta);
  check_basic(sigma_sq, 0.0);
  if (!(sigma0_sq > 0.0)) throw DomainError("sigma0_sq must be positive");
  if (n <= 0) throw DomainError("n must be positive");
  require_positive_grid(corr);
  auto log_f = [](double lam) { return std::log(lam); };
  double kernel_term = zeta * zeta / (4.0 * beta * beta) *
                       kernel_double_integral(corr, log_f, log_f);
  return kernel_term + sigma0_sq * sigma0_sq * (1.0 - zeta) /
                           (2.0 * sigma_sq * sigma_sq * static_cast<double>(n));
}

std::optional<double> asymptotic_ml_fe(double zeta, double beta,
                                       double sigma0_sq) {
  if (!(zeta > 0.0) || !(zeta < 1.0)) throw DomainError("zeta must lie in (0,1)");
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (!(sigma0_sq > 0.0)) throw DomainError("sigma0_sq must be positive");
  if (beta == kInf) {
    return 0.5 * std::log(2.0 * M_PI * M_E * sigma0_sq * (1.0 - zeta));
  }
  if (beta < zeta) return std::nullopt;
  // (beta - zeta) log(beta - zeta) -> 0 at the transition (0 log 0 = 0).
  double first = 0.0;
  if (beta > zeta) {
    first = (beta - zeta) / (2.0 * beta) *
            std::log(2.0 * M_PI * sigma0_sq * (1.0 - zeta) / (beta - zeta));
  }
  return first + 0.5 * (std::log(beta) + 1.0) -
         (zeta * std::log(zeta) + (1.0 - zeta) * std::log(1.0 - zeta) +
          2.0 * zeta) /
             (2.0 * beta);
}

double map_avg_fe_density(double zeta, double beta, double sigma_sq,
                          double sigma0_sq, double eta, double theta_prior_var,
                          const SpectralDensity& rho) {
  check_zeta_beta(zeta, beta);
  check_basic(sigma_sq, eta);
  if (!(sigma0_sq > 0.0)) throw DomainError("sigma0_sq must be positive");
  if (theta_prior_var < 0.0) {
    throw DomainError("theta_prior_var must be nonnegative");
  }
  const double shift = zeta * sigma_sq * eta;
  if (shift == 0.0) require_positive_support(rho);
  double ratio = spectral_integral(
      rho, [shift](double lam) { return lam / (lam + shift); });
  double log_term = spectral_integral(
      rho, [shift](double lam) { return std::log(lam + shift); });
  return zeta / (2.0 * beta) +
         0.5 * theta_prior_var * zeta * eta * ratio +
         0.5 * (sigma0_sq / sigma_sq) * (1.0 - zeta * ratio) +
         zeta / (2.0 * beta) * log_term -
         zeta / (2.0 * beta) *
             std::log(2.0 * M_PI * M_E * sigma_sq * zeta / beta);
}

double map_fe_density_variance(double zeta, double beta, double sigma_sq,
                               double sigma0_sq, double eta,
                               double theta_prior_var,
                               const CorrelationKernel& corr, long n) {
  check_zeta_beta(zeta, beta);
  check_basic(sigma_sq, eta);
  if (!(sigma0_sq > 0.0)) throw DomainError("sigma0_sq must be positive");
  if (theta_prior_var < 0.0) {
    throw DomainError("theta_prior_var must be nonnegative");
  }
  const double shift = zeta * sigma_sq * eta;
  if (shift == 0.0) require_positive_grid(corr);
  const double temperature = 1.0 / beta;
  const double s2 = theta_prior_var;

  auto u = [shift](double lam) { return lam / (lam + shift); };
  auto w = [shift](double lam) { return std::log(lam + shift); };
  auto a = [shift, s2, sigma0_sq, zeta, sigma_sq, eta](double lam) {
    double frac = lam / (lam + shift);
    return s2 * zeta * sigma_sq * eta * frac + sigma0_sq * (1.0 - zeta * frac);
  };

  double prod_coef =
      zeta * zeta / (4.0 * sigma_sq * sigma_sq) *
      (s2 * s2 * sigma_sq * sigma_sq * eta * eta + sigma0_sq * sigma0_sq -
       2.0 * sigma0_sq * s2 * sigma_sq * eta);
  double value = prod_coef * kernel_double_integral(corr, u, u) +
                 0.25 * temperature * temperature * zeta * zeta *
                     kernel_double_integral(corr, w, w) -
                 0.5 * temperature * zeta / sigma_sq *
                     kernel_double_integral(corr, a, w);
  // The order-1/n remainder is estimated from simulation by callers; the
  // closed-form part stops at the kernel integral.
  (void)n;
  return value;
}

std::vector<FreeEnergyCurvePoint> fe_curve(
    const std::vector<double>& zeta_list,
    const std::vector<double>& temperature_grid, double sigma0_sq) {
  for (double t : temperature_grid) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw DomainError("temperatures must be positive finite reals");
    }
  }
  std::vector<FreeEnergyCurvePoint> curve;
  curve.reserve(zeta_list.size() * temperature_grid.size());
  for (double zeta : zeta_list) {
    double t_c = 1.0 / zeta;
    for (double t : temperature_grid) {
      FreeEnergyCurvePoint point;
      point.temperature = t;
      point.zeta = zeta;
      if (t > t_c) {
        point.value = std::nullopt;
      } else {
        // Comparing in temperature keeps the phase boundary exact for grids
        // that contain 1/zeta as a value; the reciprocal can land a few ulps
        // on the wrong side of zeta.
        double beta = std::max(1.0 / t, zeta);
        point.value = asymptotic_ml_fe(zeta, beta, sigma0_sq);
      }
      curve.push_back(point);
    }
  }
  return curve;
}

}  // namespace ridge
