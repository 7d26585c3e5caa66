#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ridge/errors.hpp"
#include "ridge/estimators.hpp"
#include "ridge/freenergy.hpp"
#include "ridge/numerics.hpp"
#include "ridge/sampler.hpp"
#include "ridge/spectra.hpp"

using namespace ridge;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RegressionInstance draw_instance(long n, long d, double sigma0_sq,
                                 double theta_var, bool scaled,
                                 std::uint64_t seed, bool noiseless = false) {
  Eigen::MatrixXd z = sample_design(n, d, Eigen::MatrixXd::Identity(d, d),
                                    scaled, {seed, 0});
  Eigen::VectorXd th = sample_theta0(d, theta_var, {seed, 1});
  Eigen::VectorXd t = sample_targets(z, th, sigma0_sq, {seed, 2}, noiseless);
  return RegressionInstance(std::move(z), std::move(t), std::move(th),
                            sigma0_sq, scaled);
}

double min_energy(const RegressionInstance& inst, double sigma_sq, double eta) {
  const Eigen::VectorXd theta = map_estimate(inst, sigma_sq, eta);
  return (inst.targets() - inst.design() * theta).squaredNorm() /
             (2.0 * sigma_sq) +
         0.5 * eta * theta.squaredNorm();
}

CorrelationKernel zero_kernel() {
  CorrelationKernel corr;
  const int m = 16;
  for (int i = 0; i < m; ++i) corr.grid.push_back(0.2 + 0.1 * i);
  corr.matrix = Eigen::MatrixXd::Zero(m, m);
  corr.ensemble_size = 100;
  corr.bin_width = 0.1;
  return corr;
}

// Rank-one kernel u u^T with sum(u) = 0, so constant test functions drop out
// exactly as they do for binned density fluctuations.
CorrelationKernel separable_kernel() {
  CorrelationKernel corr;
  const int m = 24;
  const double lo = 0.2, hi = 3.0;
  const double width = (hi - lo) / m;
  Eigen::VectorXd u(m);
  for (int i = 0; i < m; ++i) {
    corr.grid.push_back(lo + (i + 0.5) * width);
    u[i] = std::sin(3.0 * i + 1.0);
  }
  u.array() -= u.mean();
  corr.matrix = u * u.transpose();
  corr.ensemble_size = 100;
  corr.bin_width = width;
  return corr;
}

}  // namespace

TEST_CASE("decomposition satisfies the Helmholtz identity", "[freenergy]") {
  for (std::uint64_t seed : {201, 202, 203}) {
    const auto inst = draw_instance(30, 12, 1.0, 1.0, false, seed);
    for (double beta : {0.5, 1.0, 2.5}) {
      for (double eta : {0.0, 0.7}) {
        for (double sigma_sq : {0.6, 1.4}) {
          const auto fe = conditional_free_energy(inst, sigma_sq, eta, beta);
          const double rhs = fe.avg_energy - fe.temperature * fe.entropy;
          CHECK(std::abs(fe.free_energy - rhs) <=
                1e-12 * std::max(1.0, std::abs(fe.free_energy)));
          CHECK(fe.temperature == 1.0 / beta);
        }
      }
    }
  }
}

TEST_CASE("average energy splits into thermal and minimized parts", "[freenergy]") {
  const auto inst = draw_instance(40, 16, 1.0, 1.0, false, 211);
  const double d = 16.0;
  for (double beta : {0.8, 3.0}) {
    for (double eta : {0.0, 0.5}) {
      const double sigma_sq = 1.2;
      const auto fe = conditional_free_energy(inst, sigma_sq, eta, beta);
      const double direct = min_energy(inst, sigma_sq, eta);
      CHECK(std::abs(fe.avg_energy - 0.5 * d / beta - direct) <=
            1e-10 * std::max(1.0, direct));
    }
  }
}

TEST_CASE("free energy ignores simultaneous row permutations", "[freenergy]") {
  const auto inst = draw_instance(25, 10, 1.0, 1.0, false, 223);
  RegressionInstance flipped(inst.design().colwise().reverse(),
                             inst.targets().reverse(), inst.theta0(), 1.0,
                             false);
  const auto a = conditional_free_energy(inst, 0.9, 0.3, 1.5);
  const auto b = conditional_free_energy(flipped, 0.9, 0.3, 1.5);
  CHECK(std::abs(a.free_energy - b.free_energy) <=
        1e-12 * std::max(1.0, std::abs(a.free_energy)));
  CHECK(std::abs(a.avg_energy - b.avg_energy) <=
        1e-12 * std::max(1.0, std::abs(a.avg_energy)));
  CHECK(std::abs(a.entropy - b.entropy) <=
        1e-12 * std::max(1.0, std::abs(a.entropy)));
}

TEST_CASE("conditional free energy validates its arguments", "[freenergy]") {
  const auto inst = draw_instance(20, 8, 1.0, 1.0, false, 227);
  CHECK_THROWS_AS(conditional_free_energy(inst, 1.0, 0.0, kInf), DomainError);
  CHECK_THROWS_AS(conditional_free_energy(inst, 0.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(conditional_free_energy(inst, 1.0, -1.0, 1.0), DomainError);
  const auto wide = draw_instance(5, 9, 1.0, 1.0, false, 229);
  CHECK_THROWS_AS(conditional_free_energy(wide, 1.0, 0.0, 1.0), SingularSystem);
}

TEST_CASE("known noise level shifts the full free energy by a constant", "[freenergy]") {
  const auto inst = draw_instance(40, 15, 1.0, 1.0, false, 233);
  const double s0 = 1.2, eta = 0.3, beta = 2.0, n = 40.0;
  const double full = full_free_energy(inst, eta, beta, NoisePrior::delta(s0));
  const double cond = conditional_free_energy(inst, s0, eta, beta).free_energy;
  const double expected = cond - n / (2.0 * beta) * std::log(2.0 * M_PI * s0);
  CHECK(std::abs(full - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
}

TEST_CASE("ground state free energy minimizes over the noise level", "[freenergy]") {
  const auto inst = draw_instance(60, 24, 1.0, 1.0, false, 239);
  const double n = 60.0;
  const double value = full_free_energy(inst, 0.0, kInf, NoisePrior::flat());
  const double v_star = ml_noise_estimate(inst);
  // Closed-form minimum of rss/(2Nv) + (1/2)log(2 pi v).
  const double expected = 0.5 + 0.5 * std::log(2.0 * M_PI * v_star);
  CHECK(std::abs(value - expected) < 1e-9);
  const auto bracket = [&](double v) {
    return n * v_star / (2.0 * n * v) + 0.5 * std::log(2.0 * M_PI * v);
  };
  CHECK(value <= bracket(1.02 * v_star) + 1e-12);
  CHECK(value <= bracket(0.98 * v_star) + 1e-12);
}

TEST_CASE("ground state with a point mass prior evaluates in place", "[freenergy]") {
  const auto inst = draw_instance(50, 20, 1.0, 1.0, false, 241);
  const double s0 = 0.8, eta = 0.4, n = 50.0;
  const double value = full_free_energy(inst, eta, kInf, NoisePrior::delta(s0));
  const double expected =
      min_energy(inst, s0, eta) / n + 0.5 * std::log(2.0 * M_PI * s0);
  CHECK(std::abs(value - expected) <= 1e-10 * std::max(1.0, std::abs(expected)));
}

TEST_CASE("full free energy density approaches the large system limit", "[freenergy]") {
  const long n = 200, d = 100, trials = 40;
  StreamingMoments mom;
  for (long k = 0; k < trials; ++k) {
    const auto inst = draw_instance(n, d, 1.0, 1.0, true, 2400 + 8 * k);
    mom.add(full_free_energy(inst, 0.0, 1.0, NoisePrior::flat()) /
            static_cast<double>(n));
  }
  const auto limit = asymptotic_ml_fe(0.5, 1.0, 1.0);
  REQUIRE(limit.has_value());
  CHECK(std::abs(mom.mean() - *limit) < 0.03);
}

TEST_CASE("noise marginal normalizes and peaks at the fixed point", "[freenergy]") {
  const long n = 400, d = 200;
  const auto inst = draw_instance(n, d, 1.0, 1.0, true, 251);
  const double root = solve_sigma(inst, 0.0, 1.0, NoisePrior::flat()).sigma_sq;
  std::vector<double> grid;
  const int points = 600;
  const double lo = 0.5 * root, hi = 2.0 * root;
  for (int i = 0; i < points; ++i) {
    grid.push_back(lo + (hi - lo) * i / (points - 1));
  }
  const std::vector<double> density =
      marginal_sigma_density(inst, 0.0, 1.0, NoisePrior::flat(), grid);
  CHECK(std::abs(trapezoid(grid, density) - 1.0) < 1e-8);
  const auto mode =
      std::max_element(density.begin(), density.end()) - density.begin();
  const double spacing = (hi - lo) / (points - 1);
  CHECK(std::abs(grid[static_cast<std::size_t>(mode)] - root) < 2.0 * spacing);
}

TEST_CASE("tight inverse gamma prior pins the noise marginal", "[freenergy]") {
  const auto inst = draw_instance(50, 10, 1.0, 1.0, false, 257);
  const double shape = 1e6;
  const NoisePrior prior = NoisePrior::inverse_gamma(shape, (shape + 1.0) * 1.0);
  std::vector<double> grid;
  const int points = 600;
  for (int i = 0; i < points; ++i) grid.push_back(0.7 + 0.6 * i / (points - 1));
  const std::vector<double> density =
      marginal_sigma_density(inst, 0.0, 1.0, prior, grid);
  const auto mode =
      std::max_element(density.begin(), density.end()) - density.begin();
  CHECK(std::abs(grid[static_cast<std::size_t>(mode)] - 1.0) <
        2.0 * 0.6 / (points - 1));
}

TEST_CASE("noise marginal validates its grid", "[freenergy]") {
  const auto inst = draw_instance(20, 8, 1.0, 1.0, false, 263);
  const NoisePrior flat = NoisePrior::flat();
  CHECK_THROWS_AS(marginal_sigma_density(inst, 0.0, 1.0, flat, {1.0}),
                  DomainError);
  CHECK_THROWS_AS(marginal_sigma_density(inst, 0.0, 1.0, flat, {1.0, 0.5}),
                  DomainError);
  CHECK_THROWS_AS(marginal_sigma_density(inst, 0.0, 1.0, flat, {0.0, 1.0}),
                  DomainError);
  // The log-space shift keeps merely tiny grids alive; only grids deep in the
  // denormal range overflow the quadratic term for every point.
  CHECK_NOTHROW(marginal_sigma_density(inst, 0.0, 1.0, flat, {1e-300, 2e-300}));
  CHECK_THROWS_AS(
      marginal_sigma_density(inst, 0.0, 1.0, flat, {5e-324, 1.5e-323}),
      EmptySupport);
}

TEST_CASE("average density with a point mass spectrum matches the closed form", "[freenergy]") {
  const SpectralDensity rho = SpectralDensity::histogram({0.999, 1.001}, {1.0});
  const double zeta = 0.5, beta = 1.7, sigma_sq = 1.3, sigma0_sq = 0.9;
  const double got = ml_avg_fe_density(zeta, beta, sigma_sq, sigma0_sq, rho);
  const double expected =
      0.5 * (sigma0_sq / sigma_sq) * (1.0 - zeta) +
      zeta / (2.0 * beta) * std::log(beta / (2.0 * M_PI * sigma_sq * zeta));
  CHECK(std::abs(got - expected) < 1e-12);
}

TEST_CASE("average density rejects spectra touching zero", "[freenergy]") {
  const SpectralDensity rho = SpectralDensity::from_samples({0.0, 1.0, 2.0});
  CHECK_THROWS_AS(ml_avg_fe_density(0.5, 1.0, 1.0, 1.0, rho),
                  SpectrumDomainError);
}

TEST_CASE("average density with an empirical spectrum matches conditioning on the design", "[freenergy]") {
  const long n = 300, d = 150;
  const Eigen::MatrixXd z = sample_design(
      n, d, Eigen::MatrixXd::Identity(d, d), true, {271, 0});
  const Eigen::VectorXd th = sample_theta0(d, 1.0, {271, 1});
  const SpectralDensity rho =
      SpectralDensity::from_samples(covariance_eigenvalues(z, true));
  const double analytic = ml_avg_fe_density(0.5, 1.0, 1.0, 1.0, rho);

  StreamingMoments mom;
  for (long k = 0; k < 200; ++k) {
    Eigen::VectorXd t =
        sample_targets(z, th, 1.0, {271, static_cast<std::uint64_t>(8 * k + 2)});
    RegressionInstance inst(z, std::move(t), th, 1.0, true);
    mom.add(conditional_free_energy(inst, 1.0, 0.0, 1.0).free_energy /
            static_cast<double>(n));
  }
  CHECK(std::abs(mom.mean() - analytic) < 3.0 * mom.std_error());
}

TEST_CASE("variance formula reduces to its explicit small term", "[freenergy]") {
  const double zeta = 0.5, beta = 1.0, sigma_sq = 1.0, sigma0_sq = 1.0;
  const long n = 200;
  const double got =
      ml_fe_density_variance(zeta, beta, sigma_sq, sigma0_sq, n, zero_kernel());
  const double expected = sigma0_sq * sigma0_sq * (1.0 - zeta) /
                          (2.0 * sigma_sq * sigma_sq * static_cast<double>(n));
  CHECK(std::abs(got - expected) < 1e-18);

  CorrelationKernel bad = zero_kernel();
  bad.grid[0] = 0.0;
  CHECK_THROWS_AS(ml_fe_density_variance(zeta, beta, sigma_sq, sigma0_sq, n, bad),
                  SpectrumDomainError);
}

TEST_CASE("variance kernel term scales linearly in the kernel", "[freenergy]") {
  const double zeta = 0.5, beta = 1.3, sigma_sq = 0.8, sigma0_sq = 1.1;
  const long n = 300;
  CorrelationKernel one = separable_kernel();
  CorrelationKernel two = one;
  two.matrix *= 2.0;
  const double explicit_term =
      sigma0_sq * sigma0_sq * (1.0 - zeta) /
      (2.0 * sigma_sq * sigma_sq * static_cast<double>(n));
  const double a =
      ml_fe_density_variance(zeta, beta, sigma_sq, sigma0_sq, n, one) -
      explicit_term;
  const double b =
      ml_fe_density_variance(zeta, beta, sigma_sq, sigma0_sq, n, two) -
      explicit_term;
  CHECK(std::abs(b - 2.0 * a) <= 1e-15 + 1e-12 * std::abs(a));
}

TEST_CASE("asymptotic density evaluates to its frozen pinned value", "[freenergy]") {
  const auto value = asymptotic_ml_fe(0.5, 1.0, 1.0);
  REQUIRE(value.has_value());
  CHECK(std::abs(*value - 0.80604285688230897) < 1e-12);
  CHECK(!asymptotic_ml_fe(0.5, 0.3, 1.0).has_value());
}

TEST_CASE("asymptotic density endpoints match the printed limits", "[freenergy]") {
  const double sigma0_sq = 1.0;
  for (int k = 1; k <= 9; ++k) {
    const double zeta = 0.1 * k;
    const double cold = 0.5 * std::log(2.0 * M_PI * M_E * sigma0_sq * (1.0 - zeta));
    const auto at_inf = asymptotic_ml_fe(zeta, kInf, sigma0_sq);
    REQUIRE(at_inf.has_value());
    CHECK(std::abs(*at_inf - cold) < 1e-15);
    const auto near_inf = asymptotic_ml_fe(zeta, 1e12, sigma0_sq);
    REQUIRE(near_inf.has_value());
    CHECK(std::abs(*near_inf - cold) < 1e-6);

    const double hot = (zeta * std::log(1.0 - zeta) - std::log(1.0 - zeta) -
                        zeta) /
                       (2.0 * zeta);
    const auto at_edge = asymptotic_ml_fe(zeta, zeta, sigma0_sq);
    REQUIRE(at_edge.has_value());
    CHECK(std::abs(*at_edge - hot) < 1e-12);
    const auto near_edge = asymptotic_ml_fe(zeta, zeta + 1e-8, sigma0_sq);
    REQUIRE(near_edge.has_value());
    CHECK(std::abs(*near_edge - hot) < 1e-6);
  }
}

TEST_CASE("asymptotic density is continuous in the inverse temperature", "[freenergy]") {
  const double zeta = 0.5, h = 1e-7;
  for (int k = 0; k < 300; ++k) {
    const double beta = zeta + std::pow(10.0, -6.0 + 8.0 * k / 299.0);
    const double mid = *asymptotic_ml_fe(zeta, beta, 1.0);
    const double left = *asymptotic_ml_fe(zeta, beta - h, 1.0);
    const double right = *asymptotic_ml_fe(zeta, beta + h, 1.0);
    CHECK(std::abs(mid - 0.5 * (left + right)) < 1e-6);
  }
}

TEST_CASE("asymptotic density equals the minimized average density", "[freenergy]") {
  // Minimizing avg F/N + (1/2)log(2 pi sigma^2) over sigma^2 lands at
  // beta sigma0^2 (1-zeta)/(beta-zeta) and reproduces the closed form.
  const double sigma0_sq = 1.0;
  for (double zeta : {0.3, 0.5, 0.7}) {
    const SpectralDensity mp = SpectralDensity::marchenko_pastur(zeta);
    for (double beta : {0.8, 1.0, 2.0}) {
      const double v_star = beta * sigma0_sq * (1.0 - zeta) / (beta - zeta);
      const double value =
          ml_avg_fe_density(zeta, beta, v_star, sigma0_sq, mp) +
          0.5 * std::log(2.0 * M_PI * v_star);
      CHECK(std::abs(value - *asymptotic_ml_fe(zeta, beta, sigma0_sq)) < 1e-8);
    }
  }
}

TEST_CASE("ridge average density reduces to the ridgeless form at zero ridge", "[freenergy]") {
  const SpectralDensity sampled =
      SpectralDensity::from_samples({0.3, 0.8, 1.1, 1.9, 2.4});
  const double zeta = 0.5, beta = 1.3, sigma_sq = 0.8, sigma0_sq = 1.1;
  const double map_value =
      map_avg_fe_density(zeta, beta, sigma_sq, sigma0_sq, 0.0, 0.7, sampled);
  const double ml_value =
      ml_avg_fe_density(zeta, beta, sigma_sq, sigma0_sq, sampled);
  CHECK(std::abs(map_value - ml_value) <= 1e-13 * std::max(1.0, std::abs(ml_value)));

  const SpectralDensity mp = SpectralDensity::marchenko_pastur(zeta);
  CHECK(std::abs(map_avg_fe_density(zeta, beta, sigma_sq, sigma0_sq, 0.0, 0.7, mp) -
                 ml_avg_fe_density(zeta, beta, sigma_sq, sigma0_sq, mp)) < 1e-9);
}

TEST_CASE("ridge average density matches simulation at unit ridge", "[freenergy]") {
  const long n = 200, d = 100, trials = 150;
  const SpectralDensity mp = SpectralDensity::marchenko_pastur(0.5);
  const double analytic = map_avg_fe_density(0.5, 1.0, 1.0, 1.0, 1.0, 1.0, mp);
  StreamingMoments mom;
  for (long k = 0; k < trials; ++k) {
    const auto inst = draw_instance(n, d, 1.0, 1.0, true, 3000 + 8 * k);
    mom.add(conditional_free_energy(inst, 1.0, 1.0, 1.0).free_energy /
            static_cast<double>(n));
  }
  CHECK(std::abs(mom.mean() - analytic) < 4.0 * mom.std_error());
}

TEST_CASE("ridge average density matches its large ridge expansion", "[freenergy]") {
  const double zeta = 0.5, beta = 1.0, sigma_sq = 1.0, sigma0_sq = 1.0, s2 = 1.0;
  const double eta = 1e6;
  const SpectralDensity mp = SpectralDensity::marchenko_pastur(zeta);
  const double got =
      map_avg_fe_density(zeta, beta, sigma_sq, sigma0_sq, eta, s2, mp);
  const double shift = zeta * sigma_sq * eta;
  // Mean eigenvalue of the square root law is 1.
  const double approx =
      zeta / (2.0 * beta) + s2 / (2.0 * sigma_sq) +
      sigma0_sq / (2.0 * sigma_sq) + zeta / (2.0 * beta) * std::log(shift) -
      zeta / (2.0 * beta) *
          std::log(2.0 * M_PI * M_E * sigma_sq * zeta / beta);
  CHECK(std::abs(got / approx - 1.0) < 1e-4);
}

TEST_CASE("ridge variance kernel vanishes for a zero kernel", "[freenergy]") {
  CHECK(map_fe_density_variance(0.5, 1.0, 1.0, 1.0, 1.0, 1.0, zero_kernel(),
                                200) == 0.0);
}

TEST_CASE("ridge variance kernel collapses to the ridgeless kernel", "[freenergy]") {
  const double zeta = 0.5, beta = 1.3, sigma_sq = 0.8, sigma0_sq = 1.1;
  const long n = 300;
  const CorrelationKernel corr = separable_kernel();
  const double map_part = map_fe_density_variance(zeta, beta, sigma_sq,
                                                  sigma0_sq, 0.0, 0.7, corr, n);
  const double explicit_term =
      sigma0_sq * sigma0_sq * (1.0 - zeta) /
      (2.0 * sigma_sq * sigma_sq * static_cast<double>(n));
  const double ml_part =
      ml_fe_density_variance(zeta, beta, sigma_sq, sigma0_sq, n, corr) -
      explicit_term;
  CHECK(std::abs(map_part - ml_part) <=
        1e-12 * std::max(1e-6, std::abs(ml_part)));
}

TEST_CASE("temperature sweep flags the divergent phase exactly", "[freenergy]") {
  const std::vector<double> zetas = {0.2, 0.5};
  const std::vector<double> temps = {1e-8, 0.5, 2.0, 2.5};
  const auto curve = fe_curve(zetas, temps, 1.0);
  REQUIRE(curve.size() == zetas.size() * temps.size());
  for (std::size_t zi = 0; zi < zetas.size(); ++zi) {
    for (std::size_t ti = 0; ti < temps.size(); ++ti) {
      const auto& p = curve[zi * temps.size() + ti];
      CHECK(p.zeta == zetas[zi]);
      CHECK(p.temperature == temps[ti]);
      CHECK(p.value.has_value() == (temps[ti] <= 1.0 / zetas[zi]));
    }
  }
  // Coldest grid point sits on the beta -> infinity plateau.
  const double cold02 = 0.5 * std::log(2.0 * M_PI * M_E * 0.8);
  CHECK(std::abs(*curve[0].value - cold02) < 1e-6);
  // T = 1/zeta is the finite boundary value, not yet divergent.
  const auto& edge = curve[temps.size() + 2];  // zeta = 0.5, T = 2.0
  REQUIRE(edge.value.has_value());
  const double hot05 = (0.5 * std::log(0.5) - std::log(0.5) - 0.5) / 1.0;
  CHECK(std::abs(*edge.value - hot05) < 1e-6);

  CHECK_THROWS_AS(fe_curve({0.5}, {0.0, 1.0}, 1.0), DomainError);
  CHECK_THROWS_AS(fe_curve({0.5}, {-1.0}, 1.0), DomainError);
}
