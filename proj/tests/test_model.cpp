#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "ridge/errors.hpp"
#include "ridge/model.hpp"
#include "ridge/serialize.hpp"

using namespace ridge;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("noise prior families", "[model]") {
  const NoisePrior flat = NoisePrior::flat();
  CHECK(flat.log_density_derivative(0.3) == 0.0);
  CHECK(flat.log_density(2.0) == 0.0);

  CHECK_THROWS_AS(NoisePrior::delta(0.0), DomainError);
  CHECK_THROWS_AS(NoisePrior::delta(-1.0), DomainError);
  const NoisePrior delta = NoisePrior::delta(0.7);
  CHECK(delta.sigma_sq_0 == 0.7);
  CHECK_THROWS_AS(delta.log_density_derivative(0.7), DomainError);

  CHECK_THROWS_AS(NoisePrior::inverse_gamma(0.0, 1.0), DomainError);
  const NoisePrior ig = NoisePrior::inverse_gamma(3.0, 2.0);
  const double s2 = 0.9;
  const double expected = -(3.0 + 1.0) / s2 + 2.0 / (s2 * s2);
  CHECK(ig.log_density_derivative(s2) == Catch::Approx(expected).epsilon(1e-14));
  // derivative of the log density matches a central difference
  const double h = 1e-6;
  const double fd = (ig.log_density(s2 + h) - ig.log_density(s2 - h)) / (2 * h);
  CHECK(ig.log_density_derivative(s2) == Catch::Approx(fd).epsilon(1e-6));
}

TEST_CASE("regression instance validation", "[model]") {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Identity(3, 2);
  const Eigen::VectorXd t = Eigen::VectorXd::Ones(3);
  const Eigen::VectorXd th = Eigen::VectorXd::Zero(2);

  const RegressionInstance ok(z, t, th, 1.0, false);
  CHECK(ok.n() == 3);
  CHECK(ok.d() == 2);
  CHECK(ok.zeta() == Catch::Approx(2.0 / 3.0));

  CHECK_THROWS_AS(RegressionInstance(z, Eigen::VectorXd::Ones(2), th, 1.0, false),
                  ShapeError);
  CHECK_THROWS_AS(RegressionInstance(z, t, Eigen::VectorXd::Zero(3), 1.0, false),
                  ShapeError);
  CHECK_THROWS_AS(RegressionInstance(z, t, th, 0.0, false), DomainError);
  Eigen::MatrixXd bad = z;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(RegressionInstance(bad, t, th, 1.0, false), DataError);
}

TEST_CASE("hyper parameter validation", "[model]") {
  const HyperParams ml(kInf, 0.0);
  CHECK(ml.zero_temperature());
  CHECK(ml.temperature() == 0.0);
  const HyperParams gibbs(2.0, 0.5);
  CHECK_FALSE(gibbs.zero_temperature());
  CHECK(gibbs.temperature() == 0.5);
  CHECK_THROWS_AS(HyperParams(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(HyperParams(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(HyperParams(1.0, kInf), DomainError);
}

TEST_CASE("population model validation", "[model]") {
  Eigen::MatrixXd sym = Eigen::MatrixXd::Identity(2, 2);
  const PopulationModel ok(sym, 1.0, 0.5);
  CHECK(ok.d() == 2);

  Eigen::MatrixXd asym = sym;
  asym(0, 1) = 1e-6;
  CHECK_THROWS_AS(PopulationModel(asym, 1.0, 0.5), DomainError);

  Eigen::MatrixXd neg = -sym;
  CHECK_THROWS_AS(PopulationModel(neg, 1.0, 0.5), CovarianceNotPD);
  CHECK_THROWS_AS(PopulationModel(sym, -1.0, 0.5), DomainError);
  CHECK_THROWS_AS(PopulationModel(sym, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(PopulationModel(sym, 1.0, 0.0), DomainError);
}

TEST_CASE("spectral density representations", "[model]") {
  const SpectralDensity s = SpectralDensity::from_samples({3.0, 1.0, 2.0});
  REQUIRE(s.samples().size() == 3);
  CHECK(s.samples()[0] == 1.0);  // sorted ascending
  CHECK(s.samples()[2] == 3.0);
  CHECK_THROWS_AS(SpectralDensity::from_samples({1.0, -0.5}), DomainError);
  CHECK_THROWS_AS(SpectralDensity::from_samples({}), DataError);

  CHECK_THROWS_AS(SpectralDensity::marchenko_pastur(0.0), DomainError);
  CHECK_THROWS_AS(SpectralDensity::marchenko_pastur(1.0), DomainError);
  CHECK(SpectralDensity::marchenko_pastur(0.25).zeta() == 0.25);

  const SpectralDensity h =
      SpectralDensity::histogram({0.0, 1.0, 2.0}, {0.25, 0.75});
  CHECK(h.kind() == SpectralDensity::Kind::Histogram);
  CHECK_THROWS_AS(SpectralDensity::histogram({0.0, 1.0, 2.0}, {0.5, 0.6}),
                  DomainError);
  CHECK_THROWS_AS(SpectralDensity::histogram({0.0, 1.0}, {0.5, 0.5}),
                  ShapeError);
  CHECK_THROWS_AS(SpectralDensity::histogram({1.0, 0.5}, {1.0}), DomainError);
}

TEST_CASE("free energy breakdown enforces the Helmholtz split", "[model]") {
  const FreeEnergyBreakdown ok(1.0 - 0.5 * 2.0, 1.0, 2.0, 0.5);
  CHECK(ok.free_energy == 0.0);
  CHECK_THROWS_AS(FreeEnergyBreakdown(1.0, 1.0, 2.0, 0.5), DataError);
  CHECK_THROWS_AS(FreeEnergyBreakdown(std::nan(""), 0.0, 0.0, 0.0), DataError);
}

TEST_CASE("rate function evaluation validation", "[model]") {
  const RateFunctionEval ok(0.1, 1.5, 0.02, {0.0, 0.5});
  CHECK(ok.rate == 0.02);
  CHECK_THROWS_AS(RateFunctionEval(0.0, 1.5, 0.02, {0.0, 0.5}),
                  AlphaOutOfRange);
  CHECK_THROWS_AS(RateFunctionEval(0.1, std::nan(""), 0.02, {0.0, 0.5}),
                  DataError);
  CHECK_THROWS_AS(RateFunctionEval(0.1, 1.5, 0.02, {0.5, 0.5}), DomainError);
}

TEST_CASE("json round trips are lossless", "[model]") {
  const SeedSpec seed{0xFEEDFACEull, 0x1234567890ull};
  nlohmann::json js = seed;
  const SeedSpec seed2 = js.get<SeedSpec>();
  CHECK(seed2.master_seed == seed.master_seed);
  CHECK(seed2.stream_index == seed.stream_index);

  const NoisePrior ig = NoisePrior::inverse_gamma(2.5, 0.125);
  nlohmann::json jp = ig;
  const NoisePrior ig2 = jp.get<NoisePrior>();
  CHECK(ig2.kind == NoisePrior::Kind::InverseGamma);
  CHECK(ig2.shape == ig.shape);
  CHECK(ig2.rate == ig.rate);

  const HyperParams hp(kInf, 0.25, NoisePrior::delta(0.75));
  nlohmann::json jh = hp;
  const HyperParams hp2 = jh.get<HyperParams>();
  CHECK(hp2.beta == kInf);
  CHECK(hp2.eta == 0.25);
  CHECK(hp2.noise_prior.kind == NoisePrior::Kind::Delta);
  CHECK(hp2.noise_prior.sigma_sq_0 == 0.75);

  Eigen::MatrixXd z(2, 2);
  z << 0.1, -0.2, 1.0 / 3.0, 4e-17;
  Eigen::VectorXd t(2);
  t << 1.5, -2.5;
  Eigen::VectorXd th(2);
  th << 0.0, 1e-300;
  const RegressionInstance inst(z, t, th, 0.3, true);
  const RegressionInstance inst2 = instance_from_json(instance_to_json(inst));
  CHECK(inst2.design() == inst.design());
  CHECK(inst2.targets() == inst.targets());
  CHECK(inst2.theta0() == inst.theta0());
  CHECK(inst2.sigma0_sq() == inst.sigma0_sq());
  CHECK(inst2.scaled() == inst.scaled());

  const SpectralDensity mp = SpectralDensity::marchenko_pastur(0.5);
  const SpectralDensity mp2 =
      spectral_density_from_json(spectral_density_to_json(mp));
  CHECK(mp2.kind() == SpectralDensity::Kind::MarchenkoPastur);
  CHECK(mp2.zeta() == 0.5);

  const RateFunctionEval rf(0.01, 1.25, 3e-4, {0.0, kInf});
  nlohmann::json jr = rf;
  const RateFunctionEval rf2 = rate_eval_from_json(jr);
  CHECK(rf2.alpha == rf.alpha);
  CHECK(rf2.saddle == rf.saddle);
  CHECK(rf2.rate == rf.rate);
  CHECK(rf2.valid_alpha_range.second == kInf);

  CHECK(real_from_json(real_to_json(kInf)) == kInf);
  CHECK(real_from_json(real_to_json(-kInf)) == -kInf);
  CHECK(real_from_json(real_to_json(0.1)) == 0.1);
}
