#include "ridge/model.hpp"

#include <algorithm>
#include <cmath>

namespace ridge {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

NoisePrior NoisePrior::delta(double sigma_sq_0) {
  if (!(sigma_sq_0 > 0.0) || !std::isfinite(sigma_sq_0))
    throw DomainError("Delta noise prior needs sigma_sq_0 > 0");
  NoisePrior p;
  p.kind = Kind::Delta;
  p.sigma_sq_0 = sigma_sq_0;
  return p;
}

NoisePrior NoisePrior::inverse_gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw DomainError("InverseGamma noise prior needs shape > 0 and rate > 0");
  NoisePrior p;
  p.kind = Kind::InverseGamma;
  p.shape = shape;
  p.rate = rate;
  return p;
}

double NoisePrior::log_density_derivative(double sigma_sq) const {
  switch (kind) {
    case Kind::Flat:
      return 0.0;
    case Kind::Delta:
      throw DomainError("Delta noise prior has no usable density derivative");
    case Kind::InverseGamma:
      if (!(sigma_sq > 0.0)) throw DomainError("sigma_sq must be positive");
      // log P = -(shape+1) log(s2) - rate/s2 + const
      return -(shape + 1.0) / sigma_sq + rate / (sigma_sq * sigma_sq);
  }
  throw DomainError("unknown noise prior kind");
}

double NoisePrior::log_density(double sigma_sq) const {
  switch (kind) {
    case Kind::Flat:
      return 0.0;
    case Kind::Delta:
      throw DomainError("Delta noise prior has no density");
    case Kind::InverseGamma:
      if (!(sigma_sq > 0.0)) throw DomainError("sigma_sq must be positive");
      return -(shape + 1.0) * std::log(sigma_sq) - rate / sigma_sq;
  }
  throw DomainError("unknown noise prior kind");
}

RegressionInstance::RegressionInstance(Eigen::MatrixXd design,
                                       Eigen::VectorXd targets,
                                       Eigen::VectorXd theta0, double sigma0_sq,
                                       bool scaled)
    : design_(std::move(design)),
      targets_(std::move(targets)),
      theta0_(std::move(theta0)),
      sigma0_sq_(sigma0_sq),
      scaled_(scaled) {
  if (design_.rows() < 1 || design_.cols() < 1)
    throw ShapeError("design matrix must be nonempty");
  if (targets_.size() != design_.rows())
    throw ShapeError("targets length must equal design row count");
  if (theta0_.size() != design_.cols())
    throw ShapeError("theta0 length must equal design column count");
  if (!(sigma0_sq_ > 0.0) || !std::isfinite(sigma0_sq_))
    throw DomainError("sigma0_sq must be positive and finite");
  if (!all_finite(design_) || !targets_.allFinite() || !theta0_.allFinite())
    throw DataError("regression instance has non-finite entries");
}

HyperParams::HyperParams(double beta_, double eta_, NoisePrior prior)
    : beta(beta_), eta(eta_), noise_prior(prior) {
  if (std::isnan(beta) || !(beta > 0.0))
    throw DomainError("beta must be positive (or +infinity)");
  if (!(eta >= 0.0) || !std::isfinite(eta))
    throw DomainError("eta must be nonnegative and finite");
}

PopulationModel::PopulationModel(Eigen::MatrixXd sigma_pop,
                                 double theta_prior_var, double zeta)
    : sigma_pop_(std::move(sigma_pop)),
      theta_prior_var_(theta_prior_var),
      zeta_(zeta) {
  if (sigma_pop_.rows() != sigma_pop_.cols() || sigma_pop_.rows() < 1)
    throw ShapeError("sigma_pop must be square and nonempty");
  if (!all_finite(sigma_pop_))
    throw DataError("sigma_pop has non-finite entries");
  double asym = (sigma_pop_ - sigma_pop_.transpose()).cwiseAbs().maxCoeff();
  double scale = std::max(1.0, sigma_pop_.cwiseAbs().maxCoeff());
  if (asym > 1e-12 * scale)
    throw DomainError("sigma_pop is not symmetric to tolerance 1e-12");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_pop_,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw CovarianceNotPD("sigma_pop must be positive definite");
  if (!(theta_prior_var_ >= 0.0) || !std::isfinite(theta_prior_var_))
    throw DomainError("theta_prior_var must be nonnegative and finite");
  if (!(zeta_ > 0.0) || !(zeta_ < 1.0))
    throw DomainError("zeta must lie in (0,1)");
}

SpectralDensity SpectralDensity::from_samples(std::vector<double> eigenvalues) {
  if (eigenvalues.empty()) throw DataError("empty eigenvalue sample");
  for (double v : eigenvalues) {
    if (!std::isfinite(v)) throw DataError("non-finite eigenvalue");
    if (v < 0.0) throw DomainError("sample covariance eigenvalues must be >= 0");
  }
  std::sort(eigenvalues.begin(), eigenvalues.end());
  SpectralDensity s;
  s.kind_ = Kind::Samples;
  s.samples_ = std::move(eigenvalues);
  return s;
}

SpectralDensity SpectralDensity::marchenko_pastur(double zeta) {
  if (!(zeta > 0.0) || !(zeta < 1.0))
    throw DomainError("Marchenko-Pastur density needs zeta in (0,1)");
  SpectralDensity s;
  s.kind_ = Kind::MarchenkoPastur;
  s.zeta_ = zeta;
  return s;
}

SpectralDensity SpectralDensity::histogram(std::vector<double> bin_edges,
                                           std::vector<double> masses) {
  if (bin_edges.size() < 2 || masses.size() + 1 != bin_edges.size())
    throw ShapeError("histogram needs m+1 edges for m masses");
  for (std::size_t i = 0; i + 1 < bin_edges.size(); ++i)
    if (!(bin_edges[i] < bin_edges[i + 1]))
      throw DomainError("histogram bin edges must be strictly increasing");
  if (bin_edges.front() < 0.0)
    throw DomainError("histogram support must be nonnegative");
  double total = 0.0;
  for (double m : masses) {
    if (!std::isfinite(m) || m < 0.0) throw DataError("invalid histogram mass");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw DomainError("histogram masses must sum to 1 within 1e-10");
  SpectralDensity s;
  s.kind_ = Kind::Histogram;
  s.bin_edges_ = std::move(bin_edges);
  s.masses_ = std::move(masses);
  return s;
}

FreeEnergyBreakdown::FreeEnergyBreakdown(double f, double e, double s, double t)
    : free_energy(f), avg_energy(e), entropy(s), temperature(t) {
  if (!std::isfinite(f) || !std::isfinite(e) || !std::isfinite(s) ||
      !std::isfinite(t))
    throw DataError("free energy breakdown has non-finite fields");
  double defect = std::abs(free_energy - (avg_energy - temperature * entropy));
  double scale = std::max({1.0, std::abs(free_energy), std::abs(avg_energy)});
  if (defect > 1e-10 * scale)
    throw DataError("free energy fields violate F = E - T*S");
}

RateFunctionEval::RateFunctionEval(double alpha_, double saddle_, double rate_,
                                   std::pair<double, double> range)
    : alpha(alpha_), saddle(saddle_), rate(rate_), valid_alpha_range(range) {
  if (!(alpha > 0.0)) throw AlphaOutOfRange("alpha must be positive");
  if (!std::isfinite(saddle) || !std::isfinite(rate))
    throw DataError("rate function evaluation is not finite");
  if (!(valid_alpha_range.first < valid_alpha_range.second))
    throw DomainError("empty alpha validity range");
}

}  // namespace ridge
