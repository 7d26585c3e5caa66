#include "ridge/sampler.hpp"

#include <cmath>

#include "ridge/errors.hpp"

namespace ridge {

Eigen::MatrixXd sample_design(Eigen::Index n, Eigen::Index d,
                              const Eigen::MatrixXd& sigma_pop, bool scaled,
                              SeedSpec seed) {
  if (n < 1 || d < 1) throw ShapeError("sample_design needs n >= 1 and d >= 1");
  if (sigma_pop.rows() != d || sigma_pop.cols() != d)
    throw ShapeError("sigma_pop must be d x d");

  const bool identity = sigma_pop.isIdentity(1e-14);
  Eigen::MatrixXd chol_l;
  if (!identity) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_pop);
    if (llt.info() != Eigen::Success)
      throw CovarianceNotPD("sigma_pop Cholesky factorization failed");
    chol_l = llt.matrixL();
  }

  RngStream rng(seed);
  Eigen::MatrixXd z(n, d);
  Eigen::VectorXd g(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) g[j] = rng.normal();
    if (identity)
      z.row(i) = g.transpose();
    else
      z.row(i) = (chol_l * g).transpose();
  }
  if (scaled) z /= std::sqrt(static_cast<double>(d));
  return z;
}

Eigen::VectorXd sample_theta0(Eigen::Index d, double theta_prior_var,
                              SeedSpec seed) {
  if (d < 1) throw ShapeError("sample_theta0 needs d >= 1");
  if (!(theta_prior_var >= 0.0))
    throw DomainError("theta_prior_var must be nonnegative");
  if (theta_prior_var == 0.0) return Eigen::VectorXd::Zero(d);
  RngStream rng(seed);
  const double s = std::sqrt(theta_prior_var);
  Eigen::VectorXd v(d);
  for (Eigen::Index j = 0; j < d; ++j) v[j] = s * rng.normal();
  return v;
}

Eigen::VectorXd sample_targets(const Eigen::MatrixXd& design,
                               const Eigen::VectorXd& theta0, double sigma0_sq,
                               SeedSpec seed, bool exact_noiseless) {
  if (design.cols() != theta0.size())
    throw ShapeError("theta0 length must equal design column count");
  if (!(sigma0_sq > 0.0))
    throw DomainError("sigma0_sq must be positive");
  Eigen::VectorXd t = design * theta0;
  if (!exact_noiseless) {
    RngStream rng(seed);
    const double s = std::sqrt(sigma0_sq);
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] += s * rng.normal();
  }
  return t;
}

}  // namespace ridge
