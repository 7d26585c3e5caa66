#pragma once

#include <Eigen/Dense>

#include "ridge/rng.hpp"

namespace ridge {

// Rows i.i.d. N(0, sigma_pop); entries divided by sqrt(d) when scaled.
Eigen::MatrixXd sample_design(Eigen::Index n, Eigen::Index d,
                              const Eigen::MatrixXd& sigma_pop, bool scaled,
                              SeedSpec seed);

// i.i.d. N(0, theta_prior_var); the zero vector when theta_prior_var = 0.
Eigen::VectorXd sample_theta0(Eigen::Index d, double theta_prior_var,
                              SeedSpec seed);

// t = Z theta0 + eps, eps i.i.d. N(0, sigma0_sq).  exact_noiseless skips the
// noise entirely (t = Z theta0 with no rounding from a zero-variance draw).
Eigen::VectorXd sample_targets(const Eigen::MatrixXd& design,
                               const Eigen::VectorXd& theta0, double sigma0_sq,
                               SeedSpec seed, bool exact_noiseless = false);

}  // namespace ridge
