#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "ridge/errors.hpp"
#include "ridge/model.hpp"

namespace ridge::detail {

// Spectral path through the stored Gram J = Z^T Z: after one eigensolve,
// every shifted-ridge quantity becomes an O(d) sum over (s_i, c_i) with
// c = Q^T Z^T t.
struct GramPath {
  Eigen::VectorXd s;  // Gram eigenvalues, ascending
  Eigen::MatrixXd q;
  Eigen::VectorXd c;
  double tt = 0.0;  // ||t||^2

  explicit GramPath(const RegressionInstance& instance) {
    const Eigen::MatrixXd& z = instance.design();
    Eigen::MatrixXd gram = z.transpose() * z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) {
      throw SingularSystem("gram eigendecomposition failed");
    }
    s = es.eigenvalues();
    q = es.eigenvectors();
    c = q.transpose() * (z.transpose() * instance.targets());
    tt = instance.targets().squaredNorm();
  }

  // ||t - Z theta(shift)||^2 with theta(shift) the shifted-ridge solution.
  double rss(double shift) const {
    double acc = tt;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      double den = s[i] + shift;
      acc -= c[i] * c[i] * (s[i] + 2.0 * shift) / (den * den);
    }
    return std::max(acc, 0.0);
  }

  // t^T (I - Z J^{-1}_{shift} Z^T) t, the single-power quadratic form.
  double quad(double shift) const {
    double acc = tt;
    for (Eigen::Index i = 0; i < s.size(); ++i) acc -= c[i] * c[i] / (s[i] + shift);
    return std::max(acc, 0.0);
  }

  double trace_inverse(double shift) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) acc += 1.0 / (s[i] + shift);
    return acc;
  }

  // log det (J + shift I)
  double log_det(double shift) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) acc += std::log(s[i] + shift);
    return acc;
  }

  Eigen::VectorXd coefficients(double shift) const {
    return c.array() / (s.array() + shift);
  }
};

}  // namespace ridge::detail
