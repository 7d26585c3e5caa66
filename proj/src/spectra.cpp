#include "ridge/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ridge/errors.hpp"
#include "ridge/numerics.hpp"

namespace ridge {

std::vector<double> covariance_eigenvalues(const Eigen::MatrixXd& design,
                                           bool scaled) {
  if (!design.allFinite()) throw DataError("design has non-finite entries");
  const Eigen::Index n = design.rows(), d = design.cols();
  if (n < 1 || d < 1) throw DataError("empty design");
  Eigen::MatrixXd gram = design.transpose() * design;
  if (scaled) gram *= static_cast<double>(d) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw DataError("eigensolve failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, std::abs(ev[ev.size() - 1]));
  std::vector<double> out(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    double v = ev[i];
    if (v < 0.0) {
      if (v < -1e-12 * scale)
        throw DataError("Gram matrix has a significantly negative eigenvalue");
      v = 0.0;
    }
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;  // SelfAdjointEigenSolver returns ascending order
}

std::pair<double, double> mp_edges(double zeta) {
  const double s = std::sqrt(zeta);
  return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

double mp_pdf(double lambda, double zeta) {
  if (!(zeta > 0.0) || !(zeta < 1.0))
    throw DomainError("mp_pdf needs zeta in (0,1)");
  auto [lo, hi] = mp_edges(zeta);
  if (lambda <= lo || lambda >= hi) return 0.0;
  return std::sqrt((lambda - lo) * (hi - lambda)) /
         (2.0 * std::numbers::pi * zeta * lambda);
}

namespace {

// integral of f(lambda) * mp_pdf(lambda) over the support, with
// lambda = lo + (hi-lo) sin^2 u so the edge square roots become smooth.
double mp_weighted_integral(double zeta, const std::function<double(double)>& f,
                            double tol) {
  auto [lo, hi] = mp_edges(zeta);
  const double span = hi - lo;
  auto integrand = [&](double u) {
    double s = std::sin(u), c = std::cos(u);
    double lambda = lo + span * s * s;
    double sc = s * c;
    return f(lambda) * span * span * 2.0 * sc * sc /
           (2.0 * std::numbers::pi * zeta * lambda);
  };
  return integrate(integrand, 0.0, std::numbers::pi / 2.0, tol);
}

}  // namespace

double mp_cdf(double x, double zeta) {
  auto [lo, hi] = mp_edges(zeta);
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  const double span = hi - lo;
  const double ux = std::asin(std::min(1.0, std::sqrt((x - lo) / span)));
  auto integrand = [&](double u) {
    double s = std::sin(u), c = std::cos(u);
    double lambda = lo + span * s * s;
    double sc = s * c;
    return span * span * 2.0 * sc * sc /
           (2.0 * std::numbers::pi * zeta * lambda);
  };
  double v = integrate(integrand, 0.0, ux, 1e-10);
  return std::clamp(v, 0.0, 1.0);
}

double spectral_integral(const SpectralDensity& rho,
                         const std::function<double(double)>& f) {
  auto checked = [&f](double lambda) {
    double v = f(lambda);
    if (!std::isfinite(v))
      throw IntegrandError("integrand non-finite on spectral support");
    return v;
  };
  switch (rho.kind()) {
    case SpectralDensity::Kind::Samples: {
      double acc = 0.0;
      for (double lambda : rho.samples()) acc += checked(lambda);
      return acc / static_cast<double>(rho.samples().size());
    }
    case SpectralDensity::Kind::MarchenkoPastur:
      return mp_weighted_integral(rho.zeta(), checked, 1e-10);
    case SpectralDensity::Kind::Histogram: {
      double acc = 0.0;
      const auto& edges = rho.bin_edges();
      const auto& masses = rho.masses();
      for (std::size_t i = 0; i < masses.size(); ++i)
        acc += masses[i] * checked(0.5 * (edges[i] + edges[i + 1]));
      return acc;
    }
  }
  throw DomainError("unknown spectral density kind");
}

CorrelationKernel estimate_correlation_kernel(
    const std::vector<std::vector<double>>& ensemble, int bins) {
  if (ensemble.size() < 30)
    throw EnsembleTooSmall("correlation kernel needs an ensemble of >= 30");

  std::vector<double> pooled;
  for (const auto& eigs : ensemble)
    pooled.insert(pooled.end(), eigs.begin(), eigs.end());
  if (pooled.empty()) throw DataError("empty spectra in ensemble");
  std::sort(pooled.begin(), pooled.end());
  const double lo = pooled.front(), hi = pooled.back();
  if (!(hi > lo)) throw DataError("degenerate pooled spectrum");

  if (bins <= 0) {
    // Freedman-Diaconis on the pooled sample
    const std::size_t m = pooled.size();
    double q1 = pooled[m / 4], q3 = pooled[(3 * m) / 4];
    double width = 2.0 * (q3 - q1) / std::cbrt(static_cast<double>(m));
    bins = width > 0.0 ? static_cast<int>(std::ceil((hi - lo) / width)) : 64;
  }
  bins = std::clamp(bins, 1, 64);

  const double width = (hi - lo) / bins;
  const int m_ens = static_cast<int>(ensemble.size());
  Eigen::MatrixXd dens(m_ens, bins);
  dens.setZero();
  for (int r = 0; r < m_ens; ++r) {
    const auto& eigs = ensemble[static_cast<std::size_t>(r)];
    for (double lambda : eigs) {
      int b = static_cast<int>((lambda - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      dens(r, b) += 1.0;
    }
    dens.row(r) /= static_cast<double>(eigs.size()) * width;
  }

  Eigen::RowVectorXd mean = dens.colwise().mean();
  Eigen::MatrixXd centered = dens.rowwise() - mean;
  CorrelationKernel k;
  k.matrix = (centered.transpose() * centered) / static_cast<double>(m_ens - 1);
  k.ensemble_size = m_ens;
  k.bin_width = width;
  k.grid.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b)
    k.grid[static_cast<std::size_t>(b)] = lo + (b + 0.5) * width;
  return k;
}

double kernel_double_integral(const CorrelationKernel& kernel,
                              const std::function<double(double)>& f,
                              const std::function<double(double)>& g) {
  const auto n = static_cast<Eigen::Index>(kernel.grid.size());
  Eigen::VectorXd fv(n), gv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    fv[i] = f(kernel.grid[static_cast<std::size_t>(i)]);
    gv[i] = g(kernel.grid[static_cast<std::size_t>(i)]);
    if (!std::isfinite(fv[i]) || !std::isfinite(gv[i]))
      throw IntegrandError("kernel integrand non-finite on grid");
  }
  return fv.dot(kernel.matrix * gv) * kernel.bin_width * kernel.bin_width;
}

}  // namespace ridge
