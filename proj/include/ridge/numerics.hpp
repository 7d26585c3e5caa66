#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace ridge {

// Adaptive Gauss-Legendre quadrature on [a,b].  Panels are bisected until the
// whole-panel estimate agrees with the two half-panel estimates within the
// requested tolerance (absolute + relative mix).
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-10, int max_depth = 40);

std::complex<double> integrate_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    double tol = 1e-10, int max_depth = 40);

// Golden-section minimization of a unimodal function on [a,b]; returns the
// abscissa of the minimum to absolute tolerance tol.
double golden_section_min(const std::function<double(double)>& f, double a,
                          double b, double tol = 1e-10);

// Expands around x0 until f(mid) < f(lo) and f(mid) < f(hi); throws
// OptimizerNoBracket when the expansion runs off max_steps.
struct Bracket {
  double lo, mid, hi;
};
Bracket bracket_minimum(const std::function<double(double)>& f, double x0,
                        double step, int max_steps = 200);

struct FixedPointResult {
  double x = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Damped iteration x <- (1-damping)*x + damping*map(x); residual is
// |map(x)-x| at the returned point.
FixedPointResult damped_fixed_point(const std::function<double(double)>& map,
                                    double x0, double damping = 0.5,
                                    double tol = 1e-10, int max_iter = 500);

// One-pass mean/variance accumulator with an order-independent merge, so a
// trial range split across workers reduces to the same result as a single
// sequential pass.
class StreamingMoments {
 public:
  void add(double x);
  void merge(const StreamingMoments& other);

  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased (n-1)
  double std_error() const;

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

class StreamingCovariance {
 public:
  void add(double x, double y);
  void merge(const StreamingCovariance& other);

  std::int64_t count() const { return n_; }
  double mean_x() const { return mean_x_; }
  double mean_y() const { return mean_y_; }
  double covariance() const;  // unbiased (n-1)

 private:
  std::int64_t n_ = 0;
  double mean_x_ = 0.0, mean_y_ = 0.0;
  double cxy_ = 0.0;
};

// Trapezoid rule over tabulated (x, y); x must be strictly increasing.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ridge
