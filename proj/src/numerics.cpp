#include "ridge/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ridge/errors.hpp"

namespace ridge {

namespace {

// Nodes/weights of n-point Gauss-Legendre on [-1,1], computed once by Newton
// iteration on the Legendre recurrence (no table typos, machine precision).
struct GaussRule {
  std::vector<double> x, w;
};

GaussRule make_gauss(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    r.w[n - 1 - i] = r.w[i];
  }
  return r;
}

const GaussRule& gauss20() {
  static const GaussRule r = make_gauss(20);
  return r;
}

template <typename T, typename F>
T gauss_panel(const F& f, double a, double b) {
  const GaussRule& g = gauss20();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  T acc{};
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    T v = f(mid + half * g.x[i]);
    acc += g.w[i] * v;
  }
  return half * acc;
}

template <typename T, typename F>
T adaptive(const F& f, double a, double b, T whole, double tol, int depth,
           int max_depth, double& err_accum) {
  const double mid = 0.5 * (a + b);
  T left = gauss_panel<T>(f, a, mid);
  T right = gauss_panel<T>(f, mid, b);
  double err = std::abs(left + right - whole);
  if (err <= tol || depth >= max_depth) {
    if (depth >= max_depth && err > tol) err_accum += err;
    return left + right;
  }
  return adaptive<T>(f, a, mid, left, 0.5 * tol, depth + 1, max_depth,
                     err_accum) +
         adaptive<T>(f, mid, b, right, 0.5 * tol, depth + 1, max_depth,
                     err_accum);
}

template <typename T, typename F>
T integrate_impl(const F& f, double a, double b, double tol, int max_depth) {
  if (!(a < b)) {
    if (a == b) return T{};
    throw QuadratureError("integration bounds out of order");
  }
  auto checked = [&f](double x) {
    T v = f(x);
    if (!std::isfinite(std::abs(v)))
      throw IntegrandError("integrand returned a non-finite value");
    return v;
  };
  T whole = gauss_panel<T>(checked, a, b);
  double scale = std::max(1.0, std::abs(whole));
  double err_accum = 0.0;
  T result =
      adaptive<T>(checked, a, b, whole, tol * scale, 0, max_depth, err_accum);
  if (err_accum > 100.0 * tol * std::max(scale, std::abs(result)))
    throw QuadratureError("adaptive quadrature failed to converge");
  return result;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol, int max_depth) {
  return integrate_impl<double>(f, a, b, tol, max_depth);
}

std::complex<double> integrate_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    double tol, int max_depth) {
  return integrate_impl<std::complex<double>>(f, a, b, tol, max_depth);
}

double golden_section_min(const std::function<double(double)>& f, double a,
                          double b, double tol) {
  if (!(a < b)) throw OptimizerNoBracket("invalid interval");
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

Bracket bracket_minimum(const std::function<double(double)>& f, double x0,
                        double step, int max_steps) {
  double lo = x0 - step, mid = x0, hi = x0 + step;
  double flo = f(lo), fmid = f(mid), fhi = f(hi);
  for (int i = 0; i < max_steps; ++i) {
    if (fmid < flo && fmid < fhi) return {lo, mid, hi};
    if (flo < fhi) {
      hi = mid;
      fhi = fmid;
      mid = lo;
      fmid = flo;
      lo = lo - 2.0 * (hi - mid);
      flo = f(lo);
    } else {
      lo = mid;
      flo = fmid;
      mid = hi;
      fmid = fhi;
      hi = hi + 2.0 * (mid - lo);
      fhi = f(hi);
    }
  }
  throw OptimizerNoBracket("failed to bracket a minimum");
}

FixedPointResult damped_fixed_point(const std::function<double(double)>& map,
                                    double x0, double damping, double tol,
                                    int max_iter) {
  FixedPointResult res;
  double x = x0;
  for (int k = 1; k <= max_iter; ++k) {
    double fx = map(x);
    double resid = std::abs(fx - x);
    res.x = x;
    res.iterations = k;
    res.residual = resid;
    if (resid <= tol * std::max(1.0, std::abs(x))) {
      res.converged = true;
      return res;
    }
    x = (1.0 - damping) * x + damping * fx;
  }
  res.x = x;
  res.converged = false;
  return res;
}

void StreamingMoments::add(double x) {
  ++n_;
  double dx = x - mean_;
  mean_ += dx / static_cast<double>(n_);
  m2_ += dx * (x - mean_);
}

void StreamingMoments::merge(const StreamingMoments& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  double delta = other.mean_ - mean_;
  double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
  double tot = na + nb;
  m2_ += other.m2_ + delta * delta * na * nb / tot;
  mean_ += delta * nb / tot;
  n_ += other.n_;
}

double StreamingMoments::variance() const {
  if (n_ < 2) return 0.0;
  return m2_ / static_cast<double>(n_ - 1);
}

double StreamingMoments::std_error() const {
  if (n_ < 2) return 0.0;
  return std::sqrt(variance() / static_cast<double>(n_));
}

void StreamingCovariance::add(double x, double y) {
  ++n_;
  double dx = x - mean_x_;
  mean_x_ += dx / static_cast<double>(n_);
  mean_y_ += (y - mean_y_) / static_cast<double>(n_);
  cxy_ += dx * (y - mean_y_);
}

void StreamingCovariance::merge(const StreamingCovariance& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
  double tot = na + nb;
  double dx = other.mean_x_ - mean_x_;
  double dy = other.mean_y_ - mean_y_;
  cxy_ += other.cxy_ + dx * dy * na * nb / tot;
  mean_x_ += dx * nb / tot;
  mean_y_ += dy * nb / tot;
  n_ += other.n_;
}

double StreamingCovariance::covariance() const {
  if (n_ < 2) return 0.0;
  return cxy_ / static_cast<double>(n_ - 1);
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw QuadratureError("trapezoid needs matching x/y with >= 2 points");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (!(x[i + 1] > x[i]))
      throw QuadratureError("trapezoid abscissae must increase");
    acc += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
  }
  return acc;
}

}  // namespace ridge
