#pragma once
// Reference computations used only by the tests. They share no code with the
// library: eigenvalues come from Eigen, incomplete gamma from Boost.Math, and
// integrals from Gauss-Legendre rules written here.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <complex>
#include <vector>

#include "kolmo/model.hpp"
#include "kolmo/noise.hpp"

namespace oracle {

using cplx = std::complex<double>;

inline std::array<cplx, 3> sorted(std::array<cplx, 3> v) {
  std::sort(v.begin(), v.end(), [](const cplx& a, const cplx& b) {
    if (std::abs(a.real() - b.real()) > 1e-9) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return v;
}

inline std::array<cplx, 3> eigenvalues(const kolmo::Mat3& m) {
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = m(i, j);
  Eigen::EigenSolver<Eigen::Matrix3d> es(a, false);
  std::array<cplx, 3> out;
  for (int i = 0; i < 3; ++i) out[i] = es.eigenvalues()(i);
  return sorted(out);
}

inline double max_eig_mismatch(std::array<cplx, 3> a, std::array<cplx, 3> b) {
  a = sorted(a);
  b = sorted(b);
  double e = 0.0;
  for (int i = 0; i < 3; ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

/// H1 = |x|^2 prod x_i^{-2 m_{4-i} / sum m}.
inline double h1(double alpha, const kolmo::Vec3& d, const kolmo::Vec3& x) {
  const double m[3] = {alpha + d[0], alpha + d[1], alpha + d[2]};
  const double s = m[0] + m[1] + m[2];
  double v = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  for (int i = 0; i < 3; ++i) v *= std::pow(x[i], -2.0 * m[2 - i] / s);
  return v;
}

/// CDF of the stationary law: s^2 is Gamma(b - 1/2) with rate b, b = alpha/sigma^2.
inline double stationary_cdf(double alpha, double sigma2, double s) {
  if (s <= 0.0) return 0.0;
  const double b = alpha / sigma2;
  return boost::math::gamma_p(b - 0.5, b * s * s);
}

inline double stationary_density(double alpha, double sigma2, double s) {
  const double b = alpha / sigma2;
  return 2.0 * std::pow(b, b - 0.5) / std::tgamma(b - 0.5) * std::pow(s, 2.0 * b - 2.0) * std::exp(-b * s * s);
}

/// 8-point Gauss-Legendre on [a, b].
template <class F>
double gauss8(F&& f, double a, double b) {
  static constexpr double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                  0.9602898564975363};
  static constexpr double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                  0.1012285362903763};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
  return s * h;
}

/// Composite Gauss rule over n equal panels.
template <class F>
double integrate(F&& f, double a, double b, int n) {
  double s = 0.0;
  const double h = (b - a) / n;
  for (int i = 0; i < n; ++i) s += gauss8(f, a + i * h, a + (i + 1) * h);
  return s;
}

/// ln of the integral of e^{y(s)} over [t_a, t_b] (grid nodes of `path`),
/// y(s) = 2(kappa s + sigma W(s)) with W linear between nodes. Each cell is
/// integrated by Gauss-Legendre relative to the running maximum.
inline double log_int_exp_y(const kolmo::BrownianPath& path, double kappa, double sigma, long ka, long kb) {
  const double dt = path.dt();
  auto y = [&](long k) { return 2.0 * (kappa * k * dt + sigma * path.at(k)); };
  double ymax = -INFINITY;
  for (long k = ka; k <= kb; ++k) ymax = std::max(ymax, y(k));
  double sum = 0.0;
  for (long k = ka; k < kb; ++k) {
    const double y0 = y(k) - ymax, y1 = y(k + 1) - ymax;
    sum += gauss8([&](double r) { return std::exp(y0 + (y1 - y0) * r); }, 0.0, 1.0) * dt;
  }
  return ymax + std::log(sum);
}

/// u_g over the full backward window of the path (assumed deep enough that
/// the remaining tail is negligible).
inline double u_g(const kolmo::BrownianPath& path, double alpha, double sigma) {
  const double kappa = alpha - 0.5 * sigma * sigma;
  const double lj = log_int_exp_y(path, kappa, sigma, path.k_min(), 0);
  return std::exp(-0.5 * (std::log(2.0 * alpha) + lj));
}

}  // namespace oracle
