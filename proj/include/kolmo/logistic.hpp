#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "kolmo/model.hpp"
#include "kolmo/noise.hpp"

namespace kolmo {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

/// Log of (e^z - 1)/z, stable for all z (0 at z = 0).
double log_expm1_ratio(double z);
/// (e^z - 1)/z, stable for all z (1 at z = 0).
inline double expm1_ratio(double z) { return z == 0.0 ? 1.0 : std::expm1(z) / z; }

namespace detail {

/// One grid cell of the scalar recursion
///   K(t + h) = e^{-dy} K(t) + h (1 - e^{-dy}) / dy,
/// the exact integral of e^{y(s) - y(t+h)} for y linear on the cell.
/// With K(0) = 1/(2 alpha g0^2) it yields g(t)^2 = 1/(2 alpha K(t)).
inline double k_step(double k, double dy, double h) noexcept {
  const double em = std::expm1(-dy);
  return (1.0 + em) * k + h * (dy == 0.0 ? 1.0 : -em / dy);
}

}  // namespace detail

/// Scalar logistic solution driven by a fixed path, evaluated on the path
/// grid from t = 0. Holds y(t) = 2((alpha - sigma^2/2) t + sigma W_t) and the
/// recursion state K, from which g and the running integral of g^2 follow in
/// closed form.
class LogisticTrack {
 public:
  LogisticTrack(const ModelParams& p, const BrownianPath& path, double g0, double t_end);

  std::size_t nodes() const noexcept { return k_.size(); }
  double dt() const noexcept { return dt_; }
  double time(std::size_t n) const noexcept { return static_cast<double>(n) * dt_; }
  double g(std::size_t n) const;
  /// Integral of g^2 over [0, t_n] by the exact log identity.
  double tau(std::size_t n) const;
  /// g and tau at arbitrary t in [0, t_end] (partial last cell with W
  /// linear inside the cell).
  double g_at(double t) const;
  double tau_at(double t) const;

 private:
  double state_at(double t, double& y) const;

  double alpha_;
  double g0_;
  double dt_;
  double log_c_;  // ln(2 alpha g0^2)
  std::vector<double> y_;
  std::vector<double> k_;
};

/// g(t, omega, g0) by the closed form; g0 = 0 gives 0.
double g_explicit(const ModelParams& p, const BrownianPath& path, double g0, double t);

/// Integral of g^2 over [0, t] from the closed form ln(1 + 2 alpha g0^2 I)/(2 alpha).
double integral_g2(const ModelParams& p, const BrownianPath& path, double g0, double t);

/// (1/T) times the trapezoidal integral of g^2 over the path grid on [0, T].
double time_average_g2(const ModelParams& p, const BrownianPath& path, double g0, double T);

struct RandomEquilibriumScalar {
  double value = 0.0;
  double truncation_depth = 0.0;
  double tail_bound = 0.0;
  /// Integral of e^{y} over (-inf, 0], so that value^2 = 1/(2 alpha j).
  double j = 0.0;
};

/// Depth max(10, ln(1/tol)/(2 alpha - sigma^2)).
double truncation_depth(const ModelParams& p, double tol);

/// u_g(omega) by backward quadrature over [-S, 0] plus the exponential
/// envelope tail e^{y(-S)}/(2 kappa). Continues past S while the tail
/// estimate exceeds tol.
RandomEquilibriumScalar u_g(const ModelParams& p, const BrownianPath& path, double tol = 1e-8);

/// u_g(theta_t omega) along a window [t_from, t_to] of the path by the
/// cumulative recursion, seeded by u_g(theta_{t_from} omega).
class RandomEquilibriumTrack {
 public:
  RandomEquilibriumTrack(const ModelParams& p, const BrownianPath& path, double t_from, double t_to,
                         double tol = 1e-8);

  double t_from() const noexcept { return t_from_; }
  double t_to() const noexcept { return t_from_ + static_cast<double>(lj_.size() - 1) * dt_; }
  std::size_t nodes() const noexcept { return lj_.size(); }
  double time(std::size_t n) const noexcept { return t_from_ + static_cast<double>(n) * dt_; }

  /// u_g(theta_t omega)^2 at node n and at arbitrary t.
  double u2(std::size_t n) const { return std::exp(-lj_[n]) / (2.0 * alpha_); }
  double u2_at(double t) const;
  double u_at(double t) const { return std::sqrt(u2_at(t)); }
  /// ln of the integral of e^{y} over (-inf, t].
  double log_psi(double t) const;
  /// Integral of u_g(theta_s omega)^2 over [a, b].
  double integral_u2(double a, double b) const { return (log_psi(b) - log_psi(a)) / (2.0 * alpha_); }

 private:
  void locate(double t, std::size_t& n, double& r) const;
  double log_j_at(double t, double& y) const;

  double alpha_;
  double dt_;
  double t_from_;
  std::vector<double> y_;
  std::vector<double> lj_;  // ln J
};

/// Normalized stationary density of the logistic diffusion:
///   p(s) = C s^{2b-2} e^{-b s^2},  b = alpha/sigma^2,  C = 2 b^{b-1/2} / Gamma(b - 1/2).
double stationary_density(const ModelParams& p, double s);
double stationary_log_density(const ModelParams& p, double s);
double stationary_cdf(const ModelParams& p, double s);

/// sqrt(1 - sigma^2/alpha) when sigma^2 < alpha, empty when the density is
/// monotone decreasing (alpha <= sigma^2 < 2 alpha).
std::optional<double> density_mode(const ModelParams& p);

/// Least-squares slope of -ln|g(t, theta_{-t} omega, x) - u_g(omega)| over
/// t on the grid up to t_max; only errors above `floor` enter the fit.
struct PullbackRate {
  double rate = 0.0;
  std::size_t points = 0;
};
PullbackRate empirical_pullback_rate(const ModelParams& p, const BrownianPath& path, double x, double t_max,
                                     double floor = 1e-13);

void require_positive_equilibrium(const ModelParams& p, const char* where);

}  // namespace kolmo
