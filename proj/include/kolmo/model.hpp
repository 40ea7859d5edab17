#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace kolmo {

/// Raised when an input violates an operation's domain (non-finite state,
/// invalid parameters, regime mismatch, missing coverage).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a numerical procedure fails: blow-up, unreachable tolerance,
/// non-convergence. `at_time` carries the time of failure when meaningful and
/// `achieved` the best diagnostic value reached.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double at_time = NAN, double achieved = NAN)
      : std::runtime_error(what), at_time_(at_time), achieved_(achieved) {}
  double at_time() const noexcept { return at_time_; }
  double achieved() const noexcept { return achieved_; }

 private:
  double at_time_;
  double achieved_;
};

struct Vec3 {
  std::array<double, 3> c{0.0, 0.0, 0.0};

  constexpr Vec3() = default;
  constexpr Vec3(double a, double b, double d) : c{a, b, d} {}

  constexpr double& operator[](std::size_t i) { return c[i]; }
  constexpr double operator[](std::size_t i) const { return c[i]; }

  friend constexpr Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
  }
  friend constexpr Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
  }
  friend constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
  friend constexpr Vec3 operator*(const Vec3& a, double s) { return s * a; }
  friend constexpr Vec3 operator/(const Vec3& a, double s) { return {a[0] / s, a[1] / s, a[2] / s}; }
  Vec3& operator+=(const Vec3& o) {
    for (std::size_t i = 0; i < 3; ++i) c[i] += o[i];
    return *this;
  }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

/// Population densities (x1, x2, x3). Not clamped to the positive octant:
/// leaving it is a diagnostic, never silently repaired.
using State3 = Vec3;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a[0]) && std::isfinite(a[1]) && std::isfinite(a[2]);
}

struct Mat3 {
  std::array<std::array<double, 3>, 3> a{};

  double& operator()(std::size_t i, std::size_t j) { return a[i][j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i][j]; }
  friend Vec3 operator*(const Mat3& m, const Vec3& v) {
    Vec3 r;
    for (std::size_t i = 0; i < 3; ++i) r[i] = m(i, 0) * v[0] + m(i, 1) * v[1] + m(i, 2) * v[2];
    return r;
  }
};

/// Parameter tuple (alpha, sigma, d1, d2, d3). alpha > 0, sigma >= 0.
/// The coupling rates m_i = alpha + d_i are always derived on demand.
class ModelParams {
 public:
  ModelParams(double alpha, double sigma, const Vec3& d);
  ModelParams(double alpha, double sigma, double d1, double d2, double d3)
      : ModelParams(alpha, sigma, Vec3{d1, d2, d3}) {}

  /// Same drift, noise strength given through sigma^2.
  static ModelParams from_sigma2(double alpha, double sigma2, const Vec3& d);

  double alpha() const noexcept { return alpha_; }
  double sigma() const noexcept { return sigma_; }
  double sigma2() const noexcept { return sigma_ * sigma_; }
  const Vec3& d() const noexcept { return d_; }

  Vec3 m() const noexcept { return {alpha_ + d_[0], alpha_ + d_[1], alpha_ + d_[2]}; }
  double m_sum() const noexcept { return 3.0 * alpha_ + d_[0] + d_[1] + d_[2]; }
  /// Drift of log g in the logistic equation: alpha - sigma^2/2.
  double kappa() const noexcept { return alpha_ - 0.5 * sigma2(); }
  bool deterministic() const noexcept { return sigma_ == 0.0; }

  ModelParams with_sigma(double sigma) const { return ModelParams(alpha_, sigma, d_); }

 private:
  double alpha_;
  double sigma_;
  Vec3 d_;
};

enum class Sign { negative = -1, zero = 0, positive = 1 };

enum class CanonicalCase { I, II, IIIa, IIIb, IV, V };

std::string to_string(CanonicalCase c);
char sign_char(Sign s);

/// Sign pattern of (m1, m2, m3) and its reduction to one of the six
/// canonical cases. `permutation[k]` is the raw coordinate that becomes
/// canonical coordinate k; `time_reversed` flips the sphere flow. Applying
/// both to the raw rates yields `canonical_m`, whose pattern is the
/// canonical one.
struct DriftRegime {
  std::array<Sign, 3> sign_pattern{};
  CanonicalCase canonical_case = CanonicalCase::I;
  std::array<int, 3> permutation{0, 1, 2};
  bool time_reversed = false;
  Vec3 canonical_m;

  std::string pattern_string() const;
};

inline constexpr double kDefaultZeroTolerance = 1e-12;

/// Per-capita growth rates P_i(x) so that drift_i = x_i * P_i(x).
Vec3 growth_rates(const ModelParams& p, const State3& x);

/// Right-hand side of the deterministic cubic Kolmogorov system.
Vec3 drift(const ModelParams& p, const State3& x);

/// Jacobian of `drift` at x.
Mat3 jacobian(const ModelParams& p, const State3& x);

DriftRegime classify_regime(const ModelParams& p, double zero_tol = kDefaultZeroTolerance);

/// Sign pattern of the sphere-restricted rates after permuting coordinates
/// and optionally reversing time. Exposed for the regime invariance checks.
Vec3 transform_rates(const Vec3& m, const std::array<int, 3>& perm, bool time_reversed);

Sign sign_of(double v, double zero_tol = kDefaultZeroTolerance);

/// L(x) = |x|^2 - 1.
inline double sphere_residual(const State3& x) { return norm2(x) - 1.0; }

void require_finite(const State3& x, const char* where);

}  // namespace kolmo
