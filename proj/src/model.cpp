#include "kolmo/model.hpp"

#include <algorithm>
#include <sstream>

namespace kolmo {

namespace {

bool finite(double v) { return std::isfinite(v); }

// Canonical sign patterns keyed by case.
struct CanonicalPattern {
  CanonicalCase label;
  std::array<Sign, 3> pattern;
};

constexpr std::array<CanonicalPattern, 6> kCanonical{{
    {CanonicalCase::I, {Sign::positive, Sign::positive, Sign::positive}},
    {CanonicalCase::II, {Sign::negative, Sign::positive, Sign::negative}},
    {CanonicalCase::IIIa, {Sign::zero, Sign::positive, Sign::positive}},
    {CanonicalCase::IIIb, {Sign::positive, Sign::zero, Sign::negative}},
    {CanonicalCase::IV, {Sign::zero, Sign::zero, Sign::negative}},
    {CanonicalCase::V, {Sign::zero, Sign::zero, Sign::zero}},
}};

CanonicalCase expected_case(const std::array<Sign, 3>& s) {
  const int zeros = static_cast<int>(std::count(s.begin(), s.end(), Sign::zero));
  if (zeros == 3) return CanonicalCase::V;
  if (zeros == 2) return CanonicalCase::IV;
  if (zeros == 1) return CanonicalCase::IIIa;  // refined by the search below
  if (s[0] == s[1] && s[1] == s[2]) return CanonicalCase::I;
  return CanonicalCase::II;
}

}  // namespace

ModelParams::ModelParams(double alpha, double sigma, const Vec3& d) : alpha_(alpha), sigma_(sigma), d_(d) {
  if (!finite(alpha) || !finite(sigma) || !is_finite(d)) throw DomainError("model parameters must be finite");
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be nonnegative");
}

ModelParams ModelParams::from_sigma2(double alpha, double sigma2, const Vec3& d) {
  if (!finite(sigma2) || sigma2 < 0.0) throw DomainError("sigma^2 must be finite and nonnegative");
  return ModelParams(alpha, std::sqrt(sigma2), d);
}

std::string to_string(CanonicalCase c) {
  switch (c) {
    case CanonicalCase::I: return "I";
    case CanonicalCase::II: return "II";
    case CanonicalCase::IIIa: return "IIIa";
    case CanonicalCase::IIIb: return "IIIb";
    case CanonicalCase::IV: return "IV";
    case CanonicalCase::V: return "V";
  }
  return "?";
}

char sign_char(Sign s) {
  switch (s) {
    case Sign::negative: return '-';
    case Sign::zero: return '0';
    case Sign::positive: return '+';
  }
  return '?';
}

std::string DriftRegime::pattern_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < 3; ++i) {
    if (i) out += ',';
    out += sign_char(sign_pattern[i]);
  }
  return out + ")";
}

Sign sign_of(double v, double zero_tol) {
  if (std::abs(v) <= zero_tol) return Sign::zero;
  return v > 0.0 ? Sign::positive : Sign::negative;
}

void require_finite(const State3& x, const char* where) {
  if (!is_finite(x)) throw DomainError(std::string(where) + ": state must be finite");
}

Vec3 growth_rates(const ModelParams& p, const State3& x) {
  const double a = p.alpha();
  const Vec3& d = p.d();
  const double s1 = x[0] * x[0], s2 = x[1] * x[1], s3 = x[2] * x[2];
  return {a - a * s1 - (2.0 * a + d[0]) * s2 + d[1] * s3,
          a + d[0] * s1 - a * s2 - (2.0 * a + d[2]) * s3,
          a - (2.0 * a + d[1]) * s1 + d[2] * s2 - a * s3};
}

Vec3 drift(const ModelParams& p, const State3& x) {
  require_finite(x, "drift");
  const Vec3 r = growth_rates(p, x);
  return {x[0] * r[0], x[1] * r[1], x[2] * r[2]};
}

Mat3 jacobian(const ModelParams& p, const State3& x) {
  require_finite(x, "jacobian");
  const double a = p.alpha();
  const Vec3& d = p.d();
  const double x1 = x[0], x2 = x[1], x3 = x[2];
  const double s1 = x1 * x1, s2 = x2 * x2, s3 = x3 * x3;
  Mat3 f;
  f(0, 0) = a - 3.0 * a * s1 - (2.0 * a + d[0]) * s2 + d[1] * s3;
  f(0, 1) = -2.0 * (2.0 * a + d[0]) * x1 * x2;
  f(0, 2) = 2.0 * d[1] * x1 * x3;
  f(1, 0) = 2.0 * d[0] * x1 * x2;
  f(1, 1) = a + d[0] * s1 - 3.0 * a * s2 - (2.0 * a + d[2]) * s3;
  f(1, 2) = -2.0 * (2.0 * a + d[2]) * x2 * x3;
  f(2, 0) = -2.0 * (2.0 * a + d[1]) * x1 * x3;
  f(2, 1) = 2.0 * d[2] * x2 * x3;
  f(2, 2) = a - (2.0 * a + d[1]) * s1 + d[2] * s2 - 3.0 * a * s3;
  return f;
}

Vec3 transform_rates(const Vec3& m, const std::array<int, 3>& perm, bool time_reversed) {
  // On the sphere the growth rates read P = A x^2 with A antisymmetric:
  // A12 = -m1, A13 = m2, A23 = -m3.
  std::array<std::array<double, 3>, 3> a{};
  a[0][1] = -m[0];
  a[0][2] = m[1];
  a[1][2] = -m[2];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) a[i][j] = -a[j][i];
  const double s = time_reversed ? -1.0 : 1.0;
  auto at = [&](int k, int l) { return s * a[perm[k]][perm[l]]; };
  return {-at(0, 1), at(0, 2), -at(1, 2)};
}

DriftRegime classify_regime(const ModelParams& p, double zero_tol) {
  DriftRegime r;
  const Vec3 m = p.m();
  for (std::size_t i = 0; i < 3; ++i) r.sign_pattern[i] = sign_of(m[i], zero_tol);

  std::array<int, 3> perm{0, 1, 2};
  do {
    for (bool rev : {false, true}) {
      const Vec3 mc = transform_rates(m, perm, rev);
      std::array<Sign, 3> s{};
      for (std::size_t i = 0; i < 3; ++i) s[i] = sign_of(mc[i], zero_tol);
      for (const auto& cp : kCanonical) {
        if (cp.pattern == s) {
          r.canonical_case = cp.label;
          r.permutation = perm;
          r.time_reversed = rev;
          r.canonical_m = mc;
          return r;
        }
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  // Unreachable: every sign pattern reduces to a canonical one.
  std::ostringstream os;
  os << "sign pattern " << r.pattern_string() << " has no canonical reduction (expected "
     << to_string(expected_case(r.sign_pattern)) << ")";
  throw NumericalError(os.str());
}

}  // namespace kolmo
