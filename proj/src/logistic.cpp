#include "kolmo/logistic.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace kolmo {

namespace {

double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x).
double gamma_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double density_b(const ModelParams& p) { return p.alpha() / p.sigma2(); }

void require_density(const ModelParams& p, const char* where) {
  if (p.sigma() == 0.0) throw DomainError(std::string(where) + ": sigma = 0 has no density (point mass at 1)");
  require_positive_equilibrium(p, where);
}

}  // namespace

void require_positive_equilibrium(const ModelParams& p, const char* where) {
  if (!(p.sigma2() < 2.0 * p.alpha()))
    throw DomainError(std::string(where) + ": sigma^2 >= 2 alpha, no positive random equilibrium");
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw DomainError("incomplete gamma needs a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_cf(a, x);
}

double log_expm1_ratio(double z) {
  if (std::abs(z) < 1e-8) return 0.5 * z;
  if (z > 0.0) return z + std::log(-std::expm1(-z)) - std::log(z);
  return std::log(-std::expm1(z)) - std::log(-z);
}

// ---------------------------------------------------------------------------

LogisticTrack::LogisticTrack(const ModelParams& p, const BrownianPath& path, double g0, double t_end)
    : alpha_(p.alpha()), g0_(g0), dt_(path.dt()) {
  if (!(g0 > 0.0) || !std::isfinite(g0)) throw DomainError("logistic track needs g0 > 0");
  if (!(t_end >= 0.0)) throw DomainError("logistic track needs t_end >= 0");
  path.require_covers(0.0, t_end, "logistic solution");
  const long n_end = static_cast<long>(std::ceil(t_end / dt_ - 1e-9));
  path.require_covers(0.0, static_cast<double>(n_end) * dt_, "logistic solution");
  const double kappa = p.kappa();
  const double sigma = p.sigma();
  log_c_ = std::log(2.0 * alpha_) + 2.0 * std::log(g0);
  y_.resize(static_cast<std::size_t>(n_end) + 1);
  k_.resize(y_.size());
  y_[0] = 0.0;
  k_[0] = 1.0 / (2.0 * alpha_ * g0 * g0);
  for (long n = 0; n < n_end; ++n) {
    const double dy = 2.0 * (kappa * dt_ + sigma * path.increment(n));
    y_[n + 1] = y_[n] + dy;
    k_[n + 1] = detail::k_step(k_[n], dy, dt_);
  }
}

double LogisticTrack::g(std::size_t n) const { return 1.0 / std::sqrt(2.0 * alpha_ * k_.at(n)); }

double LogisticTrack::tau(std::size_t n) const {
  return (log_c_ + y_.at(n) + std::log(k_.at(n))) / (2.0 * alpha_);
}

double LogisticTrack::state_at(double t, double& y) const {
  const double r = t / dt_;
  auto n = static_cast<std::size_t>(std::floor(r + 1e-9));
  if (n >= k_.size() - 1) {
    if (n > k_.size() - 1 || std::abs(r - static_cast<double>(n)) > 1e-9 * std::max(1.0, r))
      throw DomainError("time outside the logistic track");
    y = y_[n];
    return k_[n];
  }
  const double frac = std::max(0.0, r - static_cast<double>(n));
  if (frac < 1e-9 * std::max(1.0, r)) {
    y = y_[n];
    return k_[n];
  }
  const double dy = (y_[n + 1] - y_[n]) * frac;
  y = y_[n] + dy;
  return detail::k_step(k_[n], dy, frac * dt_);
}

double LogisticTrack::g_at(double t) const {
  double y;
  const double k = state_at(t, y);
  return 1.0 / std::sqrt(2.0 * alpha_ * k);
}

double LogisticTrack::tau_at(double t) const {
  double y;
  const double k = state_at(t, y);
  return (log_c_ + y + std::log(k)) / (2.0 * alpha_);
}

double g_explicit(const ModelParams& p, const BrownianPath& path, double g0, double t) {
  if (!(g0 >= 0.0) || !std::isfinite(g0)) throw DomainError("g0 must be finite and nonnegative");
  if (!(t >= 0.0)) throw DomainError("t must be nonnegative");
  path.require_covers(0.0, t, "g_explicit");
  if (g0 == 0.0) return 0.0;
  return LogisticTrack(p, path, g0, t).g_at(t);
}

double integral_g2(const ModelParams& p, const BrownianPath& path, double g0, double t) {
  if (g0 == 0.0) return 0.0;
  return LogisticTrack(p, path, g0, t).tau_at(t);
}

double time_average_g2(const ModelParams& p, const BrownianPath& path, double g0, double T) {
  if (!(T > 0.0)) throw DomainError("time average needs T > 0");
  require_positive_equilibrium(p, "time_average_g2");
  path.require_covers(0.0, T, "time_average_g2");
  const long n_end = path.node_of(T);
  const LogisticTrack track(p, path, g0, T);
  double acc = 0.0;
  double prev = track.g(0) * track.g(0);
  for (long n = 1; n <= n_end; ++n) {
    const double gn = track.g(static_cast<std::size_t>(n));
    const double cur = gn * gn;
    acc += 0.5 * (prev + cur);
    prev = cur;
  }
  return acc * path.dt() / T;
}

// ---------------------------------------------------------------------------

double truncation_depth(const ModelParams& p, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw DomainError("tolerance must lie in (0, 1)");
  return std::max(10.0, std::log(1.0 / tol) / (2.0 * p.alpha() - p.sigma2()));
}

RandomEquilibriumScalar u_g(const ModelParams& p, const BrownianPath& path, double tol) {
  require_positive_equilibrium(p, "u_g");
  const double S = truncation_depth(p, tol);
  if (!path.covers(-S, 0.0))
    throw DomainError("u_g: path window does not reach back to -" + std::to_string(S));
  const double kappa = p.kappa();
  const double sigma = p.sigma();
  const double h = path.dt();
  const double two_a = 2.0 * p.alpha();

  double y = 0.0;
  double j = 0.0;
  long k = 0;
  const long k_need = -static_cast<long>(std::ceil(S / h - 1e-9));
  RandomEquilibriumScalar out;
  for (;;) {
    if (k <= k_need) {
      const double tail = std::exp(y) / (2.0 * kappa);
      const double u_in = 1.0 / std::sqrt(two_a * j);
      const double u_full = 1.0 / std::sqrt(two_a * (j + tail));
      const double bound = u_in - u_full;
      if (bound < tol) {
        out.value = u_full;
        out.j = j + tail;
        out.truncation_depth = -static_cast<double>(k) * h;
        out.tail_bound = bound;
        return out;
      }
      if (k == path.k_min())
        throw NumericalError("u_g: tail bound unreachable on the given path", static_cast<double>(k) * h, bound);
    }
    if (k == path.k_min()) throw DomainError("u_g: path window ends before the truncation depth");
    const double dy = 2.0 * (kappa * h + sigma * path.increment(k - 1));
    const double em = std::expm1(-dy);
    j += h * std::exp(y) * (dy == 0.0 ? 1.0 : -em / dy);
    y -= dy;
    --k;
    if (!std::isfinite(j)) throw NumericalError("u_g: backward integral overflowed", static_cast<double>(k) * h);
  }
}

RandomEquilibriumTrack::RandomEquilibriumTrack(const ModelParams& p, const BrownianPath& path, double t_from,
                                               double t_to, double tol)
    : alpha_(p.alpha()), dt_(path.dt()), t_from_(t_from) {
  if (!(t_to >= t_from)) throw DomainError("random equilibrium track needs t_from <= t_to");
  const long k0 = path.node_of(t_from);
  const long k1 = path.node_of(t_to);
  const RandomEquilibriumScalar seed = u_g(p, shift(path, t_from), tol);
  const double kappa = p.kappa();
  const double sigma = p.sigma();
  const auto n = static_cast<std::size_t>(k1 - k0) + 1;
  y_.resize(n);
  lj_.resize(n);
  y_[0] = 2.0 * (kappa * static_cast<double>(k0) * dt_ + sigma * path.at(k0));
  double j = seed.j;
  lj_[0] = std::log(j);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dy = 2.0 * (kappa * dt_ + sigma * path.increment(k0 + static_cast<long>(i)));
    y_[i + 1] = y_[i] + dy;
    j = detail::k_step(j, dy, dt_);
    lj_[i + 1] = std::log(j);
  }
}

void RandomEquilibriumTrack::locate(double t, std::size_t& n, double& r) const {
  const double x = (t - t_from_) / dt_;
  const double last = static_cast<double>(lj_.size() - 1);
  if (x < -1e-9 * std::max(1.0, std::abs(x)) || x > last + 1e-9 * std::max(1.0, last))
    throw DomainError("time " + std::to_string(t) + " outside the random equilibrium track");
  const double xc = std::clamp(x, 0.0, last);
  n = std::min(static_cast<std::size_t>(std::floor(xc)), lj_.size() - 1);
  r = xc - static_cast<double>(n);
  if (n == lj_.size() - 1) r = 0.0;
}

double RandomEquilibriumTrack::log_j_at(double t, double& y) const {
  std::size_t n;
  double r;
  locate(t, n, r);
  if (r == 0.0) {
    y = y_[n];
    return lj_[n];
  }
  const double dy = (y_[n + 1] - y_[n]) * r;
  y = y_[n] + dy;
  return std::log(detail::k_step(std::exp(lj_[n]), dy, r * dt_));
}

double RandomEquilibriumTrack::u2_at(double t) const {
  double y;
  const double lj = log_j_at(t, y);
  return std::exp(-lj) / (2.0 * alpha_);
}

double RandomEquilibriumTrack::log_psi(double t) const {
  double y;
  const double lj = log_j_at(t, y);
  return y + lj;
}

// ---------------------------------------------------------------------------

double stationary_log_density(const ModelParams& p, double s) {
  require_density(p, "stationary_density");
  if (!(s > 0.0)) throw DomainError("stationary density is defined for s > 0");
  const double b = density_b(p);
  const double log_c = std::log(2.0) + (b - 0.5) * std::log(b) - std::lgamma(b - 0.5);
  return log_c + (2.0 * b - 2.0) * std::log(s) - b * s * s;
}

double stationary_density(const ModelParams& p, double s) {
  if (std::isinf(s)) return 0.0;
  return std::exp(stationary_log_density(p, s));
}

double stationary_cdf(const ModelParams& p, double s) {
  require_density(p, "stationary_cdf");
  if (s <= 0.0) return 0.0;
  const double b = density_b(p);
  return regularized_gamma_p(b - 0.5, b * s * s);
}

std::optional<double> density_mode(const ModelParams& p) {
  require_positive_equilibrium(p, "density_mode");
  if (p.sigma2() < p.alpha()) return std::sqrt(1.0 - p.sigma2() / p.alpha());
  return std::nullopt;
}

PullbackRate empirical_pullback_rate(const ModelParams& p, const BrownianPath& path, double x, double t_max,
                                     double floor) {
  require_positive_equilibrium(p, "empirical_pullback_rate");
  if (!(x > 0.0)) throw DomainError("pull-back rate needs x > 0");
  const double u = u_g(p, path).value;
  path.require_covers(-t_max, 0.0, "empirical_pullback_rate");
  const long n_max = std::lround(t_max / path.dt());
  const long stride = std::max<long>(1, n_max / 200);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (long n = stride; n <= n_max; n += stride) {
    const double t = static_cast<double>(n) * path.dt();
    const double g = g_explicit(p, shift(path, -t), x, t);
    const double err = std::abs(g - u);
    if (!(err > floor)) continue;
    const double ly = -std::log(err);
    sx += t;
    sy += ly;
    sxx += t * t;
    sxy += t * ly;
    ++m;
  }
  PullbackRate out;
  out.points = m;
  if (m >= 2) {
    const double md = static_cast<double>(m);
    const double den = md * sxx - sx * sx;
    if (den > 0.0) out.rate = (md * sxy - sx * sy) / den;
  }
  return out;
}

}  // namespace kolmo
