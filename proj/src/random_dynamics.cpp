#include "kolmo/random_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kolmo/parallel.hpp"

namespace kolmo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

long grid_steps(double t, double dt, const char* where) {
  const double r = t / dt;
  const auto n = static_cast<long>(std::llround(r));
  if (std::abs(r - static_cast<double>(n)) > 1e-7 * std::max(1.0, r))
    throw DomainError(std::string(where) + ": time must be a multiple of the path step");
  return n;
}

double segment_distance(const State3& x, const State3& a, const State3& b) {
  const Vec3 ab = b - a;
  const double l2 = dot(ab, ab);
  double s = l2 > 0.0 ? dot(x - a, ab) / l2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return norm(x - (a + s * ab));
}

}  // namespace

State3 pullback_point(const ModelParams& p, const BrownianPath& path, const State3& x0, double t) {
  if (!(t >= 0.0)) throw DomainError("pullback_point needs t >= 0");
  if (t == 0.0) return x0;
  path.require_covers(-t, 0.0, "pullback_point");
  return decompose(p, shift(path, -t), x0, 1.0, t);
}

// ---------------------------------------------------------------------------

PullbackEvaluator::PullbackEvaluator(const ModelParams& p, const BrownianPath& path, const State3& x0, double t_max,
                                     double flow_step)
    : alpha_(p.alpha()), dt_(path.dt()), zero_(x0 == State3{}), cursor_(p, x0, flow_step) {
  require_finite(x0, "pullback");
  if (!(t_max > 0.0)) throw DomainError("pullback needs t_max > 0");
  path.require_covers(-t_max, 0.0, "pullback");
  const long n_max = grid_steps(t_max, dt_, "pullback");
  const double kappa = p.kappa();
  const double sigma = p.sigma();
  const double log_dt = std::log(dt_);
  ly_.resize(static_cast<std::size_t>(n_max) + 1);
  lb_.resize(ly_.size());
  ly_[0] = 0.0;
  lb_[0] = kNegInf;
  for (long n = 0; n < n_max; ++n) {
    const double dy = 2.0 * (kappa * dt_ + sigma * path.increment(-(n + 1)));
    const auto i = static_cast<std::size_t>(n);
    ly_[i + 1] = ly_[i] - dy;
    const double cell = log_dt + ly_[i + 1] + log_expm1_ratio(dy);
    lb_[i + 1] = log_add_exp(lb_[i], cell);
  }
}

double PullbackEvaluator::g_at_node(std::size_t n) const {
  const double l = log_add_exp(ly_.at(n), std::log(2.0 * alpha_) + lb_.at(n));
  return std::exp(-0.5 * l);
}

double PullbackEvaluator::tau_at_node(std::size_t n) const {
  const double l = log_add_exp(ly_.at(n), std::log(2.0 * alpha_) + lb_.at(n));
  return std::max(0.0, (l - ly_[n]) / (2.0 * alpha_));
}

State3 PullbackEvaluator::at_node(std::size_t n) {
  if (zero_) return State3{};
  return g_at_node(n) * cursor_.at(tau_at_node(n));
}

std::string to_string(PullbackKind k) {
  switch (k) {
    case PullbackKind::origin: return "origin";
    case PullbackKind::point: return "point";
    case PullbackKind::cycle: return "cycle";
  }
  return "?";
}

OmegaLimitSample pullback_limit(const ModelParams& p, const BrownianPath& path, const State3& x0, double t_max,
                                double tol) {
  if (!(tol > 0.0)) throw DomainError("pullback_limit needs tol > 0");
  if (x0[0] < 0.0 || x0[1] < 0.0 || x0[2] < 0.0) throw DomainError("pullback_limit: x0 must lie in R^3_+");
  OmegaLimitSample out;
  if (x0 == State3{}) {
    out.kind = PullbackKind::origin;
    out.inconclusive = false;
    out.converged_at = 0.0;
    out.last_difference = 0.0;
    out.deterministic_label = "O";
    return out;
  }
  PullbackEvaluator ev(p, path, x0, t_max);
  const std::size_t n_last = ev.nodes() - 1;
  out.scale = ev.g_at_node(n_last);

  if (p.sigma2() >= 2.0 * p.alpha()) {
    out.kind = PullbackKind::origin;
    out.deterministic_label = "O";
    double since = NAN;
    for (std::size_t n = 0; n <= n_last; ++n) {
      const double r = norm(ev.at_node(n));
      if (r < tol) {
        if (std::isnan(since)) since = static_cast<double>(n) * ev.dt();
      } else {
        since = NAN;
      }
      out.last_difference = r;
    }
    out.point = State3{};
    out.inconclusive = std::isnan(since);
    out.converged_at = since;
    return out;
  }

  OmegaOptions oo;
  oo.numeric_check = false;
  const OmegaLimitClass om = omega_limit(p, x0, oo);
  out.deterministic_label = om.label;

  if (om.kind != OmegaKind::periodic_orbit) {
    out.kind = PullbackKind::point;
    // Successive evaluations a step Delta apart, Delta about t_max/64 on the grid.
    const auto stride = std::max<std::size_t>(1, n_last / 64);
    State3 prev = ev.at_node(0);
    double since = NAN;
    for (std::size_t n = stride; n <= n_last; n += stride) {
      const State3 cur = ev.at_node(n);
      const double diff = norm(cur - prev);
      if (diff < tol) {
        if (std::isnan(since)) since = static_cast<double>(n - stride) * ev.dt();
      } else {
        since = NAN;
      }
      out.last_difference = diff;
      out.point = cur;
      prev = cur;
    }
    out.inconclusive = std::isnan(since);
    out.converged_at = since;
    return out;
  }

  // Cycle case: sample the second half of the pull-back window and measure
  // the Hausdorff distance to scale * Gamma(h).
  out.kind = PullbackKind::cycle;
  out.h = om.h;
  const PeriodicOrbit orbit(p, om.h, 1024);
  const std::size_t n_from = n_last / 2;
  // Keep consecutive samples within 1e-3 of flow time so the polyline
  // through them resolves the orbit well below tol.
  const double c = out.scale;
  const auto stride = static_cast<std::size_t>(std::max(1.0, std::floor(1e-3 / (ev.dt() * c * c))));
  for (std::size_t n = n_from; n <= n_last; n += stride) out.cycle_points.push_back(ev.at_node(n));
  double d_in = 0.0;
  for (const auto& x : out.cycle_points) d_in = std::max(d_in, c * orbit.distance(x / c));
  double d_cover = 0.0;
  const auto& ref = orbit.samples();
  const std::size_t ref_stride = std::max<std::size_t>(1, ref.size() / 256);
  for (std::size_t k = 0; k < ref.size(); k += ref_stride) {
    const State3 y = c * ref[k];
    double best = norm(y - out.cycle_points.front());
    for (std::size_t i = 1; i < out.cycle_points.size(); ++i)
      best = std::min(best, segment_distance(y, out.cycle_points[i - 1], out.cycle_points[i]));
    d_cover = std::max(d_cover, best);
  }
  out.last_difference = std::max(d_in, d_cover);
  out.inconclusive = !(out.last_difference < tol);
  out.converged_at = out.inconclusive ? NAN : static_cast<double>(n_from) * ev.dt();
  return out;
}

State3 random_equilibrium(const ModelParams& p, const BrownianPath& path, const State3& Q, double tol) {
  require_positive_equilibrium(p, "random_equilibrium");
  require_finite(Q, "random_equilibrium");
  const double scale = std::max(1.0, std::pow(norm(Q), 3));
  if (norm(drift(p, Q)) > 1e-9 * scale) throw DomainError("random_equilibrium: Q is not an equilibrium of the drift");
  if (Q == State3{}) return Q;
  return u_g(p, path, tol).value * Q;
}

// ---------------------------------------------------------------------------

MeasureId measure_from_string(const std::string& s) {
  if (s == "O" || s == "origin") return MeasureId::O;
  if (s == "e1") return MeasureId::e1;
  if (s == "e2") return MeasureId::e2;
  if (s == "e3") return MeasureId::e3;
  throw DomainError("unknown measure id '" + s + "' (expected O, e1, e2, e3)");
}

std::string to_string(MeasureId m) {
  switch (m) {
    case MeasureId::O: return "O";
    case MeasureId::e1: return "e1";
    case MeasureId::e2: return "e2";
    case MeasureId::e3: return "e3";
  }
  return "?";
}

Vec3 lyapunov_analytic(const ModelParams& p, MeasureId m) {
  const double k = p.kappa();
  if (m == MeasureId::O) return Vec3{k, k, k};
  require_positive_equilibrium(p, "lyapunov_analytic");
  const Eigen3 ev = eigenvalues_at(p, to_string(m));
  const double s = k / p.alpha();
  return Vec3{ev[0].real() * s, ev[1].real() * s, ev[2].real() * s};
}

LyapunovEstimate lyapunov_numeric(const ModelParams& p, std::uint64_t seed, const LyapunovBase& base,
                                  const Vec3& direction, const LyapunovOptions& opt) {
  if (!(opt.T > 0.0) || !(opt.dt > 0.0)) throw DomainError("lyapunov_numeric needs T > 0 and dt > 0");
  if (!(norm(direction) > 0.0)) throw DomainError("lyapunov_numeric needs a nonzero direction");
  const long steps = grid_steps(opt.T, opt.dt, "lyapunov_numeric");
  const auto every = static_cast<std::size_t>(std::max(1.0, std::round(opt.renorm_step / opt.dt)));

  double depth = 0.0;
  if (base.kind == LyapunovBase::Kind::random_equilibrium) {
    require_positive_equilibrium(p, "lyapunov_numeric");
    if (base.axis < 0 || base.axis > 2) throw DomainError("lyapunov_numeric: axis must be 0, 1 or 2");
    depth = std::ceil(2.0 * truncation_depth(p, 1e-10) / opt.dt) * opt.dt;
  }
  const BrownianPath path = sample_path(seed, -depth, opt.T, opt.dt);
  const auto n_steps = static_cast<std::size_t>(steps);

  LinearizedGrowth g;
  switch (base.kind) {
    case LyapunovBase::Kind::origin:
      g = linearized_growth(
          p, [](std::size_t) { return State3{}; }, opt.dt, direction, n_steps, every);
      break;
    case LyapunovBase::Kind::random_equilibrium: {
      const RandomEquilibriumTrack track(p, path, 0.0, opt.T);
      const int axis = base.axis;
      g = linearized_growth(
          p,
          [&](std::size_t n) {
            State3 x{};
            x[axis] = std::sqrt(track.u2(n));
            return x;
          },
          opt.dt, direction, n_steps, every);
      break;
    }
    case LyapunovBase::Kind::generic: {
      const TrajectoryRecord rec = integrate_sde(p, path, base.x0, opt.T, SchemeSpec{Scheme::milstein, opt.dt});
      g = linearized_growth(p, rec.states, opt.dt, direction, n_steps, every);
      break;
    }
  }
  const double w_t = path.at(static_cast<long>(steps));
  LyapunovEstimate est;
  est.horizon = opt.T;
  est.renormalization_count = g.renormalizations;
  est.value = (g.log_norm - 0.5 * p.sigma2() * opt.T + p.sigma() * w_t) / opt.T;
  est.per_seed = {est.value};
  return est;
}

LyapunovEstimate lyapunov_numeric(const ModelParams& p, const std::vector<std::uint64_t>& seeds,
                                  const LyapunovBase& base, const Vec3& direction, const LyapunovOptions& opt,
                                  unsigned threads) {
  if (seeds.empty()) throw DomainError("lyapunov_numeric needs at least one seed");
  std::vector<LyapunovEstimate> each(seeds.size());
  parallel_for(seeds.size(), threads,
               [&](std::size_t i) { each[i] = lyapunov_numeric(p, seeds[i], base, direction, opt); });
  LyapunovEstimate out;
  out.horizon = opt.T;
  out.seeds = seeds.size();
  double sum = 0.0;
  for (const auto& e : each) {
    sum += e.value;
    out.renormalization_count += e.renormalization_count;
    out.per_seed.push_back(e.value);
  }
  const double n = static_cast<double>(seeds.size());
  out.value = sum / n;
  if (seeds.size() > 1) {
    double ss = 0.0;
    for (const auto& e : each) ss += (e.value - out.value) * (e.value - out.value);
    out.standard_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

// ---------------------------------------------------------------------------

double random_periodic_time(const RandomEquilibriumTrack& track, double t, double N, double guess,
                            double time_tol) {
  if (!(N > 0.0)) throw DomainError("random_periodic_time needs N > 0");
  const double room = -t - track.t_from();
  if (!(room > 0.0)) throw DomainError("crps: root not bracketed within path window");
  auto f = [&](double T) { return track.integral_u2(-t - T, -t) - N; };
  double lo = 0.0;
  double hi = std::min(std::max(guess, time_tol), room);
  while (f(hi) < 0.0) {
    if (hi >= room) throw DomainError("crps: root not bracketed within path window");
    lo = hi;
    hi = std::min(2.0 * hi, room);
  }
  while (hi - lo > time_tol) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

CrpsSample crps(const ModelParams& p, const BrownianPath& path, double h, double tol, const CrpsOptions& opt) {
  require_positive_equilibrium(p, "crps");
  const DriftRegime reg = classify_regime(p);
  if (reg.canonical_case != CanonicalCase::I) throw DomainError("crps needs drift case I");
  const double hs = h_star(p);
  if (!(h > hs)) throw DomainError("crps needs h > h*");
  if (!(tol > 0.0)) throw DomainError("crps needs tol > 0");

  CrpsSample out;
  out.h = h;
  out.y0 = orbit_anchor(p, h);
  out.N_h = period_of_orbit(p, h);
  const double t_span = opt.t_span > 0.0 ? opt.t_span : 2.0 * out.N_h;
  const double guess = out.N_h * p.alpha() / p.kappa();

  const double depth = std::ceil(2.0 * truncation_depth(p, tol) / path.dt()) * path.dt();
  const double t_from = path.t_min() + depth;
  if (!(t_from < -t_span)) throw DomainError("crps: path window too short for the truncation depth");
  const double t_to = std::floor(path.t_max() / path.dt() + 1e-9) * path.dt();
  if (!(t_to >= t_span)) throw DomainError("crps: path must extend forward to t_span");
  const RandomEquilibriumTrack track(p, path, t_from, t_to, tol);

  out.u_g = track.u_at(0.0);
  FlowCursor cursor(p, out.y0, opt.flow_step);
  auto psi = [&](double t) { return out.u_g * cursor.at(track.integral_u2(-t, 0.0)); };

  out.period_T = random_periodic_time(track, 0.0, out.N_h, guess, opt.time_tol);
  const std::size_t m = std::max<std::size_t>(1, opt.check_points);
  for (std::size_t k = 1; k <= m; ++k) {
    const double t = t_span * static_cast<double>(k) / static_cast<double>(m);
    const double T = random_periodic_time(track, t, out.N_h, guess, opt.time_tol);
    out.sample_t.push_back(t);
    out.sample_T.push_back(T);
    out.identity_residual = std::max(out.identity_residual, norm(psi(t + T) - psi(t)));
  }

  // Cocycle property: Phi(t, omega, psi(t0, omega)) = psi(t + t0, theta_t omega).
  const double t0 = 0.5 * t_span;
  const State3 start = psi(t0);
  const double t_check = std::floor(t_span / path.dt() + 1e-9) * path.dt();
  Decomposer dec(p, path, start, out.u_g, t_check, opt.flow_step);
  FlowCursor shifted(p, out.y0, opt.flow_step);
  for (std::size_t k = 1; k <= m; ++k) {
    const double t = t_check * static_cast<double>(k) / static_cast<double>(m);
    const State3 lhs = dec.at(t);
    const State3 rhs = track.u_at(t) * shifted.at(track.integral_u2(-t0, t));
    out.solution_residual = std::max(out.solution_residual, norm(lhs - rhs));
  }

  const std::size_t n_grid = 512;
  for (std::size_t k = 0; k <= n_grid; ++k) {
    const double t = t_span * static_cast<double>(k) / static_cast<double>(n_grid);
    out.grid_t.push_back(t);
    out.grid_psi.push_back(psi(t));
  }
  return out;
}

double cone_invariance_check(const ModelParams& p, std::uint64_t seed, double h, double t_end, double dt,
                             double lambda, Scheme kind) {
  const DriftRegime reg = classify_regime(p);
  if (reg.canonical_case != CanonicalCase::I) throw DomainError("cone invariance needs drift case I");
  if (!(h > h_star(p))) throw DomainError("cone invariance needs h > h*");
  if (!(lambda > 0.0)) throw DomainError("cone invariance needs lambda > 0");
  if (!(t_end > 0.0) || !(dt > 0.0)) throw DomainError("cone invariance needs t_end > 0 and dt > 0");
  const long steps = grid_steps(t_end, dt, "cone_invariance_check");
  const State3 x0 = lambda * orbit_anchor(p, h);
  double worst = std::abs(first_integral(p, x0) - h);
  if (p.deterministic()) {
    State3 x = x0;
    for (long i = 0; i < steps; ++i) {
      x = rk4_step(p, x, dt);
      worst = std::max(worst, std::abs(first_integral(p, x) - h));
    }
    return worst;
  }
  const BrownianPath path = sample_path(seed, 0.0, t_end, dt);
  const TrajectoryRecord rec = integrate_sde(p, path, x0, t_end, SchemeSpec{kind, dt});
  for (double H : rec.H) {
    if (!std::isfinite(H)) throw NumericalError("cone invariance: trajectory reached a coordinate plane");
    worst = std::max(worst, std::abs(H - h));
  }
  return worst;
}

}  // namespace kolmo
