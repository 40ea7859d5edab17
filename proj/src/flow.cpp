#include "kolmo/flow.hpp"

#include <algorithm>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <json.hpp>

namespace kolmo {

namespace {

using std::numbers::pi;

bool interior(const State3& x) { return x[0] > 0.0 && x[1] > 0.0 && x[2] > 0.0; }

void require_nonnegative(const State3& x, const char* where) {
  require_finite(x, where);
  if (x[0] < 0.0 || x[1] < 0.0 || x[2] < 0.0) throw DomainError(std::string(where) + ": state must lie in R^3_+");
}

bool all_zero(const Vec3& m, double tol) {
  return std::abs(m[0]) <= tol && std::abs(m[1]) <= tol && std::abs(m[2]) <= tol;
}

bool same_nonzero_sign(const Vec3& m, double tol) {
  const Sign s0 = sign_of(m[0], tol);
  return s0 != Sign::zero && sign_of(m[1], tol) == s0 && sign_of(m[2], tol) == s0;
}

State3 unit(int i) {
  State3 e;
  e[static_cast<std::size_t>(i)] = 1.0;
  return e;
}

Eigen3 real3(double a, double b, double c) { return {{{a, 0.0}, {b, 0.0}, {c, 0.0}}}; }

// Reduced flow on the sphere in (x1, x2).
struct Reduced {
  double m1, m2, m3;
  std::array<double, 2> f(const std::array<double, 2>& s) const {
    const double a = s[0] * s[0], b = s[1] * s[1];
    return {s[0] * (m2 - m2 * a - (m1 + m2) * b), s[1] * (-m3 + (m1 + m3) * a + m3 * b)};
  }
  std::array<double, 2> step(const std::array<double, 2>& s, double h) const {
    auto add = [](const std::array<double, 2>& x, const std::array<double, 2>& k, double c) {
      return std::array<double, 2>{x[0] + c * k[0], x[1] + c * k[1]};
    };
    const auto k1 = f(s);
    const auto k2 = f(add(s, k1, 0.5 * h));
    const auto k3 = f(add(s, k2, 0.5 * h));
    const auto k4 = f(add(s, k3, h));
    return {s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
  }
};

Reduced reduced_of(const ModelParams& p) {
  const Vec3 m = p.m();
  return {m[0], m[1], m[2]};
}

State3 lift(const std::array<double, 2>& s) {
  return {s[0], s[1], std::sqrt(std::max(0.0, 1.0 - s[0] * s[0] - s[1] * s[1]))};
}

double segment_distance(const State3& x, const State3& a, const State3& b, double* frac = nullptr) {
  const Vec3 ab = b - a;
  const double len2 = norm2(ab);
  double t = len2 > 0.0 ? dot(x - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  if (frac) *frac = t;
  return norm(x - (a + t * ab));
}

double fmt_check(double v) { return std::isfinite(v) ? v : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// Trajectories

void TrajectoryRecord::write_csv(std::ostream& os) const {
  os << (W.empty() ? "t,x1,x2,x3,H,L\n" : "t,x1,x2,x3,H,L,W\n");
  char buf[512];
  for (std::size_t n = 0; n < times.size(); ++n) {
    const State3& x = states[n];
    int len = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", times[n], x[0], x[1], x[2],
                            H[n], L[n]);
    os.write(buf, len);
    if (!W.empty()) {
      len = std::snprintf(buf, sizeof buf, ",%.17g", W[n]);
      os.write(buf, len);
    }
    os << '\n';
  }
}

State3 rk4_step(const ModelParams& p, const State3& x, double h) {
  const Vec3 k1 = drift(p, x);
  const Vec3 k2 = drift(p, x + (0.5 * h) * k1);
  const Vec3 k3 = drift(p, x + (0.5 * h) * k2);
  const Vec3 k4 = drift(p, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

State3 flow_at(const ModelParams& p, const State3& x0, double t, double step) {
  if (!(t >= 0.0)) throw DomainError("flow time must be nonnegative");
  if (t == 0.0) return x0;
  const auto n = static_cast<long>(std::ceil(t / step - 1e-12));
  const double h = t / static_cast<double>(n);
  State3 x = x0;
  for (long i = 0; i < n; ++i) x = rk4_step(p, x, h);
  if (!is_finite(x)) throw NumericalError("flow diverged", t);
  return x;
}

namespace {

TrajectoryRecord run_rk4(const ModelParams& p, const State3& x0, double t_end, double step, std::size_t every,
                         const std::string& metric) {
  TrajectoryRecord rec;
  const auto n = static_cast<long>(std::ceil(t_end / step - 1e-12));
  const double h = t_end / static_cast<double>(n);
  rec.step_used = h;
  rec.drift_metric = metric;
  const double h0 = first_integral_or_nan(p, x0);
  State3 x = x0;
  double worst = 0.0;
  auto push = [&](double t, const State3& s) {
    rec.times.push_back(t);
    rec.states.push_back(s);
    rec.H.push_back(first_integral_or_nan(p, s));
    rec.L.push_back(sphere_residual(s));
  };
  push(0.0, x);
  for (long i = 1; i <= n; ++i) {
    x = rk4_step(p, x, h);
    const double t = static_cast<double>(i) * h;
    if (!is_finite(x)) throw NumericalError("flow diverged", t, worst);
    for (std::size_t c = 0; c < 3; ++c) {
      if (x[c] < 0.0 && !rec.left_octant) {
        rec.left_octant = true;
        rec.left_octant_time = t;
      }
      if (x0[c] > 0.0 && std::abs(x[c]) < 1e-14) rec.boundary_proximity = true;
    }
    if (metric == "first_integral") {
      worst = std::max(worst, std::abs(first_integral_or_nan(p, x) - h0) / std::abs(h0));
    } else if (metric == "sphere") {
      worst = std::max(worst, std::abs(sphere_residual(x)));
    }
    if (i % static_cast<long>(every) == 0 || i == n) push(t, x);
  }
  if (metric == "first_integral" && !std::isfinite(worst)) worst = INFINITY;
  rec.invariant_drift = worst;
  return rec;
}

}  // namespace

TrajectoryRecord integrate_flow(const ModelParams& p, const State3& x0, double t_end, const StepControl& sc) {
  require_finite(x0, "integrate_flow");
  if (!(t_end > 0.0)) throw DomainError("integrate_flow needs t_end > 0");
  if (!(sc.step > 0.0)) throw DomainError("integrate_flow needs a positive step");
  const std::size_t every = std::max<std::size_t>(1, sc.record_every);

  std::string metric = "step_doubling";
  if (interior(x0) && std::isfinite(first_integral_or_nan(p, x0)))
    metric = "first_integral";
  else if (std::abs(sphere_residual(x0)) <= 1e-12)
    metric = "sphere";

  double h = sc.step;
  if (!sc.adaptive) {
    auto rec = run_rk4(p, x0, t_end, h, every, metric == "step_doubling" ? "none" : metric);
    return rec;
  }
  if (metric != "step_doubling") {
    double achieved = INFINITY;
    for (int k = 0; k <= sc.max_halvings; ++k, h *= 0.5) {
      auto rec = run_rk4(p, x0, t_end, h, every, metric);
      achieved = rec.invariant_drift;
      if (achieved <= sc.tol) return rec;
    }
    throw NumericalError("integrate_flow: invariant drift tolerance unreachable", t_end, achieved);
  }
  auto coarse = run_rk4(p, x0, t_end, h, every, "none");
  double achieved = INFINITY;
  for (int k = 0; k < sc.max_halvings; ++k) {
    h *= 0.5;
    auto fine = run_rk4(p, x0, t_end, h, every, "none");
    achieved = norm(fine.back() - coarse.back()) * 16.0 / 15.0 / (1.0 + norm(fine.back()));
    if (achieved <= sc.tol) {
      fine.invariant_drift = achieved;
      fine.drift_metric = "step_doubling";
      return fine;
    }
    coarse = std::move(fine);
  }
  throw NumericalError("integrate_flow: step-doubling tolerance unreachable", t_end, achieved);
}

FlowCursor::FlowCursor(const ModelParams& p, const State3& x0, double step) : p_(p), h_(step), x_(x0) {
  require_finite(x0, "FlowCursor");
  if (!(step > 0.0)) throw DomainError("FlowCursor needs a positive step");
  checkpoints_.push_back(x0);
}

State3 FlowCursor::at(double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("FlowCursor: tau must be finite and nonnegative");
  const double r = tau / h_;
  auto target = static_cast<long>(std::floor(r));
  if (r - static_cast<double>(target) > 1.0 - 1e-12) ++target;
  if (target < n_) {
    const long j = std::min<long>(target / kCheckpointStride, static_cast<long>(checkpoints_.size()) - 1);
    n_ = j * kCheckpointStride;
    x_ = checkpoints_[static_cast<std::size_t>(j)];
  }
  while (n_ < target) {
    x_ = rk4_step(p_, x_, h_);
    ++n_;
    if (n_ % kCheckpointStride == 0 && static_cast<long>(checkpoints_.size()) == n_ / kCheckpointStride)
      checkpoints_.push_back(x_);
  }
  if (!is_finite(x_)) throw NumericalError("FlowCursor: flow diverged", tau);
  const double rem = tau - static_cast<double>(n_) * h_;
  if (rem <= 1e-15 * std::max(1.0, tau)) return x_;
  return rk4_step(p_, x_, rem);
}

// ---------------------------------------------------------------------------
// First integrals

double first_integral_or_nan(const ModelParams& p, const State3& x, double zero_tol) {
  if (!interior(x) || !is_finite(x)) return NAN;
  const Vec3 m = p.m();
  if (all_zero(m, zero_tol)) return NAN;
  const double s = p.m_sum();
  double lh = 0.0;
  if (std::abs(s) > zero_tol) {
    for (std::size_t i = 0; i < 3; ++i) lh += -2.0 * m[2 - i] / s * std::log(x[i]);
    lh += std::log(norm2(x));
  } else {
    for (std::size_t i = 0; i < 3; ++i) lh += m[2 - i] * std::log(x[i]);
  }
  return std::exp(lh);
}

double first_integral(const ModelParams& p, const State3& x, double zero_tol) {
  require_finite(x, "first_integral");
  if (!interior(x)) throw DomainError("first_integral: point must be interior (all x_i > 0)");
  if (all_zero(p.m(), zero_tol)) throw DomainError("first_integral: no first integral applicable (all m_i = 0)");
  return first_integral_or_nan(p, x, zero_tol);
}

std::optional<State3> qstar(const ModelParams& p, double zero_tol) {
  const Vec3 m = p.m();
  if (!same_nonzero_sign(m, zero_tol)) return std::nullopt;
  const double s = p.m_sum();
  return State3{std::sqrt(m[2] / s), std::sqrt(m[1] / s), std::sqrt(m[0] / s)};
}

double lambda_qstar(const ModelParams& p) {
  const Vec3 m = p.m();
  return 2.0 * std::sqrt(m[0] * m[1] * m[2] / p.m_sum());
}

double h_star(const ModelParams& p, double zero_tol) {
  if (!same_nonzero_sign(p.m(), zero_tol)) throw DomainError("h_star: defined only when all m_i share a nonzero sign");
  const Vec3 m = p.m();
  const double s = p.m_sum();
  double lh = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double w = m[2 - i] / s;
    lh -= w * std::log(w);
  }
  return std::exp(lh);
}

ConeLevel cone_level(const ModelParams& p, const State3& x, double zero_tol) {
  if (!same_nonzero_sign(p.m(), zero_tol)) throw DomainError("cone_level: defined only when all m_i share a nonzero sign");
  ConeLevel c;
  c.h = first_integral(p, x, zero_tol);
  const State3 q = *qstar(p, zero_tol);
  if (norm(x / norm(x) - q) <= 1e-9) {
    c.on_qstar_ray = true;
    c.h = h_star(p, zero_tol);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Equilibria

State3 EquilibriumCurve::point(double theta) const {
  State3 x;
  x[static_cast<std::size_t>(i)] = std::cos(theta);
  x[static_cast<std::size_t>(j)] = std::sin(theta);
  return x;
}

double EquilibriumCurve::transverse_rate(const ModelParams& p, double theta) const {
  return growth_rates(p, point(theta))[static_cast<std::size_t>(missing)];
}

Eigen3 EquilibriumCurve::eigenvalues(const ModelParams& p, double theta) const {
  return real3(0.0, -2.0 * p.alpha(), transverse_rate(p, theta));
}

const Equilibrium* EquilibriumSet::find(const std::string& label) const {
  for (const auto& e : isolated)
    if (e.label == label) return &e;
  return nullptr;
}

std::string EquilibriumSet::to_json(const ModelParams& p) const {
  using nlohmann::json;
  auto eig = [](const Eigen3& ev) {
    json a = json::array();
    for (const auto& z : ev) a.push_back({z.real(), z.imag()});
    return a;
  };
  json j;
  j["regime"] = {{"pattern", regime.pattern_string()},
                 {"case", to_string(regime.canonical_case)},
                 {"permutation", regime.permutation},
                 {"time_reversed", regime.time_reversed}};
  j["isolated"] = json::array();
  for (const auto& e : isolated)
    j["isolated"].push_back({{"label", e.label}, {"point", e.point.c}, {"eigenvalues", eig(e.eigenvalues)}});
  j["curves"] = json::array();
  for (const auto& c : curves) {
    json jc = {{"name", c.name},
               {"plane", {c.i + 1, c.j + 1}},
               {"parameterization", "cos(theta) e_i + sin(theta) e_j, theta in [0, pi/2]"},
               {"contains", c.contains}};
    jc["split_angle"] = std::isfinite(c.split_angle) ? json(c.split_angle) : json(nullptr);
    if (std::isfinite(c.stable_from))
      jc["stable_arc"] = {c.stable_from, c.stable_to};
    else
      jc["stable_arc"] = nullptr;
    jc["transverse_rate_at_ends"] = {c.transverse_rate(p, 0.0), c.transverse_rate(p, pi / 2)};
    j["curves"].push_back(jc);
  }
  j["sphere"] = sphere;
  return j.dump(2);
}

EquilibriumSet equilibria(const ModelParams& p, double zero_tol) {
  EquilibriumSet set;
  set.regime = classify_regime(p, zero_tol);
  const Vec3 m = p.m();
  const double a = p.alpha();
  set.isolated.push_back({"O", State3{}, real3(a, a, a)});

  if (all_zero(m, zero_tol)) {
    set.sphere = true;
    return set;
  }

  struct CurveSpec {
    int k, i, j, missing;
    const char* name;
  };
  constexpr std::array<CurveSpec, 3> specs{{{0, 0, 1, 2, "Gamma12"}, {1, 0, 2, 1, "Gamma13"}, {2, 1, 2, 0, "Gamma23"}}};
  std::array<bool, 3> on_curve{false, false, false};
  for (const auto& cs : specs) {
    if (sign_of(m[static_cast<std::size_t>(cs.k)], zero_tol) != Sign::zero) continue;
    EquilibriumCurve c;
    c.name = cs.name;
    c.i = cs.i;
    c.j = cs.j;
    c.missing = cs.missing;
    c.contains = {"e" + std::to_string(cs.i + 1), "e" + std::to_string(cs.j + 1)};
    on_curve[static_cast<std::size_t>(cs.i)] = on_curve[static_cast<std::size_t>(cs.j)] = true;
    const double ra = c.transverse_rate(p, 0.0);
    const double rb = c.transverse_rate(p, pi / 2);
    if ((ra < 0.0 && rb > 0.0) || (ra > 0.0 && rb < 0.0)) {
      c.split_angle = std::acos(std::sqrt(rb / (rb - ra)));
      if (ra < 0.0) {
        c.stable_from = 0.0;
        c.stable_to = c.split_angle;
      } else {
        c.stable_from = c.split_angle;
        c.stable_to = pi / 2;
      }
    } else if (ra <= 0.0 && rb <= 0.0) {
      c.stable_from = 0.0;
      c.stable_to = pi / 2;
    }
    set.curves.push_back(c);
  }
  for (int i = 0; i < 3; ++i) {
    if (on_curve[static_cast<std::size_t>(i)]) continue;
    const std::string lab = "e" + std::to_string(i + 1);
    set.isolated.push_back({lab, unit(i), eigenvalues_at(p, lab, zero_tol)});
  }
  if (auto q = qstar(p, zero_tol)) set.isolated.push_back({"Qstar", *q, eigenvalues_at(p, "Qstar", zero_tol)});
  return set;
}

Eigen3 eigenvalues_at(const ModelParams& p, const std::string& label, double zero_tol) {
  const double a = p.alpha();
  const Vec3 m = p.m();
  if (label == "O") return real3(a, a, a);
  if (label == "e1") return real3(-2.0 * a, m[0], -m[1]);
  if (label == "e2") return real3(-m[0], -2.0 * a, m[2]);
  if (label == "e3") return real3(m[1], -m[2], -2.0 * a);
  if (label == "Qstar") {
    if (!qstar(p, zero_tol)) throw DomainError("eigenvalues_at: Qstar does not exist for this parameter regime");
    const double l = lambda_qstar(p);
    return {{{0.0, l}, {0.0, -l}, {-2.0 * a, 0.0}}};
  }
  throw DomainError("eigenvalues_at: unknown equilibrium label '" + label + "'");
}

// ---------------------------------------------------------------------------
// Periodic orbits

State3 orbit_anchor(const ModelParams& p, double h) {
  const auto q = qstar(p);
  if (!q) throw DomainError("orbit_anchor: periodic orbits exist only when all m_i share a nonzero sign");
  const double hs = h_star(p);
  if (!(h > hs * (1.0 + 1e-12))) throw DomainError("orbit_anchor: level must exceed h*");
  const double q1 = (*q)[0], q2 = (*q)[1];
  const double top = std::sqrt(1.0 - q2 * q2);
  auto f = [&](double x1) -> double {
    const State3 y{x1, q2, std::sqrt(std::max(0.0, 1.0 - x1 * x1 - q2 * q2))};
    if (!(y[2] > 0.0)) return INFINITY;
    return std::log(first_integral(p, y)) - std::log(h);
  };
  double lo = q1, hi = top;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double x1 = 0.5 * (lo + hi);
  return {x1, q2, std::sqrt(1.0 - x1 * x1 - q2 * q2)};
}

double period_of_orbit(const ModelParams& p, double h, const PeriodOptions& opt) {
  const State3 y0 = orbit_anchor(p, h);
  const State3 q = *qstar(p);
  const Reduced red = reduced_of(p);
  std::array<double, 2> s{y0[0], y0[1]};
  const double orient = red.f(s)[1] >= 0.0 ? 1.0 : -1.0;
  auto gsec = [&](const std::array<double, 2>& z) { return orient * (z[1] - q[1]); };
  const double hstep = opt.step;
  double t = 0.0;
  double g_prev = 0.0;
  while (t < opt.horizon) {
    const auto next = red.step(s, hstep);
    const double g_next = gsec(next);
    if (g_prev < 0.0 && g_next >= 0.0 && next[0] > q[0]) {
      double lo = 0.0, hi = hstep;
      while (hi - lo > 0.1 * opt.time_tol) {
        const double mid = 0.5 * (lo + hi);
        if (gsec(red.step(s, mid)) < 0.0)
          lo = mid;
        else
          hi = mid;
      }
      return t + 0.5 * (lo + hi);
    }
    s = next;
    g_prev = g_next;
    t += hstep;
    if (!std::isfinite(s[0]) || !std::isfinite(s[1])) throw NumericalError("period_of_orbit: reduced flow diverged", t);
  }
  throw NumericalError("period_of_orbit: no return to the section within the horizon", opt.horizon);
}

PeriodicOrbit::PeriodicOrbit(const ModelParams& p, double h, std::size_t samples, const PeriodOptions& opt)
    : p_(p), h_(h), period_(period_of_orbit(p, h, opt)) {
  if (samples < 8) throw DomainError("PeriodicOrbit needs at least 8 samples");
  const State3 y0 = orbit_anchor(p, h);
  const Reduced red = reduced_of(p);
  const auto m = static_cast<double>(samples);
  const auto sub = static_cast<std::size_t>(std::ceil(period_ / m / opt.step));
  dt_ = period_ / m;
  const double hs = dt_ / static_cast<double>(sub);
  std::array<double, 2> s{y0[0], y0[1]};
  pts_.reserve(samples);
  pts_.push_back(y0);
  for (std::size_t k = 1; k < samples; ++k) {
    for (std::size_t i = 0; i < sub; ++i) s = red.step(s, hs);
    pts_.push_back(lift(s));
  }
}

State3 PeriodicOrbit::at(double t) const {
  double r = std::fmod(t, period_);
  if (r < 0.0) r += period_;
  auto k = static_cast<std::size_t>(std::floor(r / dt_));
  if (k >= pts_.size()) k = pts_.size() - 1;
  const double rem = r - static_cast<double>(k) * dt_;
  if (rem <= 0.0) return pts_[k];
  const Reduced red = reduced_of(p_);
  return lift(red.step({pts_[k][0], pts_[k][1]}, rem));
}

double PeriodicOrbit::phase_of(const State3& x) const {
  const State3 y = x / norm(x);
  const std::size_t n = pts_.size();
  double best = INFINITY;
  double best_t = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double frac;
    const double d = segment_distance(y, pts_[k], pts_[(k + 1) % n], &frac);
    if (d < best) {
      best = d;
      best_t = (static_cast<double>(k) + frac) * dt_;
    }
  }
  return std::fmod(best_t, period_);
}

double PeriodicOrbit::distance(const State3& x) const {
  const std::size_t n = pts_.size();
  double best = INFINITY;
  std::size_t kb = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = segment_distance(x, pts_[k], pts_[(k + 1) % n]);
    if (d < best) best = d, kb = k;
  }
  // The polyline only locates the nearest arc; chords cut inside a curved
  // orbit, so minimize over orbit time around that segment.
  auto f = [&](double t) { return norm(x - at(t)); };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = (static_cast<double>(kb) - 1.0) * dt_, b = (static_cast<double>(kb) + 2.0) * dt_;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60 && b - a > 1e-12 * period_; ++it) {
    if (fc < fd) {
      b = d, d = c, fd = fc;
      c = b - g * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + g * (b - a), fd = f(d);
    }
  }
  double r = std::min(fc, fd);
  for (std::size_t k : {kb, (kb + 1) % n}) r = std::min(r, norm(x - pts_[k]));
  return r;
}

// ---------------------------------------------------------------------------
// Omega-limit classification

std::string to_string(OmegaKind k) {
  switch (k) {
    case OmegaKind::equilibrium: return "equilibrium";
    case OmegaKind::periodic_orbit: return "periodic_orbit";
    case OmegaKind::origin: return "origin";
  }
  return "?";
}

namespace {

// Index of the unique stable node among e1, e2, e3 on the sphere, or -1.
int sphere_sink(const Vec3& m, double tol) {
  const Sign s1 = sign_of(m[0], tol), s2 = sign_of(m[1], tol), s3 = sign_of(m[2], tol);
  int found = -1, count = 0;
  if (s1 == Sign::negative && s2 == Sign::positive) found = 0, ++count;
  if (s1 == Sign::positive && s3 == Sign::negative) found = 1, ++count;
  if (s2 == Sign::negative && s3 == Sign::positive) found = 2, ++count;
  return count == 1 ? found : -1;
}

OmegaLimitClass equilibrium_class(const State3& q, const std::string& label, const std::string& witness) {
  OmegaLimitClass c;
  c.kind = OmegaKind::equilibrium;
  c.point = q;
  c.label = label;
  c.basin_witness = witness;
  return c;
}

double slowest_rate(const ModelParams& p, double tol) {
  double r = 2.0 * p.alpha();
  for (double v : p.m().c)
    if (std::abs(v) > tol) r = std::min(r, std::abs(v));
  return r;
}

// Long-run integration with a convergence exit for equilibria.
State3 settle(const ModelParams& p, const State3& x0, double horizon, double step) {
  State3 x = x0;
  const auto n = static_cast<long>(std::ceil(horizon / step));
  for (long i = 0; i < n; ++i) {
    x = rk4_step(p, x, step);
    if (i % 256 == 255 && norm(drift(p, x)) < 1e-13) break;
  }
  if (!is_finite(x)) throw NumericalError("omega_limit: flow diverged");
  return x;
}

std::string curve_name_for_missing(int missing) {
  switch (missing) {
    case 2: return "Gamma12";
    case 1: return "Gamma13";
    default: return "Gamma23";
  }
}

}  // namespace

OmegaLimitClass omega_limit(const ModelParams& p, const State3& x0, const OmegaOptions& opt) {
  require_nonnegative(x0, "omega_limit");
  const double tol = opt.zero_tol;
  const Vec3 m = p.m();
  OmegaLimitClass out;
  std::vector<int> support;
  for (int i = 0; i < 3; ++i)
    if (x0[static_cast<std::size_t>(i)] > 0.0) support.push_back(i);

  const double horizon = opt.horizon > 0.0 ? opt.horizon : std::clamp(40.0 / slowest_rate(p, tol), 100.0, 4000.0);
  const double step = 1e-2;
  bool numeric_point = false;

  if (support.empty()) {
    out.kind = OmegaKind::origin;
    out.label = "O";
    out.basin_witness = "origin is an equilibrium";
    return out;
  }
  if (support.size() == 1) {
    const int i = support[0];
    out = equilibrium_class(unit(i), "e" + std::to_string(i + 1), "coordinate axis: ray of e" + std::to_string(i + 1));
  } else if (support.size() == 2) {
    const int i = support[0], j = support[1];
    // On plane {x_k = 0} the sphere rates are P_i = A_ij x_j^2, P_j = -A_ij x_i^2.
    double aij;
    if (i == 0 && j == 1)
      aij = -m[0];
    else if (i == 0 && j == 2)
      aij = m[1];
    else
      aij = -m[2];
    const std::string plane = "boundary plane x" + std::to_string(3 - i - j + 1) + "=0";
    const Sign s = sign_of(aij, tol);
    if (s == Sign::positive)
      out = equilibrium_class(unit(i), "e" + std::to_string(i + 1), plane);
    else if (s == Sign::negative)
      out = equilibrium_class(unit(j), "e" + std::to_string(j + 1), plane);
    else
      out = equilibrium_class(x0 / norm(x0), "curve:" + curve_name_for_missing(3 - i - j),
                              plane + " filled with equilibria (radial projection)");
  } else if (all_zero(m, tol)) {
    out = equilibrium_class(x0 / norm(x0), "sphere", "equilibrium sphere (radial projection)");
  } else if (same_nonzero_sign(m, tol)) {
    const ConeLevel cl = cone_level(p, x0, tol);
    if (cl.on_qstar_ray) {
      out = equilibrium_class(*qstar(p, tol), "Qstar", "ray of Qstar");
    } else {
      out.kind = OmegaKind::periodic_orbit;
      out.h = cl.h;
      out.label = "Gamma(h)";
      out.basin_witness = "invariant cone of level h > h*";
    }
  } else if (const int sink = sphere_sink(m, tol); sink >= 0) {
    out = equilibrium_class(unit(sink), "e" + std::to_string(sink + 1),
                            "interior: e" + std::to_string(sink + 1) + " is the stable node on the sphere");
  } else {
    // Interior point with a curve of equilibria attracting it; the limit
    // point is observed numerically.
    const State3 xf = settle(p, x0, horizon, step);
    int missing = 0;
    for (int c = 1; c < 3; ++c)
      if (xf[static_cast<std::size_t>(c)] < xf[static_cast<std::size_t>(missing)]) missing = c;
    out = equilibrium_class(xf, "curve:" + curve_name_for_missing(missing),
                            "interior: attracted to the stable arc of an equilibrium curve (observed limit point)");
    numeric_point = true;
  }

  if (!opt.numeric_check) return out;

  out.numeric_checked = true;
  if (out.kind == OmegaKind::periodic_orbit) {
    const State3 xf = flow_at(p, x0, std::min(horizon, 200.0), step);
    const double dh = std::abs(first_integral_or_nan(p, xf) - out.h) / out.h;
    const double dl = std::abs(sphere_residual(xf));
    out.numeric_residual = std::max(dh, dl);
    out.numeric_agrees = out.numeric_residual < std::max(opt.tol, 1e-6) && norm(xf - *qstar(p, tol)) > 1e-6;
  } else if (numeric_point) {
    const double r = norm(drift(p, out.point));
    double trans = 0.0;
    for (std::size_t c = 0; c < 3; ++c)
      if (out.point[c] < 1e-6) trans = std::max(trans, growth_rates(p, out.point)[c]);
    out.numeric_residual = r;
    out.numeric_agrees = r < opt.tol && trans <= opt.tol;
  } else {
    const State3 xf = settle(p, x0, horizon, step);
    out.numeric_residual = norm(xf - out.point);
    out.numeric_agrees = out.numeric_residual < opt.tol;
  }
  if (!out.numeric_agrees && opt.throw_on_mismatch)
    throw NumericalError("omega_limit: analytic classification disagrees with the numerical run", horizon,
                         fmt_check(out.numeric_residual));
  return out;
}

}  // namespace kolmo
