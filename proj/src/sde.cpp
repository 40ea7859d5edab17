#include "kolmo/sde.hpp"

#include <algorithm>

namespace kolmo {

const char* to_string(Scheme s) { return s == Scheme::milstein ? "milstein" : "euler_maruyama"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "milstein") return Scheme::milstein;
  if (s == "euler_maruyama" || s == "euler" || s == "em") return Scheme::euler_maruyama;
  throw DomainError("unknown scheme '" + s + "'");
}

BrownianPath align_path(const BrownianPath& path, double dt, long& stride) {
  if (!(dt > 0.0)) throw DomainError("scheme step must be positive");
  const double r = dt / path.dt();
  const double rr = std::round(r);
  if (rr >= 1.0 && std::abs(r - rr) <= 1e-9 * rr) {
    stride = static_cast<long>(rr);
    return path;
  }
  const double inv = path.dt() / dt;
  const double ii = std::round(inv);
  const auto f = static_cast<long>(ii);
  if (ii >= 2.0 && std::abs(inv - ii) <= 1e-9 * ii && (f & (f - 1)) == 0) {
    stride = 1;
    return refine(path, static_cast<int>(f));
  }
  throw DomainError("scheme step and path step must have an integer (power-of-two when finer) ratio");
}

namespace {

template <class Visit>
State3 run_scheme(const ModelParams& p, const BrownianPath& path_in, const State3& x0, double t_end,
                  const SchemeSpec& scheme, Visit&& visit) {
  require_finite(x0, "integrate_sde");
  if (x0[0] < 0.0 || x0[1] < 0.0 || x0[2] < 0.0) throw DomainError("integrate_sde: x0 must lie in R^3_+");
  if (!(t_end > 0.0)) throw DomainError("integrate_sde needs t_end > 0");
  long stride = 1;
  const BrownianPath path = align_path(path_in, scheme.dt, stride);
  path.require_covers(0.0, t_end, "integrate_sde");
  const double dt = scheme.dt;
  const double r = t_end / dt;
  const auto n = static_cast<long>(std::round(r));
  if (std::abs(r - static_cast<double>(n)) > 1e-7 * std::max(1.0, r))
    throw DomainError("integrate_sde: t_end must be a multiple of the scheme step");
  const double sigma = p.sigma();
  const double half_s2 = 0.5 * p.sigma2();
  const bool milstein = scheme.kind == Scheme::milstein;
  State3 x = x0;
  visit(0L, 0.0, x, 0.0);
  for (long i = 0; i < n; ++i) {
    const double dw = path.increment(i * stride, (i + 1) * stride);
    const Vec3 b = drift(p, x);
    double factor = sigma * dw;
    if (milstein) factor += half_s2 * (dw * dw - dt);
    x = x + dt * b + factor * x;
    const double t = static_cast<double>(i + 1) * dt;
    if (!is_finite(x) || norm(x) > kBlowUpNorm)
      throw NumericalError("integrate_sde: blow-up (norm above 1e6); reduce dt", t, norm(x));
    visit(i + 1, t, x, path.at((i + 1) * stride));
  }
  return x;
}

}  // namespace

TrajectoryRecord integrate_sde(const ModelParams& p, const BrownianPath& path, const State3& x0, double t_end,
                               const SchemeSpec& scheme, std::size_t record_every) {
  TrajectoryRecord rec;
  rec.step_used = scheme.dt;
  rec.drift_metric = "none";
  const std::size_t every = std::max<std::size_t>(1, record_every);
  const auto n_total = static_cast<long>(std::round(t_end / scheme.dt));
  run_scheme(p, path, x0, t_end, scheme, [&](long i, double t, const State3& x, double w) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (x[c] < 0.0 && !rec.left_octant) {
        rec.left_octant = true;
        rec.left_octant_time = t;
      }
      if (x0[c] > 0.0 && std::abs(x[c]) < 1e-14) rec.boundary_proximity = true;
    }
    if (i % static_cast<long>(every) == 0 || i == n_total) {
      rec.times.push_back(t);
      rec.states.push_back(x);
      rec.H.push_back(first_integral_or_nan(p, x));
      rec.L.push_back(sphere_residual(x));
      rec.W.push_back(w);
    }
  });
  return rec;
}

State3 integrate_sde_final(const ModelParams& p, const BrownianPath& path, const State3& x0, double t_end,
                           const SchemeSpec& scheme) {
  return run_scheme(p, path, x0, t_end, scheme, [](long, double, const State3&, double) {});
}

// ---------------------------------------------------------------------------

Decomposer::Decomposer(const ModelParams& p, const BrownianPath& path, const State3& x0, double g0, double t_max,
                       double flow_step)
    : zero_(x0 == State3{}),
      track_(p, path, g0, t_max),
      cursor_(p, x0 / g0, flow_step) {
  require_finite(x0, "decompose");
}

State3 Decomposer::at(double t) {
  if (zero_) return State3{};
  const double g = track_.g_at(t);
  const double tau = std::max(0.0, track_.tau_at(t));
  return g * cursor_.at(tau);
}

State3 decompose(const ModelParams& p, const BrownianPath& path, const State3& x0, double g0, double t,
                 double flow_step) {
  if (!(g0 > 0.0)) throw DomainError("decompose needs g0 > 0");
  if (!(t >= 0.0)) throw DomainError("decompose needs t >= 0");
  if (t == 0.0) return x0;
  Decomposer d(p, path, x0, g0, t, flow_step);
  return d.at(t);
}

double decomposition_gap(const ModelParams& p, const BrownianPath& path, const State3& x0, double t,
                         const SchemeSpec& scheme) {
  long stride = 1;
  const BrownianPath aligned = align_path(path, scheme.dt, stride);
  const State3 direct = integrate_sde_final(p, aligned, x0, t, scheme);
  const State3 formula = decompose(p, aligned, x0, 1.0, t);
  return norm(direct - formula);
}

double decomposition_gap(const ModelParams& p, std::uint64_t seed, const State3& x0, double t, double dt,
                         Scheme kind, double base_dt) {
  if (base_dt <= 0.0) base_dt = dt;
  const BrownianPath base = sample_path(seed, 0.0, t, base_dt);
  return decomposition_gap(p, base, x0, t, SchemeSpec{kind, dt});
}

// ---------------------------------------------------------------------------

LinearizedGrowth linearized_growth(const ModelParams& p, const std::vector<State3>& base, double h, const Vec3& u0,
                                   std::size_t steps, std::size_t renorm_every) {
  if (steps + 1 > base.size()) throw DomainError("linearization: base trajectory shorter than the horizon");
  return linearized_growth(
      p, [&base](std::size_t n) { return base[n]; }, h, u0, steps, renorm_every);
}

LinearizedGrowth linearized_growth(const ModelParams& p, const std::function<State3(std::size_t)>& base, double h,
                                   const Vec3& u0, std::size_t steps, std::size_t renorm_every) {
  const double n0 = norm(u0);
  if (!(n0 > 0.0)) throw DomainError("linearization: initial vector must be nonzero");
  LinearizedGrowth out;
  Vec3 u = u0 / n0;
  double acc = 0.0;
  State3 b0 = base(0);
  Mat3 f0 = jacobian(p, b0);
  for (std::size_t n = 0; n < steps; ++n) {
    const State3 b2 = base(n + 1);
    const Mat3 f2 = jacobian(p, b2);
    const Mat3 f1 = jacobian(p, 0.5 * (b0 + b2));
    const Vec3 k1 = f0 * u;
    const Vec3 k2 = f1 * (u + (0.5 * h) * k1);
    const Vec3 k3 = f1 * (u + (0.5 * h) * k2);
    const Vec3 k4 = f2 * (u + h * k3);
    u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    f0 = f2;
    b0 = b2;
    if (renorm_every > 0 && (n + 1) % renorm_every == 0) {
      const double nu = norm(u);
      if (!(nu > 0.0) || !std::isfinite(nu)) throw NumericalError("linearization: vector degenerated");
      acc += std::log(nu);
      u = u / nu;
      ++out.renormalizations;
    }
  }
  const double nu = norm(u);
  if (!(nu > 0.0) || !std::isfinite(nu)) throw NumericalError("linearization: vector degenerated; renormalize more often");
  out.log_norm = acc + std::log(nu);
  out.direction = u / nu;
  return out;
}

Vec3 integrate_linearized(const ModelParams& p, const BrownianPath& path, const TrajectoryRecord& base,
                          const Vec3& v0, double t_end) {
  if (base.size() < 2) throw DomainError("integrate_linearized: base needs at least two samples");
  const double h = base.times[1] - base.times[0];
  if (std::abs(base.times[0]) > 1e-12) throw DomainError("integrate_linearized: base must start at t = 0");
  const double r = t_end / h;
  const auto steps = static_cast<std::size_t>(std::llround(r));
  if (std::abs(r - static_cast<double>(steps)) > 1e-7 * std::max(1.0, r))
    throw DomainError("integrate_linearized: t_end must sit on the base grid");
  if (steps + 1 > base.size()) throw DomainError("integrate_linearized: base does not cover t_end");
  path.require_covers(0.0, t_end, "integrate_linearized");
  const long k = path.node_of(t_end);
  for (std::size_t n = 1; n < std::min<std::size_t>(base.size(), 4); ++n)
    if (std::abs(base.times[n] - base.times[n - 1] - h) > 1e-9 * h)
      throw DomainError("integrate_linearized: base must be uniformly sampled");
  const LinearizedGrowth g = linearized_growth(p, base.states, h, v0, steps, 0);
  const double logz = -0.5 * p.sigma2() * t_end + p.sigma() * path.at(k);
  return std::exp(g.log_norm + logz) * norm(v0) * g.direction;
}

}  // namespace kolmo
