#include "kolmo/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "kolmo/parallel.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

EmpiricalMeasure EmpiricalMeasure::from_values(std::vector<double> values, std::string coordinate) {
  EmpiricalMeasure m(std::move(coordinate));
  m.mass_.assign(values.size(), 1.0);
  m.values_ = std::move(values);
  m.final_ = false;
  m.finalize();
  return m;
}

void EmpiricalMeasure::add(double value, double mass) {
  if (!points_.empty()) throw DomainError("empirical measure: mixing samples with and without points");
  if (!(mass >= 0.0) || !std::isfinite(value)) throw DomainError("empirical measure: bad sample or negative mass");
  values_.push_back(value);
  mass_.push_back(mass);
  final_ = false;
}

void EmpiricalMeasure::add(double value, const State3& point, double mass) {
  if (points_.size() != values_.size()) throw DomainError("empirical measure: mixing samples with and without points");
  if (!(mass >= 0.0) || !std::isfinite(value)) throw DomainError("empirical measure: bad sample or negative mass");
  values_.push_back(value);
  mass_.push_back(mass);
  points_.push_back(point);
  final_ = false;
}

void EmpiricalMeasure::merge(const EmpiricalMeasure& other) {
  if (other.coordinate_ != coordinate_) throw DomainError("empirical measure: merging different coordinates");
  const bool pts_here = !points_.empty() || values_.empty();
  const bool pts_there = !other.points_.empty() || other.values_.empty();
  if (pts_here != pts_there && !(values_.empty() || other.values_.empty()))
    throw DomainError("empirical measure: mixing samples with and without points");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  mass_.insert(mass_.end(), other.mass_.begin(), other.mass_.end());
  points_.insert(points_.end(), other.points_.begin(), other.points_.end());
  final_ = false;
  finalize();
}

void EmpiricalMeasure::finalize() {
  if (final_) return;
  std::vector<std::size_t> idx(values_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (values_[a] != values_[b]) return values_[a] < values_[b];
    return mass_[a] < mass_[b];
  });
  std::vector<double> v(idx.size()), w(idx.size());
  std::vector<State3> pts(points_.empty() ? 0 : idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    v[i] = values_[idx[i]];
    w[i] = mass_[idx[i]];
    if (!points_.empty()) pts[i] = points_[idx[i]];
  }
  values_ = std::move(v);
  mass_ = std::move(w);
  points_ = std::move(pts);
  final_ = true;
}

void EmpiricalMeasure::require_final() const {
  if (!final_) throw DomainError("empirical measure: call finalize() before querying");
}

const std::vector<double>& EmpiricalMeasure::values() const {
  require_final();
  return values_;
}

double EmpiricalMeasure::total_mass() const {
  double s = 0.0;
  for (double m : mass_) s += m;
  return s;
}

std::vector<double> EmpiricalMeasure::weights() const {
  require_final();
  const double tot = total_mass();
  if (!(tot > 0.0)) throw DomainError("empirical measure has zero mass");
  std::vector<double> w(mass_.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = mass_[i] / tot;
  return w;
}

double EmpiricalMeasure::mean() const {
  if (empty()) throw DomainError("empirical measure is empty");
  const double tot = total_mass();
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * mass_[i];
  return s / tot;
}

double EmpiricalMeasure::cdf(double x) const {
  require_final();
  if (empty()) throw DomainError("empirical measure is empty");
  const auto end = std::upper_bound(values_.begin(), values_.end(), x);
  double s = 0.0;
  for (auto it = values_.begin(); it != end; ++it) s += mass_[static_cast<std::size_t>(it - values_.begin())];
  return s / total_mass();
}

namespace {

// Distinct values with the cumulative normalized mass after each.
void steps_of(const EmpiricalMeasure& m, std::vector<double>& at, std::vector<double>& cum) {
  const auto& v = m.values();
  const auto w = m.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += w[i];
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    at.push_back(v[i]);
    cum.push_back(acc);
  }
  if (!cum.empty()) cum.back() = 1.0;
}

}  // namespace

double ks_distance(const EmpiricalMeasure& emp, const std::function<double(double)>& cdf) {
  if (emp.empty()) throw DomainError("ks_distance: empty measure");
  std::vector<double> at, cum;
  steps_of(emp, at, cum);
  double d = 0.0;
  double before = 0.0;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double f = cdf(at[i]);
    d = std::max({d, std::abs(f - before), std::abs(f - cum[i])});
    before = cum[i];
  }
  return d;
}

double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.empty() || b.empty()) throw DomainError("ks_distance: empty measure");
  std::vector<double> xa, ca, xb, cb;
  steps_of(a, xa, ca);
  steps_of(b, xb, cb);
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, d = 0.0;
  while (i < xa.size() || j < xb.size()) {
    const double x = (j >= xb.size() || (i < xa.size() && xa[i] <= xb[j])) ? xa[i] : xb[j];
    while (i < xa.size() && xa[i] == x) fa = ca[i++];
    while (j < xb.size() && xb[j] == x) fb = cb[j++];
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

std::size_t Histogram::mode_bin() const {
  return static_cast<std::size_t>(std::max_element(mass.begin(), mass.end()) - mass.begin());
}

void Histogram::write_csv(std::ostream& os) const {
  os << "bin_lo,bin_hi,mass,density\n";
  char buf[160];
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const double a = lo + static_cast<double>(i) * bin_width();
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", a, a + bin_width(), mass[i], density[i]);
    os << buf;
  }
}

Histogram histogram(const EmpiricalMeasure& emp, double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw DomainError("histogram needs hi > lo and bins > 0");
  if (emp.empty()) throw DomainError("histogram of an empty measure");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.mass.assign(bins, 0.0);
  const auto& v = emp.values();
  const auto w = emp.weights();
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < lo || v[i] > hi) continue;
    auto k = static_cast<std::size_t>((v[i] - lo) / width);
    if (k >= bins) k = bins - 1;
    h.mass[k] += w[i];
  }
  h.density.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) h.density[k] = h.mass[k] / width;
  return h;
}

double mu_Q_density(const ModelParams& p, const State3& Q, const State3& x) {
  require_positive_equilibrium(p, "mu_Q_density");
  const double nq = norm(Q);
  if (!(nq > 0.0)) throw DomainError("mu_Q_density: Q must differ from O");
  require_finite(x, "mu_Q_density");
  const double nx = norm(x);
  if (nx == 0.0) return 0.0;
  if (norm(x / nx - Q / nq) > 1e-9) return 0.0;
  std::size_t j = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (Q[i] > Q[j]) j = i;
  return stationary_density(p, x[j] / Q[j]) / nq;
}

// ---------------------------------------------------------------------------

double sample_g_terminal(const ModelParams& p, std::uint64_t seed, double g0, double T, double dt) {
  if (!(g0 > 0.0) || !std::isfinite(g0)) throw DomainError("g0 must be positive");
  if (!(T >= 0.0) || !(dt > 0.0)) throw DomainError("sample_g_terminal needs T >= 0 and dt > 0");
  const double alpha = p.alpha();
  const double kappa = p.kappa();
  const double sigma = p.sigma();
  const double sq = std::sqrt(dt);
  const long n_end = static_cast<long>(std::ceil(T / dt - 1e-9));
  rng::NormalStream fwd(forward_stream_key(seed));
  double w = 0.0;
  double k = 1.0 / (2.0 * alpha * g0 * g0);
  for (long n = 0; n < n_end; ++n) {
    const double w_next = w + sq * fwd();
    const double dy = 2.0 * (kappa * dt + sigma * (w_next - w));
    k = detail::k_step(k, dy, dt);
    w = w_next;
  }
  return 1.0 / std::sqrt(2.0 * alpha * k);
}

RandomEquilibriumScalar sample_u_g(const ModelParams& p, std::uint64_t seed, double dt, double tol, double max_depth) {
  require_positive_equilibrium(p, "u_g");
  const double S = truncation_depth(p, tol);
  if (max_depth <= 0.0) max_depth = 20.0 * S;
  const double kappa = p.kappa();
  const double sigma = p.sigma();
  const double two_a = 2.0 * p.alpha();
  const double sq = std::sqrt(dt);
  const long k_need = -static_cast<long>(std::ceil(S / dt - 1e-9));
  const long k_min = -static_cast<long>(std::ceil(max_depth / dt - 1e-9));
  rng::NormalStream bwd(backward_stream_key(seed));
  double w = 0.0;
  double y = 0.0;
  double j = 0.0;
  RandomEquilibriumScalar out;
  for (long k = 0;; --k) {
    if (k <= k_need) {
      const double tail = std::exp(y) / (2.0 * kappa);
      const double u_in = 1.0 / std::sqrt(two_a * j);
      const double u_full = 1.0 / std::sqrt(two_a * (j + tail));
      const double bound = u_in - u_full;
      if (bound < tol) {
        out.value = u_full;
        out.j = j + tail;
        out.truncation_depth = -static_cast<double>(k) * dt;
        out.tail_bound = bound;
        return out;
      }
      if (k <= k_min)
        throw NumericalError("u_g: tail bound unreachable within the maximal depth", static_cast<double>(k) * dt,
                             bound);
    }
    const double w_prev = w - sq * bwd();
    const double dy = 2.0 * (kappa * dt + sigma * (w - w_prev));
    const double em = std::expm1(-dy);
    j += dt * std::exp(y) * (dy == 0.0 ? 1.0 : -em / dy);
    y -= dy;
    w = w_prev;
    if (!std::isfinite(j)) throw NumericalError("u_g: backward integral overflowed", static_cast<double>(k) * dt);
  }
}

EmpiricalMeasure u_g_ensemble(const ModelParams& p, const EnsembleOptions& opt) {
  if (opt.samples == 0) throw DomainError("ensemble needs at least one sample");
  std::vector<double> v(opt.samples);
  parallel_for(opt.samples, opt.threads, [&](std::size_t i) {
    v[i] = sample_u_g(p, rng::member_seed(opt.seed, i), opt.dt, opt.tol).value;
  });
  return EmpiricalMeasure::from_values(std::move(v), "u_g");
}

EmpiricalMeasure g_terminal_ensemble(const ModelParams& p, double g0, double T, const EnsembleOptions& opt) {
  if (opt.samples == 0) throw DomainError("ensemble needs at least one sample");
  std::vector<double> v(opt.samples);
  parallel_for(opt.samples, opt.threads,
               [&](std::size_t i) { v[i] = sample_g_terminal(p, rng::member_seed(opt.seed, i), g0, T, opt.dt); });
  return EmpiricalMeasure::from_values(std::move(v), "g");
}

// ---------------------------------------------------------------------------

void stream_sde(const ModelParams& p, std::uint64_t seed, const State3& x0, double t_end, const SchemeSpec& scheme,
                std::size_t every, const std::function<void(double, const State3&)>& visit) {
  require_finite(x0, "stream_sde");
  if (x0[0] < 0.0 || x0[1] < 0.0 || x0[2] < 0.0) throw DomainError("stream_sde: x0 must lie in R^3_+");
  if (!(t_end > 0.0) || !(scheme.dt > 0.0)) throw DomainError("stream_sde needs t_end > 0 and dt > 0");
  const double dt = scheme.dt;
  const auto n = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  every = std::max<std::size_t>(1, every);
  const double sq = std::sqrt(dt);
  const double sigma = p.sigma();
  const double half_s2 = 0.5 * p.sigma2();
  const bool milstein = scheme.kind == Scheme::milstein;
  rng::NormalStream fwd(forward_stream_key(seed));
  double w = 0.0;
  State3 x = x0;
  visit(0.0, x);
  for (long i = 0; i < n; ++i) {
    const double w_next = w + sq * fwd();
    const double dw = w_next - w;
    w = w_next;
    const Vec3 b = drift(p, x);
    double factor = sigma * dw;
    if (milstein) factor += half_s2 * (dw * dw - dt);
    x = x + dt * b + factor * x;
    const double t = static_cast<double>(i + 1) * dt;
    if (!is_finite(x) || norm(x) > kBlowUpNorm)
      throw NumericalError("integrate_sde: blow-up (norm above 1e6); reduce dt", t, norm(x));
    if ((static_cast<std::size_t>(i) + 1) % every == 0 || i + 1 == n) visit(t, x);
  }
}

ConeOccupation occupation_measure_on_cone(const ModelParams& p, std::uint64_t seed, double h,
                                          const OccupationOptions& opt) {
  require_positive_equilibrium(p, "occupation_measure_on_cone");
  if (classify_regime(p).canonical_case != CanonicalCase::I)
    throw DomainError("occupation_measure_on_cone needs drift case I");
  if (!(h > h_star(p))) throw DomainError("occupation_measure_on_cone needs h > h*");
  if (!(opt.lambda > 0.0)) throw DomainError("occupation start must differ from O");
  if (!(opt.T > 0.0) || !(opt.sample_every > 0.0)) throw DomainError("occupation needs T > 0 and sample_every > 0");
  const double burn = opt.burn_in >= 0.0 ? opt.burn_in : 10.0 / (2.0 * p.alpha() - p.sigma2());
  if (!(burn < opt.T)) throw DomainError("occupation burn-in must be shorter than T");

  const PeriodicOrbit orbit(p, h, 512);
  ConeOccupation out;
  out.h = h;
  out.period = orbit.period();
  const State3 x0 = opt.lambda * orbit.at(opt.start_phase * orbit.period());
  const auto every = static_cast<std::size_t>(std::max(1.0, std::round(opt.sample_every / opt.dt)));
  std::size_t near_origin = 0, count = 0;
  stream_sde(p, seed, x0, opt.T, SchemeSpec{opt.scheme, opt.dt}, every, [&](double t, const State3& x) {
    if (t < burn - 1e-12) return;
    const double r = norm(x);
    ++count;
    if (r < 1e-3) ++near_origin;
    if (!(r > 0.0)) return;
    out.log_radius.add(std::log(r));
    if (opt.phases) out.phase.add(orbit.phase_of(x) / orbit.period());
    if (opt.keep_points) out.points.push_back(x);
  });
  out.log_radius.finalize();
  out.phase.finalize();
  out.origin_fraction = count ? static_cast<double>(near_origin) / static_cast<double>(count) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void mean_and_se(const std::vector<double>& v, double& mean, double& se) {
  const double n = static_cast<double>(v.size());
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

}  // namespace

std::vector<VanishingRow> vanishing_noise_sweep(double alpha, const Vec3& d, const std::vector<double>& sigma2_list,
                                                const VanishingTarget& target, const VanishingOptions& opt) {
  if (sigma2_list.empty()) throw DomainError("vanishing-noise sweep needs at least one sigma^2");
  std::vector<VanishingRow> rows;
  for (double s2 : sigma2_list) {
    const ModelParams p = ModelParams::from_sigma2(alpha, s2, d);
    require_positive_equilibrium(p, "vanishing_noise_sweep");
    VanishingRow row;
    row.sigma2 = s2;
    std::vector<double> dist;
    if (!target.cycle) {
      const double nq = norm(target.Q);
      if (!(nq > 0.0)) throw DomainError("vanishing-noise target Q must differ from O");
      if (norm(drift(p, target.Q)) > 1e-9 * std::max(1.0, nq * nq * nq))
        throw DomainError("vanishing-noise target is not an equilibrium");
      EnsembleOptions eo;
      eo.seed = opt.seed;
      eo.samples = opt.samples;
      eo.dt = opt.dt;
      eo.threads = opt.threads;
      const EmpiricalMeasure u = u_g_ensemble(p, eo);
      for (double x : u.values()) dist.push_back(nq * std::abs(x - 1.0));
    } else {
      OccupationOptions oo;
      oo.T = opt.T;
      oo.dt = opt.occupation_dt;
      oo.sample_every = opt.sample_every;
      oo.lambda = 2.0;
      oo.phases = false;
      oo.keep_points = true;
      const ConeOccupation occ = occupation_measure_on_cone(p, opt.seed, target.h, oo);
      const PeriodicOrbit orbit(p, target.h, 1024);
      // Batch means over 20 consecutive blocks for the standard error.
      const std::size_t nb = 20;
      const std::size_t per = std::max<std::size_t>(1, occ.points.size() / nb);
      std::vector<double> all(occ.points.size());
      parallel_for(occ.points.size(), opt.threads, [&](std::size_t i) { all[i] = orbit.distance(occ.points[i]); });
      for (std::size_t b = 0; b + per <= all.size(); b += per) {
        double s = 0.0;
        for (std::size_t i = b; i < b + per; ++i) s += all[i];
        dist.push_back(s / static_cast<double>(per));
      }
      row.samples = all.size();
    }
    mean_and_se(dist, row.statistic, row.standard_error);
    if (!target.cycle) row.samples = dist.size();
    rows.push_back(row);
  }
  return rows;
}

bool decreasing_within_noise(const std::vector<VanishingRow>& rows) {
  int inversions = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].statistic < rows[i - 1].statistic) continue;
    const double se = std::max(rows[i].standard_error, rows[i - 1].standard_error);
    if (rows[i].statistic - rows[i - 1].statistic > se) return false;
    ++inversions;
  }
  return inversions <= 1;
}

// ---------------------------------------------------------------------------

std::vector<BifurcationRow> p_bifurcation_probe(double alpha, const std::vector<double>& sigma2_list,
                                                const BifurcationOptions& opt) {
  std::vector<BifurcationRow> rows;
  for (double s2 : sigma2_list) {
    const ModelParams p = ModelParams::from_sigma2(alpha, s2, Vec3{});
    require_positive_equilibrium(p, "p_bifurcation_probe");
    BifurcationRow row;
    row.sigma2 = s2;
    const auto mode = density_mode(p);
    row.analytic_shape = mode ? "unimodal" : "monotone";
    row.analytic_mode = mode ? *mode : NAN;
    EnsembleOptions eo;
    eo.seed = opt.seed;
    eo.samples = opt.samples;
    eo.dt = opt.dt;
    eo.tol = opt.tol;
    eo.threads = opt.threads;
    const EmpiricalMeasure u = u_g_ensemble(p, eo);
    row.hist = histogram(u, 0.0, opt.hi, opt.bins);
    row.bin_width = row.hist.bin_width();
    const std::size_t k = row.hist.mode_bin();
    row.empirical_shape = k == 0 ? "monotone" : "unimodal";
    row.empirical_mode = row.hist.center(k);
    row.agree = row.empirical_shape == row.analytic_shape;
    if (row.agree && mode) {
      const auto k_true = static_cast<long>(std::floor(*mode / row.bin_width));
      row.agree = std::abs(static_cast<long>(k) - k_true) <= 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace kolmo
