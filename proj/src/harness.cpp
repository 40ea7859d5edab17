#include "kolmo/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kolmo/flow.hpp"
#include "kolmo/logistic.hpp"
#include "kolmo/measure.hpp"
#include "kolmo/noise.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/random_dynamics.hpp"
#include "kolmo/rng.hpp"
#include "kolmo/sde.hpp"

namespace kolmo {

namespace {

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += v[i];
  }
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == ';') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool parse_double(const std::string& s, double& v) {
  try {
    std::size_t pos = 0;
    v = std::stod(s, &pos);
    return pos == s.size() && std::isfinite(v);
  } catch (...) {
    return false;
  }
}

/// Typed access to config keys; collects every problem before throwing.
class Reader {
 public:
  explicit Reader(const ExperimentConfig& c) : c_(c) {}

  double real(const std::string& key, double def, const std::function<bool(double)>& ok = {},
              const char* need = "") {
    used_.insert(key);
    const auto it = c_.values.find(key);
    if (it == c_.values.end()) return def;
    double v = 0.0;
    if (!parse_double(it->second, v)) {
      bad(key, "not a number: '" + it->second + "'");
      return def;
    }
    if (ok && !ok(v)) {
      bad(key, std::string("must be ") + need);
      return def;
    }
    return v;
  }

  double positive(const std::string& key, double def) {
    return real(key, def, [](double v) { return v > 0.0; }, "positive");
  }

  std::uint64_t u64(const std::string& key, std::uint64_t def) {
    used_.insert(key);
    const auto it = c_.values.find(key);
    if (it == c_.values.end()) return def;
    try {
      std::size_t pos = 0;
      if (!it->second.empty() && it->second[0] == '-') throw std::invalid_argument("negative");
      const auto v = std::stoull(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (...) {
      bad(key, "not a nonnegative integer: '" + it->second + "'");
      return def;
    }
  }

  std::size_t count(const std::string& key, std::size_t def) {
    const auto v = u64(key, def);
    if (v == 0) {
      bad(key, "must be at least 1");
      return def;
    }
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string& key, bool def) {
    used_.insert(key);
    const auto it = c_.values.find(key);
    if (it == c_.values.end()) return def;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    bad(key, "expected true or false");
    return def;
  }

  std::string word(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
    used_.insert(key);
    const auto it = c_.values.find(key);
    if (it == c_.values.end()) return def;
    if (std::find(allowed.begin(), allowed.end(), it->second) == allowed.end()) {
      bad(key, "expected one of {" + join(allowed, ", ") + "}, got '" + it->second + "'");
      return def;
    }
    return it->second;
  }

  std::vector<double> reals(const std::string& key, const std::vector<double>& def) {
    used_.insert(key);
    const auto it = c_.values.find(key);
    if (it == c_.values.end()) return def;
    std::vector<double> out;
    for (const auto& s : split_list(it->second)) {
      double v = 0.0;
      if (!parse_double(s, v)) {
        bad(key, "not a number list: '" + it->second + "'");
        return def;
      }
      out.push_back(v);
    }
    if (out.empty()) bad(key, "empty list");
    return out;
  }

  Vec3 vec3(const std::string& key, const Vec3& def) {
    const auto v = reals(key, {def[0], def[1], def[2]});
    if (v.size() != 3) {
      bad(key, "expected three comma-separated numbers");
      return def;
    }
    return Vec3{v[0], v[1], v[2]};
  }

  bool has(const std::string& key) const { return c_.values.count(key) > 0; }
  void bad(const std::string& key, const std::string& why) { problems_.push_back(key + ": " + why); }

  void finish() {
    for (const auto& [k, v] : c_.values)
      if (!used_.count(k)) problems_.push_back(k + ": unknown key for '" + c_.kind + "'");
    if (!problems_.empty()) throw ConfigError(problems_);
  }

 private:
  const ExperimentConfig& c_;
  std::set<std::string> used_;
  std::vector<std::string> problems_;
};

/// Reads alpha, sigma2 (or sigma) and d.
ModelParams read_params(Reader& r) {
  const double alpha = r.real("alpha", 1.0);
  const bool has_sigma = r.has("sigma");
  const double sigma = r.real("sigma", 0.0);
  const double s2 = r.real("sigma2", has_sigma ? sigma * sigma : 0.0);
  if (has_sigma && r.has("sigma2") && std::abs(sigma * sigma - s2) > 1e-12 * std::max(1.0, s2))
    r.bad("sigma", "conflicts with sigma2");
  const Vec3 d = r.vec3("d", Vec3{});
  try {
    return ModelParams::from_sigma2(alpha, s2, d);
  } catch (const DomainError& e) {
    r.bad("alpha/sigma2/d", e.what());
    return ModelParams(1.0, 0.0, Vec3{});
  }
}

struct Output {
  std::filesystem::path dir;
  Manifest* manifest;

  void write(const std::string& name, const std::string& content) const {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << content;
    manifest->files.push_back({name, fnv1a64(content), content.size()});
  }
  void note(const std::string& key, const std::string& value) const { manifest->summary[key] = value; }
  void note(const std::string& key, double value) const { manifest->summary[key] = num(value); }
};

std::string vec_csv(const State3& x) { return num(x[0]) + "," + num(x[1]) + "," + num(x[2]); }

std::vector<std::uint64_t> member_seeds(std::uint64_t seed, std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = rng::member_seed(seed, i);
  return s;
}

// ---------------------------------------------------------------------------

void cmd_classify(Reader& r, const ExperimentConfig&, const Output& out) {
  const ModelParams p = read_params(r);
  r.u64("seed", 1);
  r.finish();
  const EquilibriumSet eq = equilibria(p);
  out.write("classify.json", eq.to_json(p) + "\n");
  std::ostringstream csv;
  csv << "label,x1,x2,x3,ev1_re,ev1_im,ev2_re,ev2_im,ev3_re,ev3_im\n";
  for (const auto& e : eq.isolated) {
    csv << e.label << ',' << vec_csv(e.point);
    for (const auto& z : e.eigenvalues) csv << ',' << num(z.real()) << ',' << num(z.imag());
    csv << '\n';
  }
  out.write("equilibria.csv", csv.str());
  out.note("case", to_string(eq.regime.canonical_case));
  out.note("sign_pattern", eq.regime.pattern_string());
  out.note("isolated_equilibria", std::to_string(eq.isolated.size()));
  std::vector<std::string> curves;
  for (const auto& c : eq.curves) curves.push_back(c.name);
  out.note("curves", join(curves, ","));
  out.note("sphere", eq.sphere ? "true" : "false");
  if (eq.regime.canonical_case == CanonicalCase::I) out.note("h_star", h_star(p));
}

void cmd_flow(Reader& r, const ExperimentConfig&, const Output& out) {
  const ModelParams p = read_params(r);
  const State3 x0 = r.vec3("x0", State3{1, 1, 1});
  const double t_end = r.positive("t_end", 10.0);
  StepControl sc;
  sc.step = r.positive("step", sc.step);
  sc.tol = r.positive("tol", sc.tol);
  sc.adaptive = r.flag("adaptive", sc.adaptive);
  sc.record_every = r.count("record_every", 10);
  r.u64("seed", 1);
  r.finish();
  const TrajectoryRecord rec = integrate_flow(p.with_sigma(0.0), x0, t_end, sc);
  std::ostringstream csv;
  rec.write_csv(csv);
  out.write("trajectory.csv", csv.str());
  out.note("invariant_drift", rec.invariant_drift);
  out.note("drift_metric", rec.drift_metric);
  out.note("final", vec_csv(rec.back()));
}

void cmd_sde(Reader& r, const ExperimentConfig&, const Output& out) {
  const ModelParams p = read_params(r);
  const State3 x0 = r.vec3("x0", State3{1, 1, 1});
  const double t_end = r.positive("t_end", 10.0);
  const double dt = r.positive("dt", 1e-3);
  const std::string scheme = r.word("scheme", "milstein", {"milstein", "euler_maruyama"});
  const std::size_t every = r.count("record_every", 10);
  const std::uint64_t seed = r.u64("seed", 1);
  r.finish();
  const BrownianPath path = sample_path(seed, 0.0, t_end, dt);
  const TrajectoryRecord rec = integrate_sde(p, path, x0, t_end, SchemeSpec{scheme_from_string(scheme), dt}, every);
  std::ostringstream csv;
  rec.write_csv(csv);
  out.write("trajectory.csv", csv.str());
  out.note("left_octant", rec.left_octant ? "true" : "false");
  out.note("final", vec_csv(rec.back()));
}

void cmd_decompose_check(Reader& r, const ExperimentConfig& c, const Output& out) {
  const ModelParams p = read_params(r);
  const State3 x0 = r.vec3("x0", State3{1, 1, 1});
  const double t = r.positive("t", 1.0);
  auto dts = r.reals("dt_list", {1e-2, 5e-3, 2.5e-3});
  const std::string scheme = r.word("scheme", "milstein", {"milstein", "euler_maruyama"});
  const std::size_t n = r.count("n_seeds", 100);
  const std::uint64_t seed = r.u64("seed", 1);
  for (double d : dts)
    if (!(d > 0.0)) r.bad("dt_list", "entries must be positive");
  r.finish();
  std::sort(dts.begin(), dts.end(), std::greater<>());
  const double base = dts.front();
  const auto seeds = member_seeds(seed, n);
  std::ostringstream csv;
  csv << "dt,mean_gap,stderr,order\n";
  double prev = NAN, prev_dt = NAN;
  std::vector<double> means;
  for (double dt : dts) {
    std::vector<double> gaps(n);
    parallel_for(n, c.threads, [&](std::size_t i) {
      gaps[i] = decomposition_gap(p, seeds[i], x0, t, dt, scheme_from_string(scheme), base);
    });
    double m = 0.0;
    for (double g : gaps) m += g;
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (double g : gaps) ss += (g - m) * (g - m);
    const double se = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    const double order = std::isnan(prev) ? NAN : std::log(prev / m) / std::log(prev_dt / dt);
    csv << num(dt) << ',' << num(m) << ',' << num(se) << ',' << num(order) << '\n';
    prev = m;
    prev_dt = dt;
    means.push_back(m);
  }
  out.write("decomposition.csv", csv.str());
  out.note("finest_mean_gap", means.back());
}

void cmd_logistic_density(Reader& r, const ExperimentConfig& c, const Output& out) {
  const ModelParams p = read_params(r);
  const std::string source = r.word("source", "g_terminal", {"g_terminal", "u_g"});
  EnsembleOptions eo;
  eo.samples = r.count("samples", 100000);
  eo.dt = r.positive("dt", 2e-2);
  eo.tol = r.positive("tol", 1e-8);
  eo.seed = r.u64("seed", 1);
  eo.threads = c.threads;
  const double T = r.positive("T", 50.0);
  const double g0 = r.positive("g0", 1.0);
  const std::size_t bins = r.count("bins", 30);
  const double hi = r.positive("hi", 3.0);
  r.finish();
  require_positive_equilibrium(p, "logistic-density");
  const EmpiricalMeasure m = source == "u_g" ? u_g_ensemble(p, eo) : g_terminal_ensemble(p, g0, T, eo);
  const Histogram h = histogram(m, 0.0, hi, bins);
  std::ostringstream csv;
  csv << "bin_lo,bin_hi,empirical_density,analytic_mass_density\n";
  for (std::size_t k = 0; k < bins; ++k) {
    const double a = h.lo + static_cast<double>(k) * h.bin_width();
    const double mass = stationary_cdf(p, a + h.bin_width()) - stationary_cdf(p, a);
    csv << num(a) << ',' << num(a + h.bin_width()) << ',' << num(h.density[k]) << ',' << num(mass / h.bin_width())
        << '\n';
  }
  out.write("density.csv", csv.str());
  out.note("ks", ks_distance(m, [&](double s) { return stationary_cdf(p, s); }));
  const auto mode = density_mode(p);
  out.note("analytic_mode", mode ? num(*mode) : std::string("none"));
}

void lyapunov_rows(const std::vector<double>& s2s, double alpha, const Vec3& d, const std::string& measure,
                   const std::string& axis_key, const State3& x0, const LyapunovOptions& lo,
                   const std::vector<std::uint64_t>& seeds, unsigned threads, std::ostringstream& csv,
                   const Output& out) {
  csv << "sigma2,measure,axis,analytic,numeric,stderr\n";
  for (double s2 : s2s) {
    const ModelParams p = ModelParams::from_sigma2(alpha, s2, d);
    if (measure == "generic") {
      const Vec3 dir{1.0, 1.0, 1.0};
      const LyapunovEstimate e = lyapunov_numeric(p, seeds, LyapunovBase::from(x0), dir, lo, threads);
      csv << num(s2) << ",generic,top,nan," << num(e.value) << ',' << num(e.standard_error) << '\n';
      continue;
    }
    const MeasureId id = measure_from_string(measure);
    const Vec3 an = lyapunov_analytic(p, id);
    const LyapunovBase base =
        id == MeasureId::O ? LyapunovBase::origin() : LyapunovBase::equilibrium(static_cast<int>(id) - 1);
    for (int ax = 0; ax < 3; ++ax) {
      if (axis_key != "all" && std::to_string(ax + 1) != axis_key) continue;
      Vec3 dir{};
      dir[ax] = 1.0;
      const LyapunovEstimate e = lyapunov_numeric(p, seeds, base, dir, lo, threads);
      csv << num(s2) << ',' << measure << ',' << (ax + 1) << ',' << num(an[ax]) << ',' << num(e.value) << ','
          << num(e.standard_error) << '\n';
      out.note("numeric_" + num(s2) + "_" + std::to_string(ax + 1), e.value);
    }
  }
}

void cmd_lyapunov(Reader& r, const ExperimentConfig& c, const Output& out, bool sweep) {
  const double alpha = r.positive("alpha", 1.0);
  const Vec3 d = r.vec3("d", Vec3{});
  std::vector<double> s2s;
  if (sweep) {
    s2s = r.reals("sigma2_list", {0.5, 1.0, 2.0, 3.0});
  } else {
    s2s = {r.real("sigma2", 1.0, [](double v) { return v >= 0.0; }, "nonnegative")};
  }
  const std::string measure = r.word("measure", "O", {"O", "e1", "e2", "e3", "generic"});
  const std::string axis = r.word("axis", "all", {"all", "1", "2", "3"});
  const State3 x0 = r.vec3("x0", State3{1, 1, 1});
  LyapunovOptions lo;
  lo.T = r.positive("T", 1e4);
  lo.dt = r.positive("dt", 1e-2);
  lo.renorm_step = r.positive("renorm_step", 1.0);
  const std::size_t n = r.count("n_seeds", 20);
  const std::uint64_t seed = r.u64("seed", 1);
  for (double s2 : s2s) {
    if (!(s2 >= 0.0)) r.bad(sweep ? "sigma2_list" : "sigma2", "entries must be nonnegative");
    if (measure != "O" && !(s2 < 2.0 * alpha))
      r.bad(sweep ? "sigma2_list" : "sigma2", "measures at e_i need sigma^2 < 2 alpha");
  }
  r.finish();
  std::ostringstream csv;
  lyapunov_rows(s2s, alpha, d, measure, axis, x0, lo, member_seeds(seed, n), c.threads, csv, out);
  out.write("lyapunov.csv", csv.str());
}

void cmd_pullback(Reader& r, const ExperimentConfig&, const Output& out) {
  const ModelParams p = read_params(r);
  const State3 x0 = r.vec3("x0", State3{1, 0, 0});
  const double t_max = r.positive("t_max", 50.0);
  const double tol = r.positive("tol", 1e-8);
  const double dt = r.positive("dt", 1e-3);
  const std::uint64_t seed = r.u64("seed", 1);
  r.finish();
  const double ug_depth = p.sigma2() < 2.0 * p.alpha() ? 2.0 * truncation_depth(p, 1e-10) : 0.0;
  const BrownianPath path = sample_path(seed, -std::max(t_max, ug_depth), 0.0, dt);
  PullbackEvaluator ev(p, path, x0, t_max);
  std::ostringstream csv;
  csv << "t,x1,x2,x3,norm\n";
  const std::size_t last = ev.nodes() - 1;
  const std::size_t stride = std::max<std::size_t>(1, last / 2000);
  for (std::size_t k = 0; k <= last; k += stride) {
    const State3 x = ev.at_node(k);
    csv << num(static_cast<double>(k) * ev.dt()) << ',' << vec_csv(x) << ',' << num(norm(x)) << '\n';
  }
  out.write("pullback.csv", csv.str());
  const OmegaLimitSample lim = pullback_limit(p, path, x0, t_max, tol);
  out.note("kind", to_string(lim.kind));
  out.note("inconclusive", lim.inconclusive ? "true" : "false");
  out.note("deterministic_limit", lim.deterministic_label);
  out.note("last_difference", lim.last_difference);
  out.note("converged_at", lim.converged_at);
  if (lim.kind == PullbackKind::point) out.note("point", vec_csv(lim.point));
  if (lim.kind == PullbackKind::cycle) out.note("h", lim.h);
  if (p.sigma2() < 2.0 * p.alpha()) out.note("u_g", u_g(p, path).value);
}

double default_h(Reader& r, const ModelParams& p) {
  if (r.has("h")) return r.positive("h", 1.0);
  const double dh = r.positive("dh", 1.0);
  if (classify_regime(p).canonical_case != CanonicalCase::I) {
    r.bad("d", "cone commands need drift case I (all alpha + d_i of one sign)");
    return NAN;
  }
  return h_star(p) + dh;
}

void cmd_crps(Reader& r, const ExperimentConfig&, const Output& out) {
  const ModelParams p = read_params(r);
  const double h = default_h(r, p);
  const double tol = r.positive("tol", 1e-8);
  const double dt = r.positive("dt", 1e-3);
  CrpsOptions co;
  co.t_span = r.real("t_span", 0.0, [](double v) { return v >= 0.0; }, "nonnegative");
  co.check_points = r.count("check_points", 10);
  const std::uint64_t seed = r.u64("seed", 1);
  r.finish();
  require_positive_equilibrium(p, "crps");
  const double N = period_of_orbit(p, h);
  const double span = co.t_span > 0.0 ? co.t_span : 2.0 * N;
  const double back = 2.0 * truncation_depth(p, tol) + span + 8.0 * N * p.alpha() / p.kappa() + 10.0;
  const BrownianPath path = sample_path(seed, -back, span, dt);
  const CrpsSample s = crps(p, path, h, tol, co);
  std::ostringstream csv;
  csv << "t,x1,x2,x3\n";
  for (std::size_t i = 0; i < s.grid_t.size(); ++i) csv << num(s.grid_t[i]) << ',' << vec_csv(s.grid_psi[i]) << '\n';
  out.write("crps.csv", csv.str());
  std::ostringstream chk;
  chk << "t,T_h\n";
  for (std::size_t i = 0; i < s.sample_t.size(); ++i) chk << num(s.sample_t[i]) << ',' << num(s.sample_T[i]) << '\n';
  out.write("crps_periods.csv", chk.str());
  out.note("h", h);
  out.note("N_h", s.N_h);
  out.note("T_h", s.period_T);
  out.note("u_g", s.u_g);
  out.note("identity_residual", s.identity_residual);
  out.note("solution_residual", s.solution_residual);
}

void cmd_cone_occupation(Reader& r, const ExperimentConfig&, const Output& out) {
  const ModelParams p = read_params(r);
  const double h = default_h(r, p);
  OccupationOptions oo;
  oo.T = r.positive("T", 1e4);
  oo.burn_in = r.real("burn_in", -1.0);
  oo.dt = r.positive("dt", 2e-3);
  oo.sample_every = r.positive("sample_every", 0.05);
  oo.lambda = r.positive("lambda", 1.0);
  oo.start_phase = r.real("start_phase", 0.0, [](double v) { return v >= 0.0 && v < 1.0; }, "in [0, 1)");
  const bool compare = r.flag("compare", true);
  const double lambda2 = r.positive("lambda2", 3.0);
  const double phase2 = r.real("start_phase2", 0.5, [](double v) { return v >= 0.0 && v < 1.0; }, "in [0, 1)");
  const std::size_t bins = r.count("bins", 40);
  const std::uint64_t seed = r.u64("seed", 1);
  r.finish();
  const ConeOccupation a = occupation_measure_on_cone(p, rng::member_seed(seed, 0), h, oo);
  auto hist_csv = [&](const EmpiricalMeasure& m, double lo, double hi) {
    std::ostringstream s;
    histogram(m, lo, hi, bins).write_csv(s);
    return s.str();
  };
  out.write("log_radius_hist.csv", hist_csv(a.log_radius, -4.0, 2.0));
  out.write("phase_hist.csv", hist_csv(a.phase, 0.0, 1.0));
  out.note("h", h);
  out.note("period", a.period);
  out.note("samples", std::to_string(a.log_radius.size()));
  out.note("origin_fraction", a.origin_fraction);
  const auto radius_cdf = [&](double lr) { return stationary_cdf(p, std::exp(lr)); };
  out.note("ks_radius_vs_stationary", ks_distance(a.log_radius, radius_cdf));
  out.note("ks_phase_vs_uniform", ks_distance(a.phase, [](double u) { return std::clamp(u, 0.0, 1.0); }));
  if (compare) {
    OccupationOptions ob = oo;
    ob.lambda = lambda2;
    ob.start_phase = phase2;
    const ConeOccupation b = occupation_measure_on_cone(p, rng::member_seed(seed, 1), h, ob);
    out.note("ks_two_start_radius", ks_distance(a.log_radius, b.log_radius));
    out.note("ks_two_start_phase", ks_distance(a.phase, b.phase));
  }
}

void cmd_vanishing(Reader& r, const ExperimentConfig& c, const Output& out) {
  const double alpha = r.positive("alpha", 1.0);
  const Vec3 d = r.vec3("d", Vec3{});
  const auto s2s = r.reals("sigma2_list", {1.0, 0.5, 0.1, 0.01});
  const std::string target = r.word("target", "e1", {"e1", "e2", "e3", "Qstar", "cycle"});
  VanishingOptions vo;
  vo.samples = r.count("samples", vo.samples);
  vo.dt = r.positive("dt", vo.dt);
  vo.T = r.positive("T", vo.T);
  vo.occupation_dt = r.positive("occupation_dt", vo.occupation_dt);
  vo.sample_every = r.positive("sample_every", vo.sample_every);
  vo.seed = r.u64("seed", 1);
  vo.threads = c.threads;
  const ModelParams p0 = ModelParams::from_sigma2(alpha, 0.0, d);
  VanishingTarget tg;
  if (target == "cycle") {
    const double h = default_h(r, p0);
    tg = VanishingTarget::orbit(h);
  } else if (target == "Qstar") {
    const auto q = qstar(p0);
    if (!q) r.bad("target", "Qstar needs all alpha + d_i of one nonzero sign");
    tg = VanishingTarget::equilibrium(q ? *q : State3{1, 0, 0});
  } else {
    State3 q{};
    q[static_cast<std::size_t>(target[1] - '1')] = 1.0;
    tg = VanishingTarget::equilibrium(q);
  }
  for (double s2 : s2s)
    if (!(s2 >= 0.0 && s2 < 2.0 * alpha)) r.bad("sigma2_list", "entries must lie in [0, 2 alpha)");
  r.finish();
  const auto rows = vanishing_noise_sweep(alpha, d, s2s, tg, vo);
  std::ostringstream csv;
  csv << "sigma2,statistic,stderr,samples\n";
  for (const auto& row : rows)
    csv << num(row.sigma2) << ',' << num(row.statistic) << ',' << num(row.standard_error) << ',' << row.samples
        << '\n';
  out.write("vanishing.csv", csv.str());
  out.note("decreasing", decreasing_within_noise(rows) ? "true" : "false");
}

void cmd_p_bifurcation(Reader& r, const ExperimentConfig& c, const Output& out) {
  const double alpha = r.positive("alpha", 1.0);
  const auto s2s = r.reals("sigma2_list", {0.5, 1.0, 1.5});
  BifurcationOptions bo;
  bo.samples = r.count("samples", bo.samples);
  bo.dt = r.positive("dt", bo.dt);
  bo.tol = r.positive("tol", bo.tol);
  bo.bins = r.count("bins", bo.bins);
  bo.hi = r.positive("hi", bo.hi);
  bo.seed = r.u64("seed", 1);
  bo.threads = c.threads;
  for (double s2 : s2s)
    if (!(s2 > 0.0 && s2 < 2.0 * alpha)) r.bad("sigma2_list", "entries must lie in (0, 2 alpha)");
  r.finish();
  const auto rows = p_bifurcation_probe(alpha, s2s, bo);
  std::ostringstream csv;
  csv << "sigma2,analytic_shape,analytic_mode,empirical_shape,empirical_mode,bin_width,agree\n";
  bool all = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    csv << num(row.sigma2) << ',' << row.analytic_shape << ',' << num(row.analytic_mode) << ','
        << row.empirical_shape << ',' << num(row.empirical_mode) << ',' << num(row.bin_width) << ','
        << (row.agree ? "true" : "false") << '\n';
    std::ostringstream h;
    row.hist.write_csv(h);
    out.write("histogram_" + std::to_string(i) + ".csv", h.str());
    all = all && row.agree;
  }
  out.write("bifurcation.csv", csv.str());
  out.note("all_agree", all ? "true" : "false");
}

const std::map<std::string, std::string>& theorems() {
  static const std::map<std::string, std::string> t = {
      {"classify", "Equilibrium classification of the deterministic Kolmogorov drift"},
      {"flow", "First integrals and invariant cones of the deterministic flow"},
      {"sde", "Direct simulation of the stochastic Kolmogorov system"},
      {"decompose-check", "Decomposition of the stochastic flow into a logistic factor and the deterministic flow"},
      {"logistic-density", "Stationary density of the scalar logistic diffusion"},
      {"lyapunov", "Lyapunov exponents of the ergodic stationary measures"},
      {"lyapunov-sweep", "Lyapunov exponent threshold at the origin (sigma^2 = 2 alpha)"},
      {"pullback", "Pull-back omega-limit sets and the global attractor dichotomy"},
      {"crps", "Crauel random periodic solutions on invariant cones"},
      {"cone-occupation", "Existence and uniqueness of stationary measures on invariant cones"},
      {"vanishing-noise", "Vanishing-noise limit of stationary measures"},
      {"p-bifurcation", "Stochastic P-bifurcation of the stationary density"},
  };
  return t;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : DomainError("invalid configuration:\n  " + join(problems, "\n  ")), problems_(std::move(problems)) {}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      problems.push_back("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    try {
      c.set(key, value);
    } catch (const ConfigError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError({"config: cannot open '" + path + "'"});
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "kind") {
    kind = value;
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "threads") {
    try {
      std::size_t pos = 0;
      const long v = std::stol(value, &pos);
      if (pos != value.size() || v < 0) throw std::invalid_argument("threads");
      threads = static_cast<unsigned>(v);
    } catch (...) {
      throw ConfigError({"threads: expected a nonnegative integer, got '" + value + "'"});
    }
  } else {
    values[key] = value;
  }
}

std::string ExperimentConfig::canonical() const {
  std::string s = "kind=" + kind + "\n";
  for (const auto& [k, v] : values) s += k + "=" + v + "\n";
  return s;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["theorem"] = theorem;
  j["version"] = version;
  j["config_hash"] = hex64(config_hash);
  j["config"] = config;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) j["files"].push_back({{"name", f.name}, {"fnv1a64", hex64(f.checksum)}, {"bytes", f.bytes}});
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> v = {"classify",        "flow",       "sde",   "decompose-check",
                                             "logistic-density", "lyapunov",   "lyapunov-sweep",
                                             "pullback",        "crps",       "cone-occupation",
                                             "vanishing-noise", "p-bifurcation"};
  return v;
}

std::string theorem_of(const std::string& kind) {
  const auto it = theorems().find(kind);
  if (it == theorems().end()) throw ConfigError({"kind: unknown subcommand '" + kind + "'"});
  return it->second;
}

Manifest run(const ExperimentConfig& config) {
  Manifest m;
  m.kind = config.kind;
  m.theorem = theorem_of(config.kind);
  m.config_hash = config.hash();
  m.config = config.canonical();
  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  const Output out{dir, &m};
  Reader r(config);
  const std::string& k = config.kind;
  if (k == "classify") cmd_classify(r, config, out);
  else if (k == "flow") cmd_flow(r, config, out);
  else if (k == "sde") cmd_sde(r, config, out);
  else if (k == "decompose-check") cmd_decompose_check(r, config, out);
  else if (k == "logistic-density") cmd_logistic_density(r, config, out);
  else if (k == "lyapunov") cmd_lyapunov(r, config, out, false);
  else if (k == "lyapunov-sweep") cmd_lyapunov(r, config, out, true);
  else if (k == "pullback") cmd_pullback(r, config, out);
  else if (k == "crps") cmd_crps(r, config, out);
  else if (k == "cone-occupation") cmd_cone_occupation(r, config, out);
  else if (k == "vanishing-noise") cmd_vanishing(r, config, out);
  else if (k == "p-bifurcation") cmd_p_bifurcation(r, config, out);
  std::ofstream f(dir / "manifest.json", std::ios::binary);
  f << m.to_json();
  return m;
}

}  // namespace kolmo
