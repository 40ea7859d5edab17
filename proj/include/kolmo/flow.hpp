#pragma once

#include <array>
#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kolmo/model.hpp"

namespace kolmo {

struct StepControl {
  double step = 5e-3;
  /// Target for the invariant drift: relative first-integral drift for
  /// interior starts, |L| for starts on the sphere, step-doubling
  /// difference otherwise.
  double tol = 1e-8;
  int max_halvings = 10;
  bool adaptive = true;
  std::size_t record_every = 1;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<State3> states;
  std::vector<double> H;  // first integral (NaN where not applicable)
  std::vector<double> L;  // sphere residual
  std::vector<double> W;  // driving path value; empty for deterministic runs

  double step_used = 0.0;
  double invariant_drift = 0.0;
  std::string drift_metric;  // "first_integral", "sphere", "step_doubling", "none"
  bool left_octant = false;
  double left_octant_time = NAN;
  bool boundary_proximity = false;

  std::size_t size() const noexcept { return times.size(); }
  const State3& back() const { return states.back(); }
  /// CSV with header t,x1,x2,x3,H,L (plus W when present).
  void write_csv(std::ostream& os) const;
};

/// Classical RK4 step of the deterministic drift.
State3 rk4_step(const ModelParams& p, const State3& x, double h);

TrajectoryRecord integrate_flow(const ModelParams& p, const State3& x0, double t_end, const StepControl& sc = {});

/// Psi(t, x0) at one time by fixed-step RK4.
State3 flow_at(const ModelParams& p, const State3& x0, double t, double step = 5e-3);

/// Re-entrant evaluator of Psi(tau, x0) on a fixed RK4 grid. Queries may come
/// in any order; the result depends only on tau. Monotone queries cost
/// amortized O(1) per grid step.
class FlowCursor {
 public:
  FlowCursor(const ModelParams& p, const State3& x0, double step = 5e-3);
  State3 at(double tau);
  double step() const noexcept { return h_; }

 private:
  ModelParams p_;
  double h_;
  long n_ = 0;
  State3 x_;
  std::vector<State3> checkpoints_;  // state at n = j * kCheckpointStride
  static constexpr long kCheckpointStride = 4096;
};

// ---------------------------------------------------------------------------

using Eigen3 = std::array<std::complex<double>, 3>;

struct Equilibrium {
  std::string label;  // O, e1, e2, e3, Qstar
  State3 point;
  Eigen3 eigenvalues;
};

/// Arc of equilibria in a coordinate plane, parameterized by the angle
/// theta in [0, pi/2]: point = cos(theta) e_i + sin(theta) e_j.
struct EquilibriumCurve {
  std::string name;  // Gamma12, Gamma13, Gamma23
  int i = 0;
  int j = 1;
  int missing = 2;
  /// Angle where the transverse rate vanishes (NaN when it keeps a sign).
  double split_angle = NAN;
  /// Angles where the transverse rate is negative: [stable_from, stable_to].
  double stable_from = NAN;
  double stable_to = NAN;
  std::vector<std::string> contains;

  State3 point(double theta) const;
  /// Growth rate of the missing coordinate at the curve point.
  double transverse_rate(const ModelParams& p, double theta) const;
  Eigen3 eigenvalues(const ModelParams& p, double theta) const;
};

struct EquilibriumSet {
  std::vector<Equilibrium> isolated;
  std::vector<EquilibriumCurve> curves;
  bool sphere = false;
  DriftRegime regime;

  const Equilibrium* find(const std::string& label) const;
  std::string to_json(const ModelParams& p) const;
};

EquilibriumSet equilibria(const ModelParams& p, double zero_tol = kDefaultZeroTolerance);

/// Table-of-eigenvalues closed forms; labels O, e1, e2, e3, Qstar.
Eigen3 eigenvalues_at(const ModelParams& p, const std::string& label, double zero_tol = kDefaultZeroTolerance);

/// Interior equilibrium on the sphere (all m_i of one nonzero sign).
std::optional<State3> qstar(const ModelParams& p, double zero_tol = kDefaultZeroTolerance);
/// 2 sqrt(m1 m2 m3 / (m1 + m2 + m3)).
double lambda_qstar(const ModelParams& p);

/// First integral H1 (sum of m nonzero) or H2 (sum zero, m not all zero).
double first_integral(const ModelParams& p, const State3& x, double zero_tol = kDefaultZeroTolerance);
/// First integral where defined, NaN otherwise (boundary points, all m zero).
double first_integral_or_nan(const ModelParams& p, const State3& x, double zero_tol = kDefaultZeroTolerance);

double h_star(const ModelParams& p, double zero_tol = kDefaultZeroTolerance);

struct ConeLevel {
  double h = 0.0;
  bool on_qstar_ray = false;
};
ConeLevel cone_level(const ModelParams& p, const State3& x, double zero_tol = kDefaultZeroTolerance);

// ---------------------------------------------------------------------------

/// Point of the periodic orbit Gamma(h) on the section {x2 = q2*, x1 > q1*}.
State3 orbit_anchor(const ModelParams& p, double h);

struct PeriodOptions {
  double step = 1e-3;
  double horizon = 1e4;
  double time_tol = 1e-9;
};

/// Minimal period N(h) of Gamma(h) from the reduced flow on the sphere.
double period_of_orbit(const ModelParams& p, double h, const PeriodOptions& opt = {});

/// Gamma(h) sampled uniformly in time over one period.
class PeriodicOrbit {
 public:
  PeriodicOrbit(const ModelParams& p, double h, std::size_t samples = 2048, const PeriodOptions& opt = {});

  double h() const noexcept { return h_; }
  double period() const noexcept { return period_; }
  const State3& anchor() const noexcept { return pts_.front(); }
  const std::vector<State3>& samples() const noexcept { return pts_; }
  /// Psi(t, anchor) for any t (periodic extension of the table, exact RK4
  /// correction from the nearest sample).
  State3 at(double t) const;
  /// Time in [0, period) of the orbit point closest to x/|x|.
  double phase_of(const State3& x) const;
  /// Euclidean distance from x to the orbit (polyline with refinement).
  double distance(const State3& x) const;

 private:
  ModelParams p_;
  double h_;
  double period_;
  double dt_;
  std::vector<State3> pts_;
};

// ---------------------------------------------------------------------------

enum class OmegaKind { equilibrium, periodic_orbit, origin };
std::string to_string(OmegaKind k);

struct OmegaLimitClass {
  OmegaKind kind = OmegaKind::origin;
  State3 point;           // limit point (equilibrium kind)
  double h = NAN;         // cone level (periodic kind)
  std::string label;      // O, e1, e2, e3, Qstar, curve:Gamma12, sphere
  std::string basin_witness;
  bool numeric_checked = false;
  bool numeric_agrees = true;
  double numeric_residual = NAN;
};

struct OmegaOptions {
  bool numeric_check = true;
  bool throw_on_mismatch = false;
  double horizon = 0.0;  // 0 selects a horizon from the slowest rate
  double tol = 1e-4;
  double zero_tol = kDefaultZeroTolerance;
};

OmegaLimitClass omega_limit(const ModelParams& p, const State3& x0, const OmegaOptions& opt = {});

}  // namespace kolmo
