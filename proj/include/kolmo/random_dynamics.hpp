#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kolmo/flow.hpp"
#include "kolmo/logistic.hpp"
#include "kolmo/noise.hpp"
#include "kolmo/sde.hpp"

namespace kolmo {

/// Phi(t, theta_{-t} omega, x0): the decomposition evaluated on the shifted
/// path with g started at 1.
State3 pullback_point(const ModelParams& p, const BrownianPath& path, const State3& x0, double t);

/// All pull-back points t -> Phi(t, theta_{-t} omega, x0) on the grid from
/// one backward pass over the path. Agrees with `pullback_point` up to
/// rounding.
class PullbackEvaluator {
 public:
  PullbackEvaluator(const ModelParams& p, const BrownianPath& path, const State3& x0, double t_max,
                    double flow_step = 5e-3);
  double dt() const noexcept { return dt_; }
  std::size_t nodes() const noexcept { return ly_.size(); }
  /// Pull-back time t_n = n dt.
  State3 at_node(std::size_t n);
  double g_at_node(std::size_t n) const;
  double tau_at_node(std::size_t n) const;

 private:
  double alpha_;
  double dt_;
  bool zero_;
  std::vector<double> ly_;  // y(-t_n)
  std::vector<double> lb_;  // ln of the integral of e^{y} over [-t_n, 0]
  FlowCursor cursor_;
};

enum class PullbackKind { origin, point, cycle };
std::string to_string(PullbackKind k);

struct OmegaLimitSample {
  PullbackKind kind = PullbackKind::origin;
  /// True when the numeric criterion did not hold by t_max.
  bool inconclusive = true;
  State3 point;                     // point limit (origin: O)
  std::vector<State3> cycle_points;  // sampled limit set (cycle kind)
  double h = NAN;                    // cone level (cycle kind)
  double scale = NAN;                // limit of g(t, theta_{-t} omega, 1)
  std::string deterministic_label;   // omega-limit of x0 for the drift
  double converged_at = NAN;         // pull-back time where the criterion first held
  double last_difference = NAN;      // successive difference or Hausdorff distance
};

OmegaLimitSample pullback_limit(const ModelParams& p, const BrownianPath& path, const State3& x0, double t_max,
                                double tol);

/// u_g(omega) Q for an equilibrium Q of the drift.
State3 random_equilibrium(const ModelParams& p, const BrownianPath& path, const State3& Q, double tol = 1e-8);

// ---------------------------------------------------------------------------

enum class MeasureId { O, e1, e2, e3 };
MeasureId measure_from_string(const std::string& s);
std::string to_string(MeasureId m);

/// Closed-form exponents: (kappa, kappa, kappa) at the origin, and the
/// eigenvalues of the drift at e_i scaled by kappa/alpha at u_g e_i.
Vec3 lyapunov_analytic(const ModelParams& p, MeasureId m);

struct LyapunovBase {
  enum class Kind { origin, random_equilibrium, generic } kind = Kind::origin;
  int axis = 0;     // e_{axis+1} for random_equilibrium
  State3 x0;        // start for generic
  static LyapunovBase origin() { return {}; }
  static LyapunovBase equilibrium(int i) { return {Kind::random_equilibrium, i, {}}; }
  static LyapunovBase from(const State3& x) { return {Kind::generic, 0, x}; }
};

struct LyapunovOptions {
  double T = 1e4;
  double dt = 1e-2;
  double renorm_step = 1.0;
};

struct LyapunovEstimate {
  double value = 0.0;
  double horizon = 0.0;
  std::size_t renormalization_count = 0;
  double standard_error = 0.0;
  std::size_t seeds = 1;
  std::vector<double> per_seed;
};

LyapunovEstimate lyapunov_numeric(const ModelParams& p, std::uint64_t seed, const LyapunovBase& base,
                                  const Vec3& direction, const LyapunovOptions& opt = {});

/// Mean and standard error over seeds (parallel over seeds; the result does
/// not depend on the thread count).
LyapunovEstimate lyapunov_numeric(const ModelParams& p, const std::vector<std::uint64_t>& seeds,
                                  const LyapunovBase& base, const Vec3& direction, const LyapunovOptions& opt = {},
                                  unsigned threads = 0);

// ---------------------------------------------------------------------------

struct CrpsOptions {
  std::size_t check_points = 10;  // sampled t for the identity checks
  double t_span = 0.0;            // sampled t in (0, t_span]; 0 selects 2 N(h)
  double flow_step = 1e-3;
  double time_tol = 1e-9;
};

struct CrpsSample {
  double h = 0.0;
  State3 y0;
  double N_h = 0.0;
  double u_g = 0.0;
  double period_T = 0.0;  // T_h(omega)
  std::vector<double> sample_t;
  std::vector<double> sample_T;  // T_h(theta_{-t} omega)
  double identity_residual = 0.0;
  double solution_residual = 0.0;
  std::vector<double> grid_t;
  std::vector<State3> grid_psi;
};

/// Crauel random periodic solution built from Gamma(h) on one path.
CrpsSample crps(const ModelParams& p, const BrownianPath& path, double h, double tol, const CrpsOptions& opt = {});

/// Smallest T > 0 with int_{-(t+T)}^{-t} u_g(theta_s omega)^2 ds = N.
/// The bracket grows geometrically from `guess`.
double random_periodic_time(const RandomEquilibriumTrack& track, double t, double N, double guess,
                            double time_tol = 1e-9);

/// Max over time of |H1(x(t)) - h| from a point of Lambda(h): RK4 when
/// sigma = 0, the chosen scheme otherwise.
double cone_invariance_check(const ModelParams& p, std::uint64_t seed, double h, double t_end, double dt,
                             double lambda = 1.0, Scheme kind = Scheme::milstein);

}  // namespace kolmo
