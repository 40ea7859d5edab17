#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kolmo/flow.hpp"
#include "kolmo/logistic.hpp"
#include "kolmo/model.hpp"
#include "kolmo/noise.hpp"

namespace kolmo {

enum class Scheme { euler_maruyama, milstein };

struct SchemeSpec {
  Scheme kind = Scheme::milstein;
  double dt = 1e-2;
};

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Norm above which a stochastic trajectory is declared blown up.
inline constexpr double kBlowUpNorm = 1e6;

/// Returns `path` itself when scheme.dt is an integer multiple of the path
/// step, or its bridge refinement when the path step is a power-of-two
/// multiple of scheme.dt. Sets `stride` to the number of path cells per step.
BrownianPath align_path(const BrownianPath& path, double dt, long& stride);

/// Direct simulation of the SDE from x0 on [0, t_end] with increments taken
/// from `path`.
TrajectoryRecord integrate_sde(const ModelParams& p, const BrownianPath& path, const State3& x0, double t_end,
                               const SchemeSpec& scheme, std::size_t record_every = 1);

/// Final state only; no trajectory storage.
State3 integrate_sde_final(const ModelParams& p, const BrownianPath& path, const State3& x0, double t_end,
                           const SchemeSpec& scheme);

/// g(t) Psi(int_0^t g^2, x0/g0) evaluated for increasing t on one path.
class Decomposer {
 public:
  Decomposer(const ModelParams& p, const BrownianPath& path, const State3& x0, double g0, double t_max,
             double flow_step = 5e-3);
  State3 at(double t);
  double g_at(double t) const { return track_.g_at(t); }
  double tau_at(double t) const { return track_.tau_at(t); }

 private:
  bool zero_;
  LogisticTrack track_;
  FlowCursor cursor_;
};

State3 decompose(const ModelParams& p, const BrownianPath& path, const State3& x0, double g0, double t,
                 double flow_step = 5e-3);

/// |integrate_sde(t) - decompose(t)| on one shared path.
double decomposition_gap(const ModelParams& p, const BrownianPath& path, const State3& x0, double t,
                         const SchemeSpec& scheme);

/// Same, with the path drawn from `seed`. When base_dt > dt the path is
/// sampled at base_dt and bridge-refined to dt, so gaps at different dt for
/// one seed share the same omega.
double decomposition_gap(const ModelParams& p, std::uint64_t seed, const State3& x0, double t, double dt,
                         Scheme kind = Scheme::milstein, double base_dt = 0.0);

/// Growth of du = F(base(t)) u dt along a base sampled at uniform step h,
/// RK4 with the base linearly interpolated at half steps. Renormalizes every
/// `renorm_every` steps (0 disables).
struct LinearizedGrowth {
  double log_norm = 0.0;  // ln |u(T)| - ln |u(0)|
  std::size_t renormalizations = 0;
  Vec3 direction;         // u(T)/|u(T)|
};
LinearizedGrowth linearized_growth(const ModelParams& p, const std::vector<State3>& base, double h, const Vec3& u0,
                                   std::size_t steps, std::size_t renorm_every);
/// Same with the base given as a node function n -> state, n in [0, steps].
LinearizedGrowth linearized_growth(const ModelParams& p, const std::function<State3(std::size_t)>& base, double h,
                                   const Vec3& u0, std::size_t steps, std::size_t renorm_every);

/// v(t_end) = u(t_end) exp(-sigma^2 t_end/2 + sigma W_t_end), with u solving
/// the linearization along `base` (a record on the grid of `path`).
Vec3 integrate_linearized(const ModelParams& p, const BrownianPath& path, const TrajectoryRecord& base,
                          const Vec3& v0, double t_end);

}  // namespace kolmo
