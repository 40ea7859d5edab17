#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kolmo/flow.hpp"
#include "kolmo/logistic.hpp"
#include "kolmo/model.hpp"
#include "kolmo/sde.hpp"

namespace kolmo {

/// Weighted samples projected to one declared coordinate. Masses are kept
/// raw; `finalize` sorts canonically, so merging partial measures in any
/// order gives bit-identical results.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(std::string coordinate) : coordinate_(std::move(coordinate)) {}
  static EmpiricalMeasure from_values(std::vector<double> values, std::string coordinate = "value");

  void add(double value, double mass = 1.0);
  void add(double value, const State3& point, double mass = 1.0);
  void merge(const EmpiricalMeasure& other);
  void finalize();

  const std::string& coordinate() const noexcept { return coordinate_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  /// Sorted coordinate values (after finalize).
  const std::vector<double>& values() const;
  /// Normalized weights, summing to 1.
  std::vector<double> weights() const;
  const std::vector<State3>& points() const noexcept { return points_; }
  double total_mass() const;
  double mean() const;
  /// Right-continuous empirical CDF.
  double cdf(double x) const;

 private:
  void require_final() const;

  std::string coordinate_ = "value";
  std::vector<double> values_;
  std::vector<double> mass_;
  std::vector<State3> points_;
  bool final_ = true;
};

/// sup |F_emp - F| checked on both sides of every atom.
double ks_distance(const EmpiricalMeasure& emp, const std::function<double(double)>& cdf);
/// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> mass;     // weight per bin (sums to the in-range mass)
  std::vector<double> density;  // mass / bin width
  double bin_width() const { return (hi - lo) / static_cast<double>(mass.size()); }
  double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
  std::size_t mode_bin() const;
  void write_csv(std::ostream& os) const;
};
Histogram histogram(const EmpiricalMeasure& emp, double lo, double hi, std::size_t bins);

/// Density of mu_Q along the ray of Q: p(x_j/q_j)/|Q| on the ray, 0 off it.
double mu_Q_density(const ModelParams& p, const State3& Q, const State3& x);

// ---------------------------------------------------------------------------
// Streaming ensemble samplers. Each reproduces its path-based counterpart on
// sample_path(seed, ...) bit for bit without storing the path.

/// g(T) from g0 on the forward path of `seed` at step dt.
double sample_g_terminal(const ModelParams& p, std::uint64_t seed, double g0, double T, double dt);
/// u_g from the backward path of `seed`; the window grows until the tail
/// bound is met (up to max_depth).
RandomEquilibriumScalar sample_u_g(const ModelParams& p, std::uint64_t seed, double dt, double tol = 1e-8,
                                   double max_depth = 0.0);

struct EnsembleOptions {
  std::uint64_t seed = 1;
  std::size_t samples = 10000;
  double dt = 1e-2;
  double tol = 1e-8;
  unsigned threads = 0;
};

/// u_g over member seeds member_seed(seed, i).
EmpiricalMeasure u_g_ensemble(const ModelParams& p, const EnsembleOptions& opt);
/// g(T) over member seeds.
EmpiricalMeasure g_terminal_ensemble(const ModelParams& p, double g0, double T, const EnsembleOptions& opt);

// ---------------------------------------------------------------------------

struct OccupationOptions {
  double T = 1e4;
  double burn_in = -1.0;   // negative selects 10/(2 alpha - sigma^2)
  double dt = 2e-3;
  double sample_every = 0.05;
  double lambda = 1.0;     // start at lambda * Psi(phase * N(h), anchor)
  double start_phase = 0.0;  // fraction of the period
  Scheme scheme = Scheme::milstein;
  bool phases = true;
  bool keep_points = false;
};

struct ConeOccupation {
  double h = 0.0;
  double period = 0.0;
  EmpiricalMeasure log_radius{"log_radius"};
  EmpiricalMeasure phase{"phase"};  // orbit time / N(h) in [0, 1)
  double origin_fraction = 0.0;     // share of samples with |x| < 1e-3
  std::vector<State3> points;
};

/// Time-occupation of one SDE trajectory started on Lambda(h) \ {O}.
ConeOccupation occupation_measure_on_cone(const ModelParams& p, std::uint64_t seed, double h,
                                          const OccupationOptions& opt = {});

/// SDE trajectory from the forward stream of `seed`, visiting every
/// `every`-th state; identical to integrate_sde on sample_path(seed, 0, t_end, dt).
void stream_sde(const ModelParams& p, std::uint64_t seed, const State3& x0, double t_end, const SchemeSpec& scheme,
                std::size_t every, const std::function<void(double, const State3&)>& visit);

// ---------------------------------------------------------------------------

struct VanishingTarget {
  bool cycle = false;
  State3 Q{1.0, 0.0, 0.0};
  double h = 0.0;
  static VanishingTarget equilibrium(const State3& q) { return {false, q, 0.0}; }
  static VanishingTarget orbit(double h) { return {true, {}, h}; }
};

struct VanishingOptions {
  std::uint64_t seed = 1;
  std::size_t samples = 2000;  // u_g samples (equilibrium target)
  double dt = 1e-2;
  double T = 200.0;            // occupation horizon (cycle target)
  double occupation_dt = 1e-3;
  double sample_every = 0.1;
  unsigned threads = 0;
};

struct VanishingRow {
  double sigma2 = 0.0;
  double statistic = 0.0;  // mean distance to Q or to Gamma(h)
  double standard_error = 0.0;
  std::size_t samples = 0;
};

std::vector<VanishingRow> vanishing_noise_sweep(double alpha, const Vec3& d, const std::vector<double>& sigma2_list,
                                                const VanishingTarget& target, const VanishingOptions& opt = {});

/// True when each statistic is below its predecessor, allowing one
/// inversion within one standard error.
bool decreasing_within_noise(const std::vector<VanishingRow>& rows);

// ---------------------------------------------------------------------------

struct BifurcationOptions {
  std::uint64_t seed = 1;
  std::size_t samples = 1000000;
  double dt = 4e-2;
  double tol = 1e-8;
  std::size_t bins = 30;
  double hi = 3.0;
  unsigned threads = 0;
};

struct BifurcationRow {
  double sigma2 = 0.0;
  std::string analytic_shape;   // unimodal or monotone
  double analytic_mode = 0.0;   // NaN when monotone
  std::string empirical_shape;
  double empirical_mode = 0.0;  // histogram bin center
  double bin_width = 0.0;
  bool agree = false;
  Histogram hist;
};

std::vector<BifurcationRow> p_bifurcation_probe(double alpha, const std::vector<double>& sigma2_list,
                                                const BifurcationOptions& opt = {});

}  // namespace kolmo
