#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace kolmo {

/// Two-sided Wiener path on the grid t_k = k*dt, t_min <= t_k <= t_max.
///
/// Node values live in an immutable shared buffer; a path is a view with an
/// anchor index, so W(t_k) = buf[anchor + k] - buf[anchor]. Shifting moves the
/// anchor and never copies. Increments are read as adjacent buffer
/// differences, which makes them identical across every shifted view.
class BrownianPath {
 public:
  BrownianPath() = default;

  double dt() const noexcept { return dt_; }
  std::uint64_t seed() const noexcept { return seed_; }
  /// Number of halvings applied to the originally sampled grid.
  int refinement_level() const noexcept { return level_; }

  /// Index range of nodes relative to t = 0.
  long k_min() const noexcept { return -static_cast<long>(anchor_); }
  long k_max() const noexcept { return static_cast<long>(buf_->size() - 1 - anchor_); }
  double t_min() const noexcept { return static_cast<double>(k_min()) * dt_; }
  double t_max() const noexcept { return static_cast<double>(k_max()) * dt_; }
  std::size_t size() const noexcept { return buf_ ? buf_->size() : 0; }

  /// W at node k (k in [k_min, k_max]).
  double at(long k) const { return (*buf_)[idx(k)] - (*buf_)[anchor_]; }
  /// W(t_{k+1}) - W(t_k).
  double increment(long k) const { return (*buf_)[idx(k + 1)] - (*buf_)[idx(k)]; }
  /// W(t_b) - W(t_a) for node indices a <= b.
  double increment(long a, long b) const { return (*buf_)[idx(b)] - (*buf_)[idx(a)]; }

  /// Node index of time t; t must sit on the grid up to rounding.
  long node_of(double t) const;
  bool covers(double a, double b) const noexcept;
  void require_covers(double a, double b, const char* where) const;

  /// Node values over [k_min, k_max] as a fresh vector.
  std::vector<double> values() const;

  friend BrownianPath sample_path(std::uint64_t seed, double t_min, double t_max, double dt);
  friend BrownianPath shift(const BrownianPath& path, double s);
  friend BrownianPath refine(const BrownianPath& path, int factor);
  friend BrownianPath path_from_values(std::vector<double> values, long k_min, double dt, std::uint64_t seed,
                                       int level);
  friend bool operator==(const BrownianPath& a, const BrownianPath& b);

 private:
  std::size_t idx(long k) const;

  std::shared_ptr<const std::vector<double>> buf_;
  std::size_t anchor_ = 0;
  std::size_t origin_ = 0;  // buffer index of t = 0 at sampling time
  double dt_ = 0.0;
  std::uint64_t seed_ = 0;
  int level_ = 0;
};

/// Forward part from stream 1, backward part from stream 2 of `seed`.
BrownianPath sample_path(std::uint64_t seed, double t_min, double t_max, double dt);

/// Path of theta_s omega: W(s + .) - W(s). s must be a grid multiple inside
/// [t_min, t_max].
BrownianPath shift(const BrownianPath& path, double s);

/// Insert Brownian-bridge midpoints; factor is a power of two. Midpoints at
/// each halving level are keyed by (seed, level, interval), so
/// refine(refine(p, 2), 2) == refine(p, 4) and coarse nodes are copied.
BrownianPath refine(const BrownianPath& path, int factor);

/// Wrap explicit node values (W at k_min*dt ... ); W(0) need not be zero in
/// `values`, the view re-anchors at node 0.
BrownianPath path_from_values(std::vector<double> values, long k_min, double dt, std::uint64_t seed = 0,
                              int level = 0);

bool operator==(const BrownianPath& a, const BrownianPath& b);

/// Stream key of the i-th forward (or backward) increment of a sampled path.
std::uint64_t forward_stream_key(std::uint64_t seed);
std::uint64_t backward_stream_key(std::uint64_t seed);

/// Binary dump: little-endian f64 t_min, t_max, dt, u64 seed, then node values.
void write_binary(const BrownianPath& path, std::ostream& os);
BrownianPath read_binary(std::istream& is);

}  // namespace kolmo
