#include "kolmo/noise.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "kolmo/model.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

namespace {

constexpr std::uint64_t kForwardStream = 1;
constexpr std::uint64_t kBackwardStream = 2;
constexpr std::uint64_t kBridgeStreamBase = 64;

long grid_count(double t, double dt) {
  const double r = std::abs(t) / dt;
  const double n = std::round(r);
  // Windows that are not grid multiples are widened to the next node.
  return static_cast<long>(std::abs(r - n) <= 1e-9 * std::max(1.0, r) ? n : std::ceil(r));
}

std::uint64_t bridge_key(std::uint64_t seed, int level) {
  return rng::stream_key(seed, kBridgeStreamBase + static_cast<std::uint64_t>(level));
}

template <class T>
void put(std::ostream& os, T v) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  os.write(reinterpret_cast<const char*>(&bits), 8);
}

template <class T>
T get(std::istream& is) {
  std::uint64_t bits = 0;
  is.read(reinterpret_cast<char*>(&bits), 8);
  if (!is) throw DomainError("truncated path dump");
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  T v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

std::uint64_t forward_stream_key(std::uint64_t seed) { return rng::stream_key(seed, kForwardStream); }
std::uint64_t backward_stream_key(std::uint64_t seed) { return rng::stream_key(seed, kBackwardStream); }

std::size_t BrownianPath::idx(long k) const {
  if (!buf_ || k < k_min() || k > k_max()) throw DomainError("path node outside the sampled window");
  return static_cast<std::size_t>(static_cast<long>(anchor_) + k);
}

long BrownianPath::node_of(double t) const {
  const double r = t / dt_;
  const double k = std::round(r);
  if (std::abs(r - k) > 1e-7 * std::max(1.0, std::abs(r)))
    throw DomainError("time " + std::to_string(t) + " is not on the path grid");
  const long kk = static_cast<long>(k);
  if (kk < k_min() || kk > k_max()) throw DomainError("time " + std::to_string(t) + " outside the path window");
  return kk;
}

bool BrownianPath::covers(double a, double b) const noexcept {
  if (!buf_) return false;
  const double eps = 1e-9 * dt_;
  return a >= t_min() - eps && b <= t_max() + eps && a <= b;
}

void BrownianPath::require_covers(double a, double b, const char* where) const {
  if (!covers(a, b))
    throw DomainError(std::string(where) + ": path window [" + std::to_string(t_min()) + ", " +
                      std::to_string(t_max()) + "] does not cover [" + std::to_string(a) + ", " +
                      std::to_string(b) + "]");
}

std::vector<double> BrownianPath::values() const {
  std::vector<double> v;
  v.reserve(size());
  for (long k = k_min(); k <= k_max(); ++k) v.push_back(at(k));
  return v;
}

BrownianPath sample_path(std::uint64_t seed, double t_min, double t_max, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("path step must be positive");
  if (!std::isfinite(t_min) || !std::isfinite(t_max) || t_min > 0.0 || t_max < 0.0)
    throw DomainError("path window must satisfy t_min <= 0 <= t_max");
  const long nb = grid_count(t_min, dt);
  const long nf = grid_count(t_max, dt);
  auto buf = std::make_shared<std::vector<double>>(static_cast<std::size_t>(nb + nf + 1), 0.0);
  const double sq = std::sqrt(dt);
  auto& v = *buf;
  rng::NormalStream fwd(forward_stream_key(seed));
  for (long i = 0; i < nf; ++i) v[nb + i + 1] = v[nb + i] + sq * fwd();
  rng::NormalStream bwd(backward_stream_key(seed));
  for (long i = 0; i < nb; ++i) v[nb - i - 1] = v[nb - i] - sq * bwd();

  BrownianPath p;
  p.buf_ = std::move(buf);
  p.anchor_ = static_cast<std::size_t>(nb);
  p.origin_ = p.anchor_;
  p.dt_ = dt;
  p.seed_ = seed;
  return p;
}

BrownianPath shift(const BrownianPath& path, double s) {
  const long k = path.node_of(s);
  BrownianPath p = path;
  p.anchor_ = static_cast<std::size_t>(static_cast<long>(path.anchor_) + k);
  return p;
}

BrownianPath refine(const BrownianPath& path, int factor) {
  if (factor < 1 || (factor & (factor - 1)) != 0) throw DomainError("refinement factor must be a power of two");
  if (factor == 1) return path;
  BrownianPath cur = path;
  for (int f = factor; f > 1; f >>= 1) {
    const int level = cur.level_ + 1;
    const std::uint64_t key = bridge_key(cur.seed_, level);
    const auto& src = *cur.buf_;
    auto out = std::make_shared<std::vector<double>>(2 * src.size() - 1);
    auto& v = *out;
    const double sd = std::sqrt(cur.dt_ / 4.0);
    // Intervals are keyed by their position relative to the sampling
    // origin, so shifted views refine consistently.
    const long origin = static_cast<long>(cur.origin_);
    for (std::size_t i = 0; i + 1 < src.size(); ++i) {
      const long kabs = static_cast<long>(i) - origin;
      v[2 * i] = src[i];
      v[2 * i + 1] = 0.5 * (src[i] + src[i + 1]) + sd * rng::normal(key, static_cast<std::uint64_t>(kabs));
    }
    v.back() = src.back();
    BrownianPath next;
    next.buf_ = std::move(out);
    next.anchor_ = 2 * cur.anchor_;
    next.origin_ = 2 * cur.origin_;
    next.dt_ = cur.dt_ / 2.0;
    next.seed_ = cur.seed_;
    next.level_ = level;
    cur = std::move(next);
  }
  return cur;
}

BrownianPath path_from_values(std::vector<double> values, long k_min, double dt, std::uint64_t seed, int level) {
  if (!(dt > 0.0)) throw DomainError("path step must be positive");
  if (k_min > 0 || static_cast<long>(values.size()) + k_min - 1 < 0)
    throw DomainError("explicit path must contain node 0");
  for (double x : values)
    if (!std::isfinite(x)) throw DomainError("path values must be finite");
  BrownianPath p;
  p.anchor_ = static_cast<std::size_t>(-k_min);
  p.origin_ = p.anchor_;
  const double w0 = values[p.anchor_];
  for (double& x : values) x -= w0;
  p.buf_ = std::make_shared<const std::vector<double>>(std::move(values));
  p.dt_ = dt;
  p.seed_ = seed;
  p.level_ = level;
  return p;
}

bool operator==(const BrownianPath& a, const BrownianPath& b) {
  if (a.dt_ != b.dt_ || a.seed_ != b.seed_ || a.level_ != b.level_ || a.k_min() != b.k_min() ||
      a.k_max() != b.k_max())
    return false;
  for (long k = a.k_min(); k <= a.k_max(); ++k)
    if (a.at(k) != b.at(k)) return false;
  return true;
}

void write_binary(const BrownianPath& path, std::ostream& os) {
  put(os, path.t_min());
  put(os, path.t_max());
  put(os, path.dt());
  put(os, path.seed());
  for (long k = path.k_min(); k <= path.k_max(); ++k) put(os, path.at(k));
}

BrownianPath read_binary(std::istream& is) {
  const double t_min = get<double>(is);
  const double t_max = get<double>(is);
  const double dt = get<double>(is);
  const auto seed = get<std::uint64_t>(is);
  if (!(dt > 0.0) || t_min > 0.0 || t_max < 0.0) throw DomainError("invalid path dump header");
  const long nb = grid_count(t_min, dt);
  const long nf = grid_count(t_max, dt);
  std::vector<double> v(static_cast<std::size_t>(nb + nf + 1));
  for (double& x : v) x = get<double>(is);
  return path_from_values(std::move(v), -nb, dt, seed);
}

}  // namespace kolmo
